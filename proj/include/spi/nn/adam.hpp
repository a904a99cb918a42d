#pragma once

#include <vector>

#include <Eigen/Core>

#include "spi/nn/layers.hpp"

namespace spi::nn {

struct AdamConfig {
    double learning_rate = 8e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // L2 term folded into the gradient of decaying params
};

// Adaptive-moment optimizer with bias correction. Weight decay is added to
// the gradient (classic L2 regularization) for parameters flagged `decay`.
class Adam {
public:
    Adam(std::vector<Param*> params, const AdamConfig& cfg);

    void step();
    void zero_grad();
    int steps_taken() const { return t_; }

private:
    std::vector<Param*> params_;
    AdamConfig cfg_;
    std::vector<Eigen::VectorXd> m_;
    std::vector<Eigen::VectorXd> v_;
    int t_ = 0;
};

}  // namespace spi::nn
