#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spi/nn/layers.hpp"
#include "spi/nn/tensor.hpp"

namespace spi::nn {

// Patch classifier with a plain feed-forward conv stack: a stride-1 entry
// conv (no normalization), then one stride-2 downsampling conv per stage
// with channel doubling between stages, each followed by batch-norm and a
// leaky rectifier; a single fully connected layer produces one logit, and a
// sigmoid maps it into (0,1). base_channels=64, stages=4 gives the
// 64->128->256->512 progression at 64x64 inputs.
struct DiscriminatorConfig {
    int width = 64;
    int height = 64;
    int base_channels = 64;
    int stages = 4;  // number of stride-2 downsamplings
    std::uint64_t init_seed = 2;
};

class Discriminator {
public:
    explicit Discriminator(const DiscriminatorConfig& cfg);

    // Probabilities D(x) in (0,1), one per batch image.
    Eigen::VectorXd forward(const Tensor& x, Mode mode, bool update_stats);
    // Backpropagates dL/dD(x); accumulates parameter grads, returns
    // dL/d(input) for the generator pathway.
    Tensor backward(const Eigen::VectorXd& grad_probs);

    std::vector<Param*> params();
    std::vector<NamedTensor> named_tensors();
    void init(std::uint64_t seed);
    void zero_grad();

    const DiscriminatorConfig& config() const { return cfg_; }

private:
    struct ConvUnit {
        ConvUnit(const std::string& name, int in_c, int out_c, int stride, bool normalized);
        Conv2d conv;
        std::unique_ptr<BatchNorm2d> bn;  // null for the entry conv
        LeakyReLU act;
    };

    DiscriminatorConfig cfg_;
    std::vector<std::unique_ptr<ConvUnit>> units_;
    std::unique_ptr<Linear> fc_;
    Eigen::VectorXd probs_;  // cached sigmoid outputs
};

}  // namespace spi::nn
