#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spi/nn/tensor.hpp"
#include "spi/rng.hpp"

namespace spi::nn {

// Learnable flat parameter with its gradient accumulator. `decay` marks
// parameters subject to L2 weight decay (conv/linear weights only; biases,
// normalization and rectifier-slope parameters are exempt).
struct Param {
    Eigen::VectorXd value;
    Eigen::VectorXd grad;
    bool decay = false;

    void resize(int size) {
        value = Eigen::VectorXd::Zero(size);
        grad = Eigen::VectorXd::Zero(size);
    }
};

// Named view of a parameter or buffer for serialization.
struct NamedTensor {
    std::string name;
    std::vector<int> dims;
    Eigen::VectorXd* data = nullptr;
};

enum class Mode { train, eval };

// 2-D convolution with square kernels, SAME-style padding (pad = k/2) and
// configurable stride. Forward caches the im2col matrices for backward.
class Conv2d {
public:
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride = 1);

    void init_he(Rng& rng);
    Tensor forward(const Tensor& x);
    // Returns grad wrt input; accumulates weight/bias grads unless frozen.
    Tensor backward(const Tensor& grad_out);
    void set_frozen(bool frozen) { frozen_ = frozen; }

    std::vector<Param*> params() { return {&weight, &bias}; }
    std::vector<NamedTensor> named_tensors();

    int out_height(int h) const { return (h + 2 * (kernel_ / 2) - kernel_) / stride_ + 1; }
    int out_width(int w) const { return (w + 2 * (kernel_ / 2) - kernel_) / stride_ + 1; }
    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }
    const std::string& name() const { return name_; }

    Param weight;  // out_c x in_c x k x k, row-major
    Param bias;    // out_c

private:
    std::string name_;
    int in_c_, out_c_, kernel_, stride_;
    bool frozen_ = false;
    Tensor input_;           // cached forward input
    Eigen::MatrixXd cols_;   // cached im2col of the whole batch
};

// Per-channel batch normalization with running statistics, matching the
// usual convention: biased variance normalizes the batch, the unbiased
// variance updates the running estimate, momentum 0.1, eps 1e-5.
class BatchNorm2d {
public:
    BatchNorm2d(std::string name, int channels);

    Tensor forward(const Tensor& x, Mode mode, bool update_stats);
    Tensor backward(const Tensor& grad_out);

    std::vector<Param*> params() { return {&gamma, &beta}; }
    std::vector<NamedTensor> named_tensors();
    const std::string& name() const { return name_; }

    Param gamma;
    Param beta;
    Eigen::VectorXd running_mean;
    Eigen::VectorXd running_var;

private:
    std::string name_;
    int channels_;
    Mode cached_mode_ = Mode::train;
    Tensor xhat_;             // normalized input
    Eigen::VectorXd inv_std_;  // per channel, for the cached mode
};

// Rectifier with one learnable negative slope per channel.
class PReLU {
public:
    PReLU(std::string name, int channels, double initial_slope = 0.25);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    std::vector<Param*> params() { return {&slope}; }
    std::vector<NamedTensor> named_tensors();

    Param slope;

private:
    std::string name_;
    Tensor input_;
};

// Fixed-slope leaky rectifier (slope 0.2 unless stated otherwise).
class LeakyReLU {
public:
    explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    double slope_;
    Tensor input_;
};

class ReLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    Tensor input_;
};

// Numerically guarded logistic squashing onto (0,1).
class Sigmoid {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    Tensor output_;
};

// 2x2 max pooling with stride 2 (inputs must have even sides).
class MaxPool2d {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

private:
    Tensor input_;
    std::vector<int> argmax_;
};

// Fully connected layer over flattened per-image features.
class Linear {
public:
    Linear(std::string name, int in_features, int out_features);

    void init_he(Rng& rng);
    Eigen::MatrixXd forward(const Tensor& x);          // batch x out
    Tensor backward(const Eigen::MatrixXd& grad_out);  // grad wrt input tensor

    std::vector<Param*> params() { return {&weight, &bias}; }
    std::vector<NamedTensor> named_tensors();

    Param weight;  // out x in, row-major
    Param bias;    // out

private:
    std::string name_;
    int in_f_, out_f_;
    Tensor input_;
};

// Throws NumericalError naming `layer` if any entry is not finite.
void check_finite(const Tensor& t, const std::string& layer);

}  // namespace spi::nn
