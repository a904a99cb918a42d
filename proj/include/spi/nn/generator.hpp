#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spi/nn/layers.hpp"
#include "spi/nn/tensor.hpp"

namespace spi::nn {

// Residual refiner: a 9x9 head into F channels, B residual blocks
// (3x3 conv, batch-norm, channel-wise rectifier, 3x3 conv, batch-norm,
// additive identity), a 3x3 bridge with a global skip from the head output,
// and a 9x9 tail squashed onto [0,1]. skip_enabled=false drops both the
// per-block and the global additive identities (the ablation toggle) while
// keeping parameter shapes identical.
struct GeneratorConfig {
    int width = 64;
    int height = 64;
    int channels = 64;  // F
    int blocks = 14;    // B; head + B residual + bridge + tail = B + 3 conv blocks
    bool skip_enabled = true;
    std::uint64_t init_seed = 1;
};

class Generator {
public:
    explicit Generator(const GeneratorConfig& cfg);

    // Forward pass over an Nx1xHxW batch in [0,1]. In eval mode batch-norm
    // uses running statistics, so the output is batch-independent and
    // deterministic. update_stats only matters in train mode.
    Tensor forward(const Tensor& x, Mode mode, bool update_stats);
    // Backpropagates dL/d(output); accumulates parameter grads, returns
    // dL/d(input).
    Tensor backward(const Tensor& grad_out);

    std::vector<Param*> params();
    std::vector<NamedTensor> named_tensors();
    void init(std::uint64_t seed);
    void zero_grad();

    const GeneratorConfig& config() const { return cfg_; }
    int parameter_count() const;

private:
    struct ResidualBlock {
        ResidualBlock(int index, int channels);
        Conv2d conv1;
        BatchNorm2d bn1;
        PReLU act;
        Conv2d conv2;
        BatchNorm2d bn2;
        Tensor input;  // cached for the skip path
    };

    GeneratorConfig cfg_;
    Conv2d head_;
    PReLU head_act_;
    std::vector<std::unique_ptr<ResidualBlock>> blocks_;
    Conv2d bridge_;
    BatchNorm2d bridge_bn_;
    Conv2d tail_;
    Sigmoid out_act_;
};

}  // namespace spi::nn
