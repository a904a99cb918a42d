#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spi/nn/layers.hpp"
#include "spi/nn/tensor.hpp"

namespace spi::nn {

// Frozen convolutional feature map used by the perceptual similarity loss.
// The topology mirrors the classic 19-layer VGG stack up to its k-th
// convolution: 3x3 convs with channels 64,64,128,128,256x4,512x8, rectified,
// with 2x2 max-pools after convs 2, 4, 8, 12 and 16. Grayscale inputs are
// replicated to three channels. Weights either load from a named-block file
// or are drawn once from a seeded generator; they never receive gradients.
struct FeatureExtractorConfig {
    int k = 11;                // feature tap: activation of the k-th conv
    std::string weights_path;  // empty -> seeded random fixed weights
    std::uint64_t seed = 3;
};

class FeatureExtractor {
public:
    explicit FeatureExtractor(const FeatureExtractorConfig& cfg);

    // Forward to the k-th conv activation (plus the trailing pool when the
    // topology places one right after conv k). Caches for backward.
    Tensor features(const Tensor& gray);
    // Gradient wrt the grayscale input; extractor weights stay untouched.
    Tensor backward_to_input(const Tensor& grad_features);

    std::vector<NamedTensor> named_tensors();
    const FeatureExtractorConfig& config() const { return cfg_; }
    bool loaded_from_file() const { return !cfg_.weights_path.empty(); }

    // Number of convolutions available in the topology (16).
    static int max_depth();

private:
    FeatureExtractorConfig cfg_;
    std::vector<std::unique_ptr<Conv2d>> convs_;
    std::vector<ReLU> relus_;
    std::vector<std::unique_ptr<MaxPool2d>> pools_;  // indexed per conv, null if none
};

// Writes extractor weights as a named-block file (magic "SPIW"); the
// counterpart loader is the weights_path mode of the constructor.
void save_feature_weights(FeatureExtractor& extractor, const std::string& path);

}  // namespace spi::nn
