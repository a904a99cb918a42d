#include "spi/nn/feature_extractor.hpp"

#include <array>
#include <stdexcept>

#include "spi/nn/serialize.hpp"

namespace spi::nn {

namespace {

// Output channels of the 16 convolutions and the set of convs followed by a
// 2x2 max-pool in the 19-layer reference topology.
constexpr std::array<int, 16> kChannels = {64,  64,  128, 128, 256, 256, 256, 256,
                                           512, 512, 512, 512, 512, 512, 512, 512};
constexpr std::array<int, 5> kPoolAfter = {2, 4, 8, 12, 16};

bool pool_follows(int conv_index) {  // 1-based
    for (int p : kPoolAfter)
        if (p == conv_index) return true;
    return false;
}

constexpr char kWeightsMagic[4] = {'S', 'P', 'I', 'W'};

}  // namespace

int FeatureExtractor::max_depth() { return static_cast<int>(kChannels.size()); }

FeatureExtractor::FeatureExtractor(const FeatureExtractorConfig& cfg) : cfg_(cfg) {
    if (cfg.k < 1 || cfg.k > max_depth())
        throw std::invalid_argument("feature tap k must lie in [1, " +
                                    std::to_string(max_depth()) + "], got " +
                                    std::to_string(cfg.k));
    int in_c = 3;
    for (int i = 0; i < cfg.k; ++i) {
        auto conv = std::make_unique<Conv2d>("feat.conv" + std::to_string(i + 1), in_c,
                                             kChannels[static_cast<std::size_t>(i)], 3);
        conv->set_frozen(true);
        convs_.push_back(std::move(conv));
        relus_.emplace_back();
        pools_.push_back(pool_follows(i + 1) ? std::make_unique<MaxPool2d>() : nullptr);
        in_c = kChannels[static_cast<std::size_t>(i)];
    }

    if (!cfg.weights_path.empty()) {
        const NamedFile file = load_named_file(cfg.weights_path, kWeightsMagic);
        fill_from_blocks(file, named_tensors());
    } else {
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            Rng rng = make_stream(cfg.seed, i);
            convs_[i]->init_he(rng);
        }
    }
}

Tensor FeatureExtractor::features(const Tensor& gray) {
    if (gray.c != 1)
        throw std::invalid_argument("feature extractor expects grayscale (1-channel) input");
    Tensor x(gray.n, 3, gray.h, gray.w);
    const int hw = gray.h * gray.w;
    for (int ni = 0; ni < gray.n; ++ni)
        for (int ci = 0; ci < 3; ++ci)
            x.data.segment((static_cast<Eigen::Index>(ni) * 3 + ci) * hw, hw) =
                gray.data.segment(static_cast<Eigen::Index>(ni) * hw, hw);

    for (std::size_t i = 0; i < convs_.size(); ++i) {
        x = convs_[i]->forward(x);
        x = relus_[i].forward(x);
        if (pools_[i]) x = pools_[i]->forward(x);
        check_finite(x, convs_[i]->name());
    }
    return x;
}

Tensor FeatureExtractor::backward_to_input(const Tensor& grad_features) {
    Tensor g = grad_features;
    for (std::size_t i = convs_.size(); i-- > 0;) {
        if (pools_[i]) g = pools_[i]->backward(g);
        g = relus_[i].backward(g);
        g = convs_[i]->backward(g);  // frozen: no weight grads accumulate
    }
    // Undo the grayscale->3-channel replication by summing channel grads.
    Tensor out(g.n, 1, g.h, g.w);
    const int hw = g.h * g.w;
    for (int ni = 0; ni < g.n; ++ni)
        for (int ci = 0; ci < 3; ++ci)
            out.data.segment(static_cast<Eigen::Index>(ni) * hw, hw) +=
                g.data.segment((static_cast<Eigen::Index>(ni) * 3 + ci) * hw, hw);
    return out;
}

std::vector<NamedTensor> FeatureExtractor::named_tensors() {
    std::vector<NamedTensor> out;
    for (auto& conv : convs_) {
        auto t = conv->named_tensors();
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

void save_feature_weights(FeatureExtractor& extractor, const std::string& path) {
    save_named_file(path, kWeightsMagic, "k=" + std::to_string(extractor.config().k),
                    extractor.named_tensors());
}

}  // namespace spi::nn
