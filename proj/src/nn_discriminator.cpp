#include "spi/nn/discriminator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spi/errors.hpp"

namespace spi::nn {

Discriminator::ConvUnit::ConvUnit(const std::string& name, int in_c, int out_c, int stride,
                                  bool normalized)
    : conv(name, in_c, out_c, 3, stride), act(0.2) {
    if (normalized) bn = std::make_unique<BatchNorm2d>(name + ".bn", out_c);
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
    if (cfg.base_channels <= 0 || cfg.stages <= 0)
        throw std::invalid_argument("discriminator configuration values must be positive");
    if (cfg.width % (1 << cfg.stages) != 0 || cfg.height % (1 << cfg.stages) != 0)
        throw std::invalid_argument("input sides must be divisible by 2^stages");

    int channels = cfg.base_channels;
    units_.push_back(std::make_unique<ConvUnit>("d.conv0", 1, channels, 1, false));
    for (int s = 0; s < cfg.stages; ++s) {
        if (s > 0) {
            units_.push_back(std::make_unique<ConvUnit>("d.conv" + std::to_string(2 * s),
                                                        channels, channels * 2, 1, true));
            channels *= 2;
        }
        units_.push_back(std::make_unique<ConvUnit>("d.conv" + std::to_string(2 * s + 1),
                                                    channels, channels, 2, true));
    }
    const int fh = cfg.height >> cfg.stages;
    const int fw = cfg.width >> cfg.stages;
    fc_ = std::make_unique<Linear>("d.fc", channels * fh * fw, 1);
    init(cfg.init_seed);
}

void Discriminator::init(std::uint64_t seed) {
    std::uint64_t layer = 0;
    for (auto& unit : units_) {
        Rng rng = make_stream(seed, layer++);
        unit->conv.init_he(rng);
    }
    Rng rng = make_stream(seed, layer);
    fc_->init_he(rng);
}

Eigen::VectorXd Discriminator::forward(const Tensor& x, Mode mode, bool update_stats) {
    if (x.c != 1 || x.h != cfg_.height || x.w != cfg_.width)
        throw std::invalid_argument("discriminator configured for 1x" +
                                    std::to_string(cfg_.height) + "x" + std::to_string(cfg_.width) +
                                    " inputs, got " + x.shape_string());
    const bool stats = mode == Mode::train && update_stats;
    Tensor h = x;
    for (auto& unit : units_) {
        h = unit->conv.forward(h);
        if (unit->bn) h = unit->bn->forward(h, mode, stats);
        h = unit->act.forward(h);
        check_finite(h, unit->conv.name());
    }
    const Eigen::MatrixXd logits = fc_->forward(h);  // n x 1
    probs_ = Eigen::VectorXd(x.n);
    for (int i = 0; i < x.n; ++i) {
        const double v = logits(i, 0);
        probs_(i) = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    if (!probs_.allFinite()) throw NumericalError("non-finite activation in layer 'd.fc'");
    return probs_;
}

Tensor Discriminator::backward(const Eigen::VectorXd& grad_probs) {
    Eigen::MatrixXd grad_logits(grad_probs.size(), 1);
    for (int i = 0; i < grad_probs.size(); ++i)
        grad_logits(i, 0) = grad_probs(i) * probs_(i) * (1.0 - probs_(i));
    Tensor g = fc_->backward(grad_logits);
    for (std::size_t u = units_.size(); u-- > 0;) {
        g = units_[u]->act.backward(g);
        if (units_[u]->bn) g = units_[u]->bn->backward(g);
        g = units_[u]->conv.backward(g);
    }
    return g;
}

std::vector<Param*> Discriminator::params() {
    std::vector<Param*> out;
    for (auto& unit : units_) {
        auto p = unit->conv.params();
        out.insert(out.end(), p.begin(), p.end());
        if (unit->bn) {
            auto q = unit->bn->params();
            out.insert(out.end(), q.begin(), q.end());
        }
    }
    auto p = fc_->params();
    out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<NamedTensor> Discriminator::named_tensors() {
    std::vector<NamedTensor> out;
    for (auto& unit : units_) {
        auto t = unit->conv.named_tensors();
        out.insert(out.end(), t.begin(), t.end());
        if (unit->bn) {
            auto u = unit->bn->named_tensors();
            out.insert(out.end(), u.begin(), u.end());
        }
    }
    auto t = fc_->named_tensors();
    out.insert(out.end(), t.begin(), t.end());
    return out;
}

void Discriminator::zero_grad() {
    for (Param* p : params()) p->grad.setZero();
}

}  // namespace spi::nn
