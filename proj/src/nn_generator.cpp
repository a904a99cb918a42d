#include "spi/nn/generator.hpp"

#include <stdexcept>
#include <string>

namespace spi::nn {

Generator::ResidualBlock::ResidualBlock(int index, int channels)
    : conv1("g.block" + std::to_string(index) + ".conv1", channels, channels, 3),
      bn1("g.block" + std::to_string(index) + ".bn1", channels),
      act("g.block" + std::to_string(index) + ".act", channels),
      conv2("g.block" + std::to_string(index) + ".conv2", channels, channels, 3),
      bn2("g.block" + std::to_string(index) + ".bn2", channels) {}

Generator::Generator(const GeneratorConfig& cfg)
    : cfg_(cfg),
      head_("g.head", 1, cfg.channels, 9),
      head_act_("g.head.act", cfg.channels),
      bridge_("g.bridge", cfg.channels, cfg.channels, 3),
      bridge_bn_("g.bridge.bn", cfg.channels),
      tail_("g.tail", cfg.channels, 1, 9) {
    if (cfg.width <= 0 || cfg.height <= 0 || cfg.channels <= 0 || cfg.blocks <= 0)
        throw std::invalid_argument("generator configuration values must be positive");
    blocks_.reserve(cfg.blocks);
    for (int b = 0; b < cfg.blocks; ++b)
        blocks_.push_back(std::make_unique<ResidualBlock>(b, cfg.channels));
    init(cfg.init_seed);
}

void Generator::init(std::uint64_t seed) {
    std::uint64_t layer = 0;
    auto next = [&]() { return make_stream(seed, layer++); };
    Rng rng = next();
    head_.init_he(rng);
    for (auto& block : blocks_) {
        rng = next();
        block->conv1.init_he(rng);
        rng = next();
        block->conv2.init_he(rng);
    }
    rng = next();
    bridge_.init_he(rng);
    rng = next();
    tail_.init_he(rng);
}

Tensor Generator::forward(const Tensor& x, Mode mode, bool update_stats) {
    if (x.c != 1 || x.h != cfg_.height || x.w != cfg_.width)
        throw std::invalid_argument("generator configured for 1x" + std::to_string(cfg_.height) +
                                    "x" + std::to_string(cfg_.width) + " inputs, got " +
                                    x.shape_string());
    const bool stats = mode == Mode::train && update_stats;

    Tensor h = head_.forward(x);
    check_finite(h, "g.head");
    h = head_act_.forward(h);
    const Tensor head_out = h;

    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        ResidualBlock& blk = *blocks_[b];
        blk.input = h;
        Tensor t = blk.conv1.forward(h);
        t = blk.bn1.forward(t, mode, stats);
        t = blk.act.forward(t);
        t = blk.conv2.forward(t);
        t = blk.bn2.forward(t, mode, stats);
        if (cfg_.skip_enabled) t.data += blk.input.data;
        check_finite(t, "g.block" + std::to_string(b));
        h = std::move(t);
    }

    Tensor t = bridge_.forward(h);
    t = bridge_bn_.forward(t, mode, stats);
    if (cfg_.skip_enabled) t.data += head_out.data;
    check_finite(t, "g.bridge");

    t = tail_.forward(t);
    t = out_act_.forward(t);
    check_finite(t, "g.tail");
    return t;
}

Tensor Generator::backward(const Tensor& grad_out) {
    Tensor g = out_act_.backward(grad_out);
    g = tail_.backward(g);

    // Bridge: the global skip duplicates the gradient onto the head output.
    Tensor head_skip_grad;
    if (cfg_.skip_enabled) head_skip_grad = g;
    g = bridge_bn_.backward(g);
    g = bridge_.backward(g);

    for (std::size_t b = blocks_.size(); b-- > 0;) {
        ResidualBlock& blk = *blocks_[b];
        Tensor skip_grad;
        if (cfg_.skip_enabled) skip_grad = g;
        Tensor t = blk.bn2.backward(g);
        t = blk.conv2.backward(t);
        t = blk.act.backward(t);
        t = blk.bn1.backward(t);
        t = blk.conv1.backward(t);
        if (cfg_.skip_enabled) t.data += skip_grad.data;
        g = std::move(t);
    }

    if (cfg_.skip_enabled) g.data += head_skip_grad.data;
    g = head_act_.backward(g);
    return head_.backward(g);
}

std::vector<Param*> Generator::params() {
    std::vector<Param*> out;
    auto add = [&out](std::vector<Param*> p) { out.insert(out.end(), p.begin(), p.end()); };
    add(head_.params());
    add(head_act_.params());
    for (auto& blk : blocks_) {
        add(blk->conv1.params());
        add(blk->bn1.params());
        add(blk->act.params());
        add(blk->conv2.params());
        add(blk->bn2.params());
    }
    add(bridge_.params());
    add(bridge_bn_.params());
    add(tail_.params());
    return out;
}

std::vector<NamedTensor> Generator::named_tensors() {
    std::vector<NamedTensor> out;
    auto add = [&out](std::vector<NamedTensor> t) {
        out.insert(out.end(), t.begin(), t.end());
    };
    add(head_.named_tensors());
    add(head_act_.named_tensors());
    for (auto& blk : blocks_) {
        add(blk->conv1.named_tensors());
        add(blk->bn1.named_tensors());
        add(blk->act.named_tensors());
        add(blk->conv2.named_tensors());
        add(blk->bn2.named_tensors());
    }
    add(bridge_.named_tensors());
    add(bridge_bn_.named_tensors());
    add(tail_.named_tensors());
    return out;
}

void Generator::zero_grad() {
    for (Param* p : params()) p->grad.setZero();
}

int Generator::parameter_count() const {
    int count = 0;
    for (Param* p : const_cast<Generator*>(this)->params()) count += static_cast<int>(p->value.size());
    return count;
}

}  // namespace spi::nn
