#include "spi/nn/adam.hpp"

#include <cmath>

namespace spi::nn {

Adam::Adam(std::vector<Param*> params, const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Param* p : params_) {
        m_.push_back(Eigen::VectorXd::Zero(p->value.size()));
        v_.push_back(Eigen::VectorXd::Zero(p->value.size()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        Eigen::VectorXd g = p.grad;
        if (p.decay && cfg_.weight_decay != 0.0) g += cfg_.weight_decay * p.value;
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        const Eigen::ArrayXd mhat = m_[i].array() / bc1;
        const Eigen::ArrayXd vhat = v_[i].array() / bc2;
        p.value.array() -= cfg_.learning_rate * mhat / (vhat.sqrt() + cfg_.eps);
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->grad.setZero();
}

}  // namespace spi::nn
