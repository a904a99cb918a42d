#include "spi/nn/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace spi::nn {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("loss arguments must share shapes, got " + a.shape_string() +
                                    " vs " + b.shape_string());
}

}  // namespace

double mse_loss_value(const Tensor& x, const Tensor& xhat) {
    check_same_shape(x, xhat);
    return (x.data - xhat.data).squaredNorm() / static_cast<double>(x.size());
}

LossValue mse_loss(const Tensor& x, const Tensor& xhat) {
    check_same_shape(x, xhat);
    LossValue out;
    const double scale = 1.0 / static_cast<double>(x.size());
    out.value = (x.data - xhat.data).squaredNorm() * scale;
    out.grad = Tensor(xhat.n, xhat.c, xhat.h, xhat.w);
    out.grad.data = 2.0 * scale * (xhat.data - x.data);
    return out;
}

double perceptual_loss_value(FeatureExtractor& feat, const Tensor& x, const Tensor& xhat) {
    check_same_shape(x, xhat);
    const Tensor fx = feat.features(x);
    const Tensor fhat = feat.features(xhat);
    return (fx.data - fhat.data).squaredNorm() / static_cast<double>(fx.size());
}

LossValue perceptual_loss(FeatureExtractor& feat, const Tensor& x, const Tensor& xhat) {
    check_same_shape(x, xhat);
    // Order matters: the extractor keeps one cache, and backward must see
    // the xhat pass.
    const Tensor fx = feat.features(x);
    const Tensor fhat = feat.features(xhat);
    const double scale = 1.0 / static_cast<double>(fx.size());

    LossValue out;
    out.value = (fx.data - fhat.data).squaredNorm() * scale;
    Tensor grad_feat(fhat.n, fhat.c, fhat.h, fhat.w);
    grad_feat.data = 2.0 * scale * (fhat.data - fx.data);
    out.grad = feat.backward_to_input(grad_feat);
    return out;
}

double adversarial_loss_value(const Eigen::VectorXd& probs) {
    if (probs.size() == 0) throw std::invalid_argument("adversarial loss needs a non-empty batch");
    double total = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        const double p = std::min(std::max(probs(i), kProbClamp), 1.0 - kProbClamp);
        total -= std::log(p);
    }
    return total / static_cast<double>(probs.size());
}

Eigen::VectorXd adversarial_loss_grad(const Eigen::VectorXd& probs) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(probs.size());
    const double m = static_cast<double>(probs.size());
    for (int i = 0; i < probs.size(); ++i)
        if (probs(i) > kProbClamp && probs(i) < 1.0 - kProbClamp)
            grad(i) = -1.0 / (probs(i) * m);
    return grad;
}

LossParts total_loss(const Tensor& x, const Tensor& xhat, FeatureExtractor& feat,
                     Discriminator& d, double lambda_sim, double lambda_adv, Mode mode) {
    LossParts parts;
    parts.mse = mse_loss_value(x, xhat);
    parts.sim = perceptual_loss_value(feat, x, xhat);
    parts.adv = adversarial_loss_value(d.forward(xhat, mode, /*update_stats=*/false));
    parts.total = parts.mse + lambda_sim * parts.sim + lambda_adv * parts.adv;
    return parts;
}

}  // namespace spi::nn
