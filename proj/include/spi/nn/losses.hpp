#pragma once

#include <Eigen/Core>

#include "spi/nn/discriminator.hpp"
#include "spi/nn/feature_extractor.hpp"
#include "spi/nn/tensor.hpp"

namespace spi::nn {

// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before any
// logarithm; outside the clamp the gradient is zero (the clamped value is
// constant there).
constexpr double kProbClamp = 1e-7;

struct LossValue {
    double value = 0.0;
    Tensor grad;  // wrt the reconstruction argument
};

// Pixel loss: mean over the batch of the per-image mean squared error,
// i.e. sum((x - xhat)^2) / (M * C * H * W).
LossValue mse_loss(const Tensor& x, const Tensor& xhat);
double mse_loss_value(const Tensor& x, const Tensor& xhat);

// Feature-space loss: squared feature difference averaged over batch,
// channels and spatial positions. Gradient flows to xhat only; the
// extractor and x are treated as constants.
LossValue perceptual_loss(FeatureExtractor& feat, const Tensor& x, const Tensor& xhat);
double perceptual_loss_value(FeatureExtractor& feat, const Tensor& x, const Tensor& xhat);

// Generator-side adversarial loss on discriminator outputs:
// (1/M) sum_i -log(clamp(p_i)).
double adversarial_loss_value(const Eigen::VectorXd& probs);
// d/dp of the above (zero where the clamp saturates).
Eigen::VectorXd adversarial_loss_grad(const Eigen::VectorXd& probs);

struct LossParts {
    double mse = 0.0;
    double sim = 0.0;
    double adv = 0.0;
    double total = 0.0;  // mse + lambda_sim * sim + lambda_adv * adv
};

// Composite reconstruction objective. Runs the discriminator in the given
// mode without updating its running statistics; pure evaluation.
LossParts total_loss(const Tensor& x, const Tensor& xhat, FeatureExtractor& feat,
                     Discriminator& d, double lambda_sim, double lambda_adv,
                     Mode mode = Mode::train);

}  // namespace spi::nn
