#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spi/image.hpp"
#include "spi/nn/adam.hpp"
#include "spi/nn/discriminator.hpp"
#include "spi/nn/feature_extractor.hpp"
#include "spi/nn/generator.hpp"
#include "spi/nn/losses.hpp"
#include "spi/scanning_basis.hpp"

namespace spi::nn {

// Hyperparameters for adversarial training of the reconstruction network.
struct TrainConfig {
    double learning_rate = 8e-5;
    int batch_size = 64;
    int epochs = 150;
    double weight_decay = 5e-4;
    double lambda_sim = 6e-3;
    double lambda_adv = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument on bad values
    AdamConfig adam() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double l_mse = 0.0;
    double l_sim = 0.0;
    double l_adv = 0.0;
    double l_rec = 0.0;
    double val_psnr = 0.0;
    double val_ssim = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    bool aborted = false;
    std::string abort_reason;
};

// One optimizer step on the discriminator's binary cross-entropy (real
// images labeled 1, generator outputs labeled 0). The generator forward is
// treated as a constant: no gradient flows into it and its parameters and
// statistics are untouched. Returns the pre-step loss.
double discriminator_step(Discriminator& d, Generator& g, Adam& opt_d,
                          const Tensor& real, const Tensor& noisy);

// One optimizer step on the generator's combined reconstruction objective
// (pixel + lambda_sim * feature + lambda_adv * adversarial). Discriminator
// and feature-extractor parameter values are untouched. Returns the
// pre-step loss components.
LossParts generator_step(Generator& g, Discriminator& d, FeatureExtractor& feat,
                         Adam& opt_g, const Tensor& real, const Tensor& noisy,
                         double lambda_sim, double lambda_adv);

// Full adversarial training loop. Per minibatch: simulate acquisition of
// each ground-truth image through phi, reconstruct the minimum-norm input
// estimate, then take one discriminator step followed by one generator step.
// Validation metrics are computed in inference mode on noiseless inputs
// after every epoch, a log line is emitted to *log when given, and the
// checkpoint file is rewritten after each completed epoch. A numerical
// failure aborts training and keeps the last completed epoch's checkpoint.
TrainResult train(Generator& g, Discriminator& d, FeatureExtractor& feat,
                  const std::vector<Image>& train_images,
                  const std::vector<Image>& val_images,
                  const ScanningBasis& phi, const TrainConfig& cfg,
                  const std::string& checkpoint_path, std::ostream* log = nullptr);

}  // namespace spi::nn
