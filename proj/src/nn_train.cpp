#include "spi/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "spi/acquire.hpp"
#include "spi/errors.hpp"
#include "spi/linear_recovery.hpp"
#include "spi/metrics.hpp"
#include "spi/nn/checkpoint.hpp"
#include "spi/rng.hpp"

namespace spi::nn {

namespace {

// Mean binary cross-entropy for a batch labeled `target` (1 = real,
// 0 = generated), with the same probability clamp as the adversarial loss.
// grad receives d(loss)/d(prob); coordinates outside the clamp get zero.
double bce(const Eigen::VectorXd& probs, double target, Eigen::VectorXd& grad) {
    const int m = static_cast<int>(probs.size());
    grad = Eigen::VectorXd::Zero(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        const double p = probs[i];
        const bool clamped_low = p < kProbClamp;
        const bool clamped_high = p > 1.0 - kProbClamp;
        const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        if (target == 1.0) {
            total -= std::log(q);
            if (!clamped_low && !clamped_high) grad[i] = -1.0 / (q * m);
        } else {
            total -= std::log(1.0 - q);
            if (!clamped_low && !clamped_high) grad[i] = 1.0 / ((1.0 - q) * m);
        }
    }
    return total / m;
}

Tensor reconstruct_batch(const std::vector<Image>& images, const std::vector<int>& indices,
                         const ScanningBasis& phi, const L2Reconstructor& recon,
                         double sigma, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<Image> inputs;
    inputs.reserve(indices.size());
    for (const int idx : indices) {
        const std::uint64_t noise_seed =
            mix_seed(seed, epoch * static_cast<std::uint64_t>(images.size()) + idx);
        const MeasurementVector y = acquire(phi, images[idx], sigma, noise_seed);
        inputs.push_back(recon.reconstruct(y));
    }
    return batch_from_images(inputs);
}

Tensor gather_batch(const std::vector<Image>& images, const std::vector<int>& indices) {
    std::vector<Image> selected;
    selected.reserve(indices.size());
    for (const int idx : indices) selected.push_back(images[idx]);
    return batch_from_images(selected);
}

}  // namespace

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (lambda_sim < 0.0 || lambda_adv < 0.0)
        throw std::invalid_argument("loss weights must be >= 0");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
}

AdamConfig TrainConfig::adam() const {
    AdamConfig a;
    a.learning_rate = learning_rate;
    a.beta1 = beta1;
    a.beta2 = beta2;
    a.eps = adam_eps;
    a.weight_decay = weight_decay;
    return a;
}

double discriminator_step(Discriminator& d, Generator& g, Adam& opt_d,
                          const Tensor& real, const Tensor& noisy) {
    if (real.n != noisy.n) throw std::invalid_argument("batch sizes differ");
    // Generated images enter as constants: batch statistics are used but the
    // generator's running statistics, parameters, and gradients stay put.
    const Tensor fake = g.forward(noisy, Mode::train, /*update_stats=*/false);

    opt_d.zero_grad();
    Eigen::VectorXd grad;
    const Eigen::VectorXd real_probs = d.forward(real, Mode::train, /*update_stats=*/true);
    const double real_loss = bce(real_probs, 1.0, grad);
    d.backward(grad);
    const Eigen::VectorXd fake_probs = d.forward(fake, Mode::train, /*update_stats=*/true);
    const double fake_loss = bce(fake_probs, 0.0, grad);
    d.backward(grad);

    const double loss = real_loss + fake_loss;
    if (!std::isfinite(loss)) throw NumericalError("discriminator loss is not finite");
    opt_d.step();
    return loss;
}

LossParts generator_step(Generator& g, Discriminator& d, FeatureExtractor& feat,
                         Adam& opt_g, const Tensor& real, const Tensor& noisy,
                         double lambda_sim, double lambda_adv) {
    if (real.n != noisy.n) throw std::invalid_argument("batch sizes differ");
    opt_g.zero_grad();
    const Tensor xhat = g.forward(noisy, Mode::train, /*update_stats=*/true);

    const LossValue pixel = mse_loss(real, xhat);
    Tensor grad = pixel.grad;

    LossParts parts;
    parts.mse = pixel.value;
    parts.sim = 0.0;
    parts.adv = 0.0;
    if (lambda_sim != 0.0) {
        const LossValue sim = perceptual_loss(feat, real, xhat);
        parts.sim = sim.value;
        grad.data += lambda_sim * sim.grad.data;
    }
    if (lambda_adv != 0.0) {
        // The discriminator is used as a frozen critic here: its parameter
        // values and running statistics are left untouched (stray gradient
        // accumulation is cleared at the start of the next discriminator
        // step).
        const Eigen::VectorXd probs = d.forward(xhat, Mode::train, /*update_stats=*/false);
        parts.adv = adversarial_loss_value(probs);
        const Tensor adv_grad = d.backward(adversarial_loss_grad(probs));
        grad.data += lambda_adv * adv_grad.data;
    }
    parts.total = parts.mse + lambda_sim * parts.sim + lambda_adv * parts.adv;
    if (!std::isfinite(parts.total)) throw NumericalError("generator loss is not finite");

    g.backward(grad);
    opt_g.step();
    return parts;
}

TrainResult train(Generator& g, Discriminator& d, FeatureExtractor& feat,
                  const std::vector<Image>& train_images,
                  const std::vector<Image>& val_images,
                  const ScanningBasis& phi, const TrainConfig& cfg,
                  const std::string& checkpoint_path, std::ostream* log) {
    cfg.validate();
    if (train_images.empty()) throw std::invalid_argument("training set is empty");
    const int w = g.config().width;
    const int h = g.config().height;
    for (const Image& img : train_images)
        if (img.width != w || img.height != h)
            throw std::invalid_argument("training image size does not match the generator");
    for (const Image& img : val_images)
        if (img.width != w || img.height != h)
            throw std::invalid_argument("validation image size does not match the generator");
    if (phi.n != w * h)
        throw std::invalid_argument("scanning basis pixel count does not match the generator");

    Adam opt_g(g.params(), cfg.adam());
    Adam opt_d(d.params(), cfg.adam());
    const L2Reconstructor recon(phi, make_sparsifying_basis(BasisKind::identity, w, h));

    const int n_train = static_cast<int>(train_images.size());
    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch + 1;
        try {
            Rng shuffle_rng = make_stream(cfg.seed, 1000000 + static_cast<std::uint64_t>(epoch));
            const std::vector<int> order = permutation(n_train, shuffle_rng);

            double sum_mse = 0.0, sum_sim = 0.0, sum_adv = 0.0, sum_rec = 0.0;
            int counted = 0;
            for (int start = 0; start < n_train; start += cfg.batch_size) {
                const int stop = std::min(start + cfg.batch_size, n_train);
                const std::vector<int> indices(order.begin() + start, order.begin() + stop);
                const Tensor real = gather_batch(train_images, indices);
                const Tensor noisy =
                    reconstruct_batch(train_images, indices, phi, recon, cfg.noise_sigma,
                                      cfg.seed, static_cast<std::uint64_t>(epoch));
                discriminator_step(d, g, opt_d, real, noisy);
                const LossParts parts =
                    generator_step(g, d, feat, opt_g, real, noisy, cfg.lambda_sim, cfg.lambda_adv);
                const int m = stop - start;
                sum_mse += parts.mse * m;
                sum_sim += parts.sim * m;
                sum_adv += parts.adv * m;
                sum_rec += parts.total * m;
                counted += m;
            }
            stats.l_mse = sum_mse / counted;
            stats.l_sim = sum_sim / counted;
            stats.l_adv = sum_adv / counted;
            stats.l_rec = sum_rec / counted;

            // Validation in inference mode on noiseless acquisitions.
            if (!val_images.empty()) {
                const int n_val = static_cast<int>(val_images.size());
                const bool ssim_ok = w >= 11 && h >= 11;
                double sum_psnr = 0.0, sum_ssim = 0.0;
                constexpr int kChunk = 8;
                for (int start = 0; start < n_val; start += kChunk) {
                    const int stop = std::min(start + kChunk, n_val);
                    std::vector<int> indices(stop - start);
                    for (int i = start; i < stop; ++i) indices[i - start] = i;
                    const Tensor noisy = reconstruct_batch(val_images, indices, phi, recon,
                                                           0.0, cfg.seed, 0);
                    const Tensor out = g.forward(noisy, Mode::eval, /*update_stats=*/false);
                    for (int i = 0; i < stop - start; ++i) {
                        const Image rec = image_from_tensor(out, i);
                        sum_psnr += psnr(val_images[start + i], rec);
                        if (ssim_ok) sum_ssim += ssim(val_images[start + i], rec);
                    }
                }
                stats.val_psnr = sum_psnr / n_val;
                stats.val_ssim = ssim_ok ? sum_ssim / n_val : 0.0;
            }
        } catch (const NumericalError& err) {
            result.aborted = true;
            result.abort_reason = err.what();
            if (log)
                (*log) << "abort epoch=" << stats.epoch << " reason=" << err.what() << "\n";
            break;
        }

        result.history.push_back(stats);
        if (log) {
            (*log) << "epoch=" << stats.epoch << " l_mse=" << stats.l_mse
                   << " l_sim=" << stats.l_sim << " l_adv=" << stats.l_adv
                   << " l_rec=" << stats.l_rec << " val_psnr=" << stats.val_psnr
                   << " val_ssim=" << stats.val_ssim << "\n";
            log->flush();
        }
        if (!checkpoint_path.empty()) {
            save_checkpoint(checkpoint_path, g, d,
                            {{"epoch", std::to_string(stats.epoch)}});
        }
    }
    return result;
}

}  // namespace spi::nn
