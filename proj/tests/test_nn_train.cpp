#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nn_test_util.hpp"
#include "spi/errors.hpp"
#include "spi/nn/checkpoint.hpp"
#include "spi/nn/train.hpp"
#include "spi/rng.hpp"
#include "spi/scanning_basis.hpp"

using namespace spi;
using namespace spi::nn;
using namespace spi::nn::testutil;

namespace {

GeneratorConfig tiny_gen_config() {
    GeneratorConfig cfg;
    cfg.width = 8;
    cfg.height = 8;
    cfg.channels = 4;
    cfg.blocks = 1;
    cfg.init_seed = 101;
    return cfg;
}

DiscriminatorConfig tiny_disc_config() {
    DiscriminatorConfig cfg;
    cfg.width = 8;
    cfg.height = 8;
    cfg.base_channels = 4;
    cfg.stages = 1;
    cfg.init_seed = 102;
    return cfg;
}

FeatureExtractor tiny_extractor(int k = 2) {
    FeatureExtractorConfig cfg;
    cfg.k = k;
    cfg.seed = 103;
    return FeatureExtractor(cfg);
}

// The exact objective generator_step descends, evaluated without touching
// any state (train-mode statistics, no buffer updates).
double eval_l_rec(Generator& g, Discriminator& d, FeatureExtractor& feat, const Tensor& real,
                  const Tensor& noisy, double lambda_sim, double lambda_adv) {
    const Tensor xhat = g.forward(noisy, Mode::train, false);
    const double v_mse = mse_loss_value(real, xhat);
    const double v_sim = perceptual_loss_value(feat, real, xhat);
    const Eigen::VectorXd probs = d.forward(xhat, Mode::train, false);
    return v_mse + lambda_sim * v_sim + lambda_adv * adversarial_loss_value(probs);
}

std::vector<Image> random_images(int count, int side, std::uint64_t seed) {
    std::vector<Image> out;
    Rng rng = make_rng(seed);
    for (int i = 0; i < count; ++i) {
        Image img = Image::zeros(side, side);
        for (int p = 0; p < img.n(); ++p) img.pixels[p] = uniform01(rng);
        out.push_back(img);
    }
    return out;
}

void restore_named(const std::vector<Eigen::VectorXd>& snap,
                   const std::vector<NamedTensor>& tensors) {
    for (std::size_t i = 0; i < snap.size(); ++i) *tensors[i].data = snap[i];
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("pixel loss gradient matches finite differences") {
    const Tensor x = random_tensor(2, 1, 8, 8, 301);
    Tensor xhat = random_tensor(2, 1, 8, 8, 302);
    const LossValue lv = mse_loss(x, xhat);
    auto f = [&]() { return mse_loss_value(x, xhat); };
    Rng pick = make_rng(5);
    for (int idx : sample_coords(xhat.size(), 50, pick)) {
        const double fd = central_diff(f, &xhat.data[idx], 1e-6);
        CHECK(rel_err(lv.grad.data[idx], fd) < 1e-6);
    }
}

TEST_CASE("feature-space loss gradient matches finite differences") {
    FeatureExtractor feat = tiny_extractor(2);
    const Tensor x = random_tensor(2, 1, 8, 8, 311);
    Tensor xhat = random_tensor(2, 1, 8, 8, 312);
    const LossValue lv = perceptual_loss(feat, x, xhat);
    CHECK(lv.value > 0.0);
    auto f = [&]() { return perceptual_loss_value(feat, x, xhat); };
    Rng pick = make_rng(6);
    double worst = 0.0;
    for (int idx : sample_coords(xhat.size(), 50, pick)) {
        const double fd = central_diff(f, &xhat.data[idx], 1e-6);
        worst = std::max(worst, rel_err(lv.grad.data[idx], fd));
    }
    CHECK(worst < 1e-3);
    MESSAGE("feature-loss max fd mismatch: " << worst);
}

TEST_CASE("adversarial pathway gradient matches finite differences") {
    Discriminator d(tiny_disc_config());
    Tensor xhat = random_tensor(2, 1, 8, 8, 321);
    const Eigen::VectorXd probs = d.forward(xhat, Mode::train, false);
    d.zero_grad();
    const Tensor gin = d.backward(adversarial_loss_grad(probs));
    auto f = [&]() { return adversarial_loss_value(d.forward(xhat, Mode::train, false)); };
    Rng pick = make_rng(7);
    double worst = 0.0;
    for (int idx : sample_coords(xhat.size(), 50, pick)) {
        const double fd = central_diff(f, &xhat.data[idx], 1e-6);
        worst = std::max(worst, rel_err(gin.data[idx], fd));
    }
    CHECK(worst < 1e-3);
    MESSAGE("adversarial-pathway max fd mismatch: " << worst);
}

TEST_CASE("critic objective gradients match finite differences on every parameter") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    const Tensor real = random_tensor(1, 1, 8, 8, 331);
    const Tensor noisy = random_tensor(1, 1, 8, 8, 332);
    const Tensor fake = g.forward(noisy, Mode::train, false);

    AdamConfig zero_lr;
    zero_lr.learning_rate = 0.0;
    zero_lr.weight_decay = 0.0;
    Adam opt(d.params(), zero_lr);
    discriminator_step(d, g, opt, real, noisy);  // leaves analytic grads behind

    auto f = [&]() {
        const Eigen::VectorXd pr = d.forward(real, Mode::train, false);
        const Eigen::VectorXd pf = d.forward(fake, Mode::train, false);
        double total = 0.0;
        for (int i = 0; i < pr.size(); ++i) {
            total -= std::log(std::clamp(pr[i], kProbClamp, 1.0 - kProbClamp));
            total -= std::log(1.0 - std::clamp(pf[i], kProbClamp, 1.0 - kProbClamp));
        }
        return total / pr.size();
    };

    // The final-layer bias on a 1-image batch, then a sweep over all layers.
    Param* fc_bias = d.params().back();
    REQUIRE(fc_bias->value.size() == 1);
    const double fd_bias = central_diff(f, &fc_bias->value[0], 1e-6);
    CHECK(rel_err(fc_bias->grad[0], fd_bias) < 1e-4);

    Rng pick = make_rng(8);
    double worst = 0.0;
    int checked = 0;
    for (Param* p : d.params()) {
        const int quota = std::min<int>(static_cast<int>(p->value.size()), 14);
        for (int idx : sample_coords(static_cast<int>(p->value.size()), quota, pick)) {
            const double fd = central_diff(f, &p->value[idx], 1e-6);
            worst = std::max(worst, rel_err(p->grad[idx], fd));
            ++checked;
        }
    }
    CHECK(checked >= 50);
    CHECK(worst < 1e-3);
    MESSAGE("critic max fd mismatch over " << checked << " coords: " << worst);
}

TEST_CASE("full generator objective gradient matches finite differences across layer kinds") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(2);
    const Tensor real = random_tensor(2, 1, 8, 8, 341);
    const Tensor noisy = random_tensor(2, 1, 8, 8, 342);
    const double ls = 6e-3, la = 1e-3;

    AdamConfig zero_lr;
    zero_lr.learning_rate = 0.0;
    zero_lr.weight_decay = 0.0;
    Adam opt(g.params(), zero_lr);
    const LossParts parts = generator_step(g, d, feat, opt, real, noisy, ls, la);
    CHECK(parts.total == doctest::Approx(parts.mse + ls * parts.sim + la * parts.adv));

    auto f = [&]() { return eval_l_rec(g, d, feat, real, noisy, ls, la); };
    CHECK(f() == doctest::Approx(parts.total).epsilon(1e-12));

    Rng pick = make_rng(9);
    double worst = 0.0;
    int checked = 0;
    for (Param* p : g.params()) {
        const int quota = std::min<int>(static_cast<int>(p->value.size()), 32);
        for (int idx : sample_coords(static_cast<int>(p->value.size()), quota, pick)) {
            const double fd = central_diff(f, &p->value[idx], 1e-6);
            worst = std::max(worst, rel_err(p->grad[idx], fd));
            ++checked;
        }
    }
    CHECK(checked >= 200);
    CHECK(worst < 1e-3);
    MESSAGE("generator max fd mismatch over " << checked << " coords: " << worst);
}

TEST_CASE("zero learning rate leaves stepped networks bitwise unchanged") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(1);
    const Tensor real = random_tensor(2, 1, 8, 8, 351);
    const Tensor noisy = random_tensor(2, 1, 8, 8, 352);

    AdamConfig zero_lr;
    zero_lr.learning_rate = 0.0;
    zero_lr.weight_decay = 0.0;

    Adam opt_d(d.params(), zero_lr);
    const auto d_before = snapshot_params(d.params());
    const double loss = discriminator_step(d, g, opt_d, real, noisy);
    CHECK(std::isfinite(loss));
    CHECK(loss > 0.0);
    CHECK(params_bitwise_equal(d_before, d.params()));

    Adam opt_g(g.params(), zero_lr);
    const auto g_before = snapshot_params(g.params());
    const LossParts parts = generator_step(g, d, feat, opt_g, real, noisy, 6e-3, 1e-3);
    CHECK(std::isfinite(parts.total));
    CHECK(params_bitwise_equal(g_before, g.params()));
}

TEST_CASE("critic pre-step loss is analytic when the final layer is silent") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    auto tensors = d.named_tensors();
    for (NamedTensor& t : tensors)
        if (t.name == "d.fc.weight" || t.name == "d.fc.bias") t.data->setZero();

    AdamConfig zero_lr;
    zero_lr.learning_rate = 0.0;
    Adam opt(d.params(), zero_lr);
    const Tensor real = random_tensor(3, 1, 8, 8, 361);
    const Tensor noisy = random_tensor(3, 1, 8, 8, 362);
    // Every probability is exactly one half, so both labels cost ln 2.
    const double loss = discriminator_step(d, g, opt, real, noisy);
    CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("discriminator step treats the generator as a constant") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    const Tensor real = random_tensor(2, 1, 8, 8, 371);
    const Tensor noisy = random_tensor(2, 1, 8, 8, 372);

    AdamConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.weight_decay = 5e-4;
    Adam opt(d.params(), cfg);
    const auto g_all = snapshot(g.named_tensors());  // parameters and statistics
    const auto d_before = snapshot_params(d.params());
    discriminator_step(d, g, opt, real, noisy);
    CHECK(bitwise_equal(g_all, g.named_tensors()));
    CHECK(!params_bitwise_equal(d_before, d.params()));
}

TEST_CASE("generator step leaves critic and extractor values unchanged") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(2);
    const Tensor real = random_tensor(2, 1, 8, 8, 381);
    const Tensor noisy = random_tensor(2, 1, 8, 8, 382);

    AdamConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.weight_decay = 5e-4;
    Adam opt(g.params(), cfg);
    const auto d_all = snapshot(d.named_tensors());
    const auto feat_all = snapshot(feat.named_tensors());
    const auto g_before = snapshot_params(g.params());
    generator_step(g, d, feat, opt, real, noisy, 6e-3, 1e-3);
    CHECK(bitwise_equal(d_all, d.named_tensors()));
    CHECK(bitwise_equal(feat_all, feat.named_tensors()));
    CHECK(!params_bitwise_equal(g_before, g.params()));
}

TEST_CASE("one small generator step descends the objective on a fixed batch") {
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(2);
    const Tensor real = random_tensor(2, 1, 8, 8, 391);
    const Tensor noisy = random_tensor(2, 1, 8, 8, 392);
    const double ls = 6e-3, la = 1e-3;

    const auto g_state = snapshot(g.named_tensors());
    const double before = eval_l_rec(g, d, feat, real, noisy, ls, la);

    double lr = 1e-4;
    bool descended = false;
    for (int attempt = 0; attempt < 5 && !descended; ++attempt, lr *= 0.5) {
        restore_named(g_state, g.named_tensors());
        AdamConfig cfg;
        cfg.learning_rate = lr;
        cfg.weight_decay = 0.0;
        Adam opt(g.params(), cfg);
        generator_step(g, d, feat, opt, real, noisy, ls, la);
        descended = eval_l_rec(g, d, feat, real, noisy, ls, la) < before;
    }
    CHECK(descended);
}

TEST_CASE("training loop records history, checkpoints, and is reproducible") {
    const auto images = random_images(4, 8, 401);
    const std::vector<Image> val(images.begin(), images.begin() + 2);
    const ScanningBasis phi = build_scanning_basis(32, 64, 5);

    TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.batch_size = 2;
    cfg.epochs = 2;
    cfg.seed = 42;

    const std::string path = "train_ckpt_test.bin";
    auto run = [&](std::uint64_t, TrainResult& out, std::vector<Eigen::VectorXd>& final_params,
                   std::ostream* log) {
        Generator g(tiny_gen_config());
        Discriminator d(tiny_disc_config());
        FeatureExtractor feat = tiny_extractor(1);
        out = train(g, d, feat, images, val, phi, cfg, path, log);
        final_params = snapshot_params(g.params());
    };

    TrainResult r1, r2;
    std::vector<Eigen::VectorXd> p1, p2;
    std::ostringstream log;
    run(0, r1, p1, &log);

    REQUIRE(r1.history.size() == 2);
    CHECK(!r1.aborted);
    CHECK(r1.history[0].epoch == 1);
    CHECK(r1.history[1].epoch == 2);
    for (const EpochStats& s : r1.history) {
        CHECK(std::isfinite(s.l_mse));
        CHECK(std::isfinite(s.l_sim));
        CHECK(std::isfinite(s.l_adv));
        CHECK(std::isfinite(s.l_rec));
        CHECK(s.l_rec == doctest::Approx(s.l_mse + cfg.lambda_sim * s.l_sim +
                                         cfg.lambda_adv * s.l_adv));
        CHECK(s.val_psnr > 0.0);
        CHECK(s.val_ssim == 0.0);  // 8x8 frames are below the similarity window
    }
    CHECK(log.str().find("epoch=1") != std::string::npos);
    CHECK(log.str().find("val_psnr=") != std::string::npos);

    const Checkpoint ckpt = load_checkpoint(path);
    CHECK(ckpt.config.at("epoch") == "2");
    CHECK(ckpt.gen_config.channels == 4);

    run(0, r2, p2, nullptr);
    REQUIRE(r2.history.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
        CHECK(r1.history[e].l_rec == r2.history[e].l_rec);
        CHECK(r1.history[e].val_psnr == r2.history[e].val_psnr);
    }
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i)
        for (int j = 0; j < p1[i].size(); ++j) CHECK(p1[i][j] == p2[i][j]);

    std::remove(path.c_str());
}

TEST_CASE("no-op training keeps the initialization") {
    const auto images = random_images(2, 8, 411);
    const ScanningBasis phi = build_scanning_basis(32, 64, 5);

    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(1);
    const auto g_init = snapshot_params(g.params());
    const auto d_init = snapshot_params(d.params());
    const auto feat_init = snapshot(feat.named_tensors());

    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.weight_decay = 0.0;
    cfg.batch_size = 2;
    cfg.epochs = 1;

    const TrainResult result = train(g, d, feat, images, {}, phi, cfg, "", nullptr);
    CHECK(result.history.size() == 1);
    CHECK(result.history[0].val_psnr == 0.0);  // no validation images given
    CHECK(params_bitwise_equal(g_init, g.params()));
    CHECK(params_bitwise_equal(d_init, d.params()));
    CHECK(bitwise_equal(feat_init, feat.named_tensors()));
}

TEST_CASE("extractor stays bitwise frozen across real training") {
    const auto images = random_images(4, 8, 421);
    const ScanningBasis phi = build_scanning_basis(32, 64, 17);
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(2);
    const auto feat_before = snapshot(feat.named_tensors());

    TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.batch_size = 4;
    cfg.epochs = 1;
    train(g, d, feat, images, {}, phi, cfg, "", nullptr);
    CHECK(bitwise_equal(feat_before, feat.named_tensors()));
}

TEST_CASE("numerical failure aborts training and keeps the last good checkpoint") {
    const auto images = random_images(2, 8, 431);
    const ScanningBasis phi = build_scanning_basis(32, 64, 7);
    const std::string path = "abort_ckpt_test.bin";

    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(1);
    TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.batch_size = 2;
    cfg.epochs = 1;
    const TrainResult good = train(g, d, feat, images, {}, phi, cfg, path, nullptr);
    REQUIRE(!good.aborted);
    const std::string saved = read_bytes(path);
    REQUIRE(!saved.empty());

    auto tensors = g.named_tensors();
    for (NamedTensor& t : tensors)
        if (t.name == "g.head.weight")
            (*t.data)[0] = std::numeric_limits<double>::quiet_NaN();

    const TrainResult bad = train(g, d, feat, images, {}, phi, cfg, path, nullptr);
    CHECK(bad.aborted);
    CHECK(bad.history.empty());
    CHECK(bad.abort_reason.find("g.head") != std::string::npos);
    CHECK(read_bytes(path) == saved);  // failed run must not clobber the file

    std::remove(path.c_str());
}

TEST_CASE("training validates its configuration and inputs") {
    const auto images = random_images(2, 8, 441);
    const ScanningBasis phi = build_scanning_basis(32, 64, 7);
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(1);

    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(g, d, feat, images, {}, phi, cfg, "", nullptr), std::invalid_argument);

    cfg = TrainConfig{};
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.noise_sigma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = TrainConfig{};
    CHECK_THROWS_AS(train(g, d, feat, {}, {}, phi, cfg, "", nullptr), std::invalid_argument);

    const auto small = random_images(2, 4, 442);
    CHECK_THROWS_AS(train(g, d, feat, small, {}, phi, cfg, "", nullptr), std::invalid_argument);

    const ScanningBasis tiny_phi = build_scanning_basis(8, 16, 7);
    CHECK_THROWS_AS(train(g, d, feat, images, {}, tiny_phi, cfg, "", nullptr),
                    std::invalid_argument);
}

TEST_CASE("training with measurement noise runs to completion") {
    const auto images = random_images(2, 8, 451);
    const ScanningBasis phi = build_scanning_basis(48, 64, 3);
    Generator g(tiny_gen_config());
    Discriminator d(tiny_disc_config());
    FeatureExtractor feat = tiny_extractor(1);

    TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.batch_size = 2;
    cfg.epochs = 1;
    cfg.noise_sigma = 0.05;
    const TrainResult result = train(g, d, feat, images, images, phi, cfg, "", nullptr);
    CHECK(!result.aborted);
    REQUIRE(result.history.size() == 1);
    CHECK(std::isfinite(result.history[0].l_rec));
    CHECK(std::isfinite(result.history[0].val_psnr));
}
