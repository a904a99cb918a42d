// Command-line front end for the single-pixel imaging toolkit: builds
// scanning bases, simulates acquisitions, reconstructs with every solver,
// trains/evaluates the neural reconstructor, and runs parameter sweeps.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "CLI11.hpp"
#include "json.hpp"
#include "spi/acquire.hpp"
#include "spi/dataset.hpp"
#include "spi/errors.hpp"
#include "spi/experiment.hpp"
#include "spi/metrics.hpp"
#include "spi/nn/checkpoint.hpp"
#include "spi/nn/train.hpp"
#include "spi/rng.hpp"
#include "spi/scanning_basis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spi;

namespace {

// Options shared by every subcommand (config file values fill any of these
// that were not passed on the command line).
struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    double sr = 0.25;
    double noise_level = 0.0;
    std::string extractor = "random";
};

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

cv::Mat to_mat8(const Image& img) {
    cv::Mat m(img.height, img.width, CV_8UC1);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            m.at<unsigned char>(r, c) =
                static_cast<unsigned char>(std::lround(std::clamp(img.at(r, c), 0.0, 1.0) * 255.0));
    return m;
}

void write_png(const Image& img, const std::string& path) {
    if (!cv::imwrite(path, to_mat8(img)))
        throw IoError("cannot write image: " + path);
}

nn::FeatureExtractorConfig parse_extractor(const std::string& text, int depth,
                                           std::uint64_t seed) {
    nn::FeatureExtractorConfig cfg;
    cfg.k = depth;
    cfg.seed = seed;
    if (text == "random") return cfg;
    if (text.rfind("file:", 0) == 0) {
        cfg.weights_path = text.substr(5);
        if (cfg.weights_path.empty())
            throw std::invalid_argument("--extractor file: needs a path");
        return cfg;
    }
    throw std::invalid_argument("--extractor must be 'random' or 'file:<path>'");
}

// Basis for a size x size frame: loaded from file when given, else built
// from the sampling rate and seed.
ScanningBasis make_basis(const std::string& basis_file, double sr, int size,
                         std::uint64_t seed) {
    const int n = size * size;
    if (!basis_file.empty()) {
        ScanningBasis phi = load_basis(basis_file);
        if (phi.n != n)
            throw std::invalid_argument("basis pattern length " + std::to_string(phi.n) +
                                        " does not match frame size " + std::to_string(size));
        return phi;
    }
    return build_scanning_basis(measurement_count(sr, n), n, seed);
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(var / v.size());
    return out;
}

int run_basis(const GlobalOpts& g, int size, int k, const std::string& output) {
    const int n = size * size;
    const int patterns = k > 0 ? k : measurement_count(g.sr, n);
    const ScanningBasis phi = build_scanning_basis(patterns, n, g.seed);
    ensure_dir(g.out_dir);
    const std::string path = output.empty() ? join(g.out_dir, "basis.spib") : output;
    save_basis(phi, path);
    json line = {{"file", path}, {"k", phi.k}, {"n", phi.n}, {"seed", g.seed}};
    std::cout << line.dump() << "\n";
    return 0;
}

int run_acquire(const GlobalOpts& g, const std::string& image_file, const std::string& basis_file,
                int size, const std::string& output) {
    const Image img = load_image_file(image_file, size, size);
    const ScanningBasis phi = make_basis(basis_file, g.sr, size, g.seed);
    const double sigma = g.noise_level * phi.n;
    const MeasurementVector y = acquire(phi, img, sigma, g.seed);

    ensure_dir(g.out_dir);
    const std::string path = output.empty() ? join(g.out_dir, "measurements.json") : output;
    json doc = {{"image", image_file},
                {"k", phi.k},
                {"n", phi.n},
                {"seed", g.seed},
                {"sigma", y.sigma},
                {"noise_level", g.noise_level},
                {"values", std::vector<double>(y.values.data(), y.values.data() + y.values.size())}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << "\n";
    std::cout << json({{"file", path}, {"k", phi.k}}).dump() << "\n";
    return 0;
}

int run_recon(const GlobalOpts& g, const std::string& method_name, const std::string& image_file,
              const std::string& basis_file, const std::string& checkpoint_file, int size,
              const std::string& output) {
    const Method method = method_from_string(method_name);
    const Image img = load_image_file(image_file, size, size);
    const ScanningBasis phi = make_basis(basis_file, g.sr, size, g.seed);
    const double sigma = g.noise_level * phi.n;
    const MeasurementVector y = acquire(phi, img, sigma, g.seed);

    nn::Checkpoint ck;
    nn::Generator* gen = nullptr;
    if (method == Method::gan) {
        if (checkpoint_file.empty())
            throw std::invalid_argument("recon --method gan needs --checkpoint");
        ck = nn::load_checkpoint(checkpoint_file);
        gen = ck.generator.get();
    }
    Reconstructor recon(method, phi, size, size, IterativeConfig{}, gen);
    const Image xhat = recon.reconstruct(y);

    ensure_dir(g.out_dir);
    const std::string path =
        output.empty() ? join(g.out_dir, "recon_" + method_name + ".png") : output;
    write_png(xhat, path);

    json line = {{"image", image_file},
                 {"method", method_name},
                 {"sr", phi.sampling_rate()},
                 {"noise_level", g.noise_level},
                 {"psnr_db", psnr(img, xhat)},
                 {"ssim", size >= 11 ? ssim(img, xhat) : 0.0}};
    std::cout << line.dump() << "\n";
    std::cerr << "wrote " << path << "\n";
    return 0;
}

int run_train(const GlobalOpts& g, const std::string& data_dir, int count, int val_count,
              int size, int epochs, int batch, double lr, int channels, int blocks, bool skip,
              int d_channels, int d_stages, int feature_depth, const std::string& checkpoint,
              const std::string& history_file) {
    std::vector<Image> train_set, val_set;
    if (!data_dir.empty()) {
        DatasetSpec spec;
        spec.root = data_dir;
        spec.width = size;
        spec.height = size;
        spec.train_count = count;
        spec.val_count = val_count;
        spec.test_count = 0;
        spec.shuffle_seed = g.seed;
        DatasetSplits splits = load_dataset(spec);
        train_set = std::move(splits.train);
        val_set = std::move(splits.val);
    } else {
        train_set = synthetic_images(count, size, size, mix_seed(g.seed, 201));
        val_set = synthetic_images(val_count, size, size, mix_seed(g.seed, 202));
    }

    const int n = size * size;
    const ScanningBasis phi = build_scanning_basis(measurement_count(g.sr, n), n, g.seed);

    nn::GeneratorConfig gcfg;
    gcfg.width = size;
    gcfg.height = size;
    gcfg.channels = channels;
    gcfg.blocks = blocks;
    gcfg.skip_enabled = skip;
    gcfg.init_seed = mix_seed(g.seed, 101);
    nn::DiscriminatorConfig dcfg;
    dcfg.width = size;
    dcfg.height = size;
    dcfg.base_channels = d_channels;
    dcfg.stages = d_stages;
    dcfg.init_seed = mix_seed(g.seed, 102);
    nn::Generator gen(gcfg);
    nn::Discriminator disc(dcfg);
    nn::FeatureExtractor feat(parse_extractor(g.extractor, feature_depth, mix_seed(g.seed, 103)));

    nn::TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.noise_sigma = g.noise_level * n;
    cfg.seed = g.seed;

    ensure_dir(g.out_dir);
    const std::string ck_path = checkpoint.empty() ? join(g.out_dir, "checkpoint.spig") : checkpoint;
    const nn::TrainResult result =
        nn::train(gen, disc, feat, train_set, val_set, phi, cfg, ck_path, &std::cout);

    const std::string hist_path =
        history_file.empty() ? join(g.out_dir, "train_history.csv") : history_file;
    std::ofstream hist(hist_path);
    if (!hist) throw IoError("cannot write " + hist_path);
    hist << "epoch,l_mse,l_sim,l_adv,l_rec,val_psnr,val_ssim\n";
    hist.precision(10);
    for (const nn::EpochStats& e : result.history)
        hist << e.epoch << ',' << e.l_mse << ',' << e.l_sim << ',' << e.l_adv << ',' << e.l_rec
             << ',' << e.val_psnr << ',' << e.val_ssim << "\n";

    if (result.aborted) {
        std::cerr << "error: training aborted: " << result.abort_reason << "\n";
        return 1;
    }
    json line = {{"checkpoint", ck_path},
                 {"history", hist_path},
                 {"epochs", static_cast<int>(result.history.size())},
                 {"final_val_psnr", result.history.empty() ? 0.0 : result.history.back().val_psnr}};
    std::cout << line.dump() << "\n";
    return 0;
}

int run_eval(const GlobalOpts& g, const std::string& checkpoint_file, const std::string& data_dir,
             int count) {
    nn::Checkpoint ck = nn::load_checkpoint(checkpoint_file);
    const int size = ck.gen_config.width;
    if (ck.gen_config.height != size)
        throw std::invalid_argument("only square frames are supported");

    std::vector<Image> test_set;
    if (!data_dir.empty()) {
        DatasetSpec spec;
        spec.root = data_dir;
        spec.width = size;
        spec.height = size;
        spec.train_count = 0;
        spec.val_count = 0;
        spec.test_count = count;
        spec.shuffle_seed = g.seed;
        test_set = std::move(load_dataset(spec).test);
    } else {
        test_set = synthetic_images(count, size, size, mix_seed(g.seed, 301));
    }

    const int n = size * size;
    const ScanningBasis phi = build_scanning_basis(measurement_count(g.sr, n), n, g.seed);
    Reconstructor recon(Method::gan, phi, size, size, IterativeConfig{}, ck.generator.get());

    const double sigma = g.noise_level * n;
    std::vector<double> psnrs, ssims;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const MeasurementVector y =
            acquire(phi, test_set[i], sigma, mix_seed(g.seed, static_cast<std::uint64_t>(i)));
        const Image xhat = recon.reconstruct(y);
        psnrs.push_back(psnr(test_set[i], xhat));
        ssims.push_back(size >= 11 ? ssim(test_set[i], xhat) : 0.0);
    }
    const MeanStd ps = mean_std(psnrs), ss = mean_std(ssims);
    json line = {{"method", "gan"},        {"checkpoint", checkpoint_file},
                 {"n", test_set.size()},   {"sr", phi.sampling_rate()},
                 {"noise_level", g.noise_level}, {"mean_psnr", ps.mean},
                 {"std_psnr", ps.stddev},  {"mean_ssim", ss.mean},
                 {"std_ssim", ss.stddev}};
    std::cout << line.dump() << "\n";
    return 0;
}

int run_sweep_cmd(const GlobalOpts& g, std::vector<std::string> method_names,
                  std::vector<double> rates, std::vector<double> levels,
                  std::vector<std::uint64_t> seeds, const std::string& data_dir, int count,
                  int size, const std::string& checkpoint_file, const std::string& output) {
    SweepSpec spec;
    if (!method_names.empty()) {
        spec.methods.clear();
        for (const std::string& name : method_names) spec.methods.push_back(method_from_string(name));
    }
    if (!rates.empty()) spec.sampling_rates = std::move(rates);
    if (!levels.empty()) spec.noise_levels = std::move(levels);
    if (!seeds.empty()) spec.seeds = std::move(seeds);

    nn::Checkpoint ck;
    nn::Generator* gen = nullptr;
    if (!checkpoint_file.empty()) {
        ck = nn::load_checkpoint(checkpoint_file);
        gen = ck.generator.get();
        size = ck.gen_config.width;
    }

    std::vector<Image> test_set;
    if (!data_dir.empty()) {
        DatasetSpec dspec;
        dspec.root = data_dir;
        dspec.width = size;
        dspec.height = size;
        dspec.train_count = 0;
        dspec.val_count = 0;
        dspec.test_count = count;
        dspec.shuffle_seed = g.seed;
        test_set = std::move(load_dataset(dspec).test);
    } else {
        test_set = synthetic_images(count, size, size, mix_seed(g.seed, 301));
    }

    ensure_dir(g.out_dir);
    const std::string path = output.empty() ? join(g.out_dir, "sweep.csv") : output;
    std::ofstream csv(path);
    if (!csv) throw IoError("cannot write " + path);
    const std::vector<SweepRow> rows = run_sweep(test_set, spec, gen, g.extractor, &csv);
    json line = {{"file", path}, {"rows", rows.size()}, {"images", test_set.size()}};
    std::cout << line.dump() << "\n";
    return 0;
}

int run_video(const GlobalOpts& g, const std::string& frames_dir, const std::string& method_name,
              const std::string& basis_file, const std::string& checkpoint_file, int size) {
    const Method method = method_from_string(method_name);
    const ScanningBasis phi = make_basis(basis_file, g.sr, size, g.seed);

    nn::Checkpoint ck;
    nn::Generator* gen = nullptr;
    if (method == Method::gan) {
        if (checkpoint_file.empty())
            throw std::invalid_argument("video --method gan needs --checkpoint");
        ck = nn::load_checkpoint(checkpoint_file);
        gen = ck.generator.get();
    }
    Reconstructor recon(method, phi, size, size, IterativeConfig{}, gen);

    const double sigma = g.noise_level * phi.n;
    const VideoResult result = reconstruct_frames(frames_dir, recon, phi, sigma, g.seed, size, size);

    const std::string frame_out = join(g.out_dir, "frames");
    ensure_dir(frame_out);
    const std::string timing_path = join(g.out_dir, "video_timing.csv");
    std::ofstream timing(timing_path);
    if (!timing) throw IoError("cannot write " + timing_path);
    timing << "frame,file,seconds\n";
    timing.precision(10);
    for (std::size_t i = 0; i < result.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "recon_%05zu.png", i);
        write_png(result.frames[i], join(frame_out, name));
        timing << i << ',' << fs::path(result.files[i]).filename().string() << ','
               << result.seconds[i] << "\n";
    }

    std::vector<double> secs = result.seconds;
    std::sort(secs.begin(), secs.end());
    const double median = secs.size() % 2 == 1 ? secs[secs.size() / 2]
                                               : 0.5 * (secs[secs.size() / 2 - 1] + secs[secs.size() / 2]);
    const TimingModel t = make_timing_model(phi.k, median);
    json line = {{"frames", result.frames.size()}, {"skipped", result.skipped},
                 {"dir", frame_out},               {"timing", timing_path},
                 {"median_seconds", median},       {"fps", t.fps}};
    std::cout << line.dump() << "\n";
    return 0;
}

int run_bench(const GlobalOpts& g, const std::string& method_name,
              const std::string& checkpoint_file, int size, int frames) {
    const Method method = method_from_string(method_name);
    const int n = size * size;
    const ScanningBasis phi = build_scanning_basis(measurement_count(g.sr, n), n, g.seed);

    nn::Checkpoint ck;
    nn::Generator* gen = nullptr;
    if (method == Method::gan) {
        if (checkpoint_file.empty())
            throw std::invalid_argument("bench --method gan needs --checkpoint");
        ck = nn::load_checkpoint(checkpoint_file);
        gen = ck.generator.get();
    }
    Reconstructor recon(method, phi, size, size, IterativeConfig{}, gen);
    const Image sample = synthetic_images(1, size, size, g.seed).front();
    const TimingModel t = benchmark_timing(recon, phi, sample, frames);

    json line = {{"method", method_name},
                 {"patterns", t.patterns},
                 {"dmd_rate", t.dmd_rate},
                 {"acquisition_seconds", t.acquisition_seconds},
                 {"reconstruction_seconds", t.reconstruction_seconds},
                 {"total_seconds", t.total_seconds},
                 {"fps", t.fps}};
    std::cout << line.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-pixel imaging simulator and reconstruction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Flat key=value config file ('#' comments)");

    GlobalOpts g;
    if (const char* env = std::getenv("SPI_OUT_DIR")) g.out_dir = env;
    app.add_option("--seed", g.seed, "Master seed for patterns, noise and init")
        ->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Output directory (default: $SPI_OUT_DIR or .)")
        ->capture_default_str();
    app.add_option("--sr", g.sr, "Sampling rate in (0,1]")->capture_default_str();
    app.add_option("--noise-level", g.noise_level, "Detector noise level sigma/N")
        ->capture_default_str();
    app.add_option("--extractor", g.extractor, "Perceptual feature weights: random or file:<path>")
        ->capture_default_str();

    // basis
    auto* basis_cmd = app.add_subcommand("basis", "Build and save a scanning basis");
    int basis_size = 64, basis_k = 0;
    std::string basis_output;
    basis_cmd->add_option("--size", basis_size, "Frame side length (power of two)")
        ->capture_default_str();
    basis_cmd->add_option("--k", basis_k, "Pattern count (0: derive from --sr)")
        ->capture_default_str();
    basis_cmd->add_option("--output", basis_output, "Output file (default <out-dir>/basis.spib)");

    // acquire
    auto* acq_cmd = app.add_subcommand("acquire", "Simulate a bucket-detector readout");
    std::string acq_image, acq_basis, acq_output;
    int acq_size = 64;
    acq_cmd->add_option("--image", acq_image, "Scene image file")->required();
    acq_cmd->add_option("--basis", acq_basis, "Basis file (default: build from --sr/--seed)");
    acq_cmd->add_option("--size", acq_size, "Frame side length")->capture_default_str();
    acq_cmd->add_option("--output", acq_output, "Measurement JSON (default <out-dir>/measurements.json)");

    // recon
    auto* recon_cmd = app.add_subcommand("recon", "Acquire and reconstruct one image");
    std::string recon_method = "l2", recon_image, recon_basis, recon_ckpt, recon_output;
    int recon_size = 64;
    recon_cmd->add_option("--method", recon_method, "l2|cgd|ap|ista|dgi|gan")
        ->capture_default_str();
    recon_cmd->add_option("--image", recon_image, "Ground-truth scene image")->required();
    recon_cmd->add_option("--basis", recon_basis, "Basis file (default: build from --sr/--seed)");
    recon_cmd->add_option("--checkpoint", recon_ckpt, "Trained model (gan method)");
    recon_cmd->add_option("--size", recon_size, "Frame side length")->capture_default_str();
    recon_cmd->add_option("--output", recon_output, "Reconstruction PNG path");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the neural reconstructor");
    std::string train_data, train_ckpt, train_history;
    int train_count = 128, train_val = 16, train_size = 32, train_epochs = 10, train_batch = 16;
    int train_channels = 16, train_blocks = 4, train_dch = 16, train_dstages = 2, train_depth = 2;
    double train_lr = 8e-5;
    bool train_skip = true;
    train_cmd->add_option("--data", train_data, "Image directory (default: bundled synthetic set)");
    train_cmd->add_option("--count", train_count, "Training images")->capture_default_str();
    train_cmd->add_option("--val-count", train_val, "Validation images")->capture_default_str();
    train_cmd->add_option("--size", train_size, "Frame side length")->capture_default_str();
    train_cmd->add_option("--epochs", train_epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--batch", train_batch, "Minibatch size")->capture_default_str();
    train_cmd->add_option("--lr", train_lr, "Learning rate")->capture_default_str();
    train_cmd->add_option("--channels", train_channels, "Generator feature channels")
        ->capture_default_str();
    train_cmd->add_option("--blocks", train_blocks, "Generator residual blocks")
        ->capture_default_str();
    train_cmd->add_flag("--skip,!--no-skip", train_skip, "Residual skip connections")
        ->capture_default_str();
    train_cmd->add_option("--d-channels", train_dch, "Discriminator base channels")
        ->capture_default_str();
    train_cmd->add_option("--d-stages", train_dstages, "Discriminator stride-2 stages")
        ->capture_default_str();
    train_cmd->add_option("--feature-depth", train_depth, "Perceptual feature tap depth")
        ->capture_default_str();
    train_cmd->add_option("--checkpoint", train_ckpt, "Checkpoint path (default <out-dir>/checkpoint.spig)");
    train_cmd->add_option("--history", train_history, "Per-epoch CSV (default <out-dir>/train_history.csv)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a trained model on a test split");
    std::string eval_ckpt, eval_data;
    int eval_count = 32;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Trained model")->required();
    eval_cmd->add_option("--data", eval_data, "Image directory (default: bundled synthetic set)");
    eval_cmd->add_option("--count", eval_count, "Test images")->capture_default_str();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid of methods x rates x noise levels");
    std::vector<std::string> sweep_methods;
    std::vector<double> sweep_rates, sweep_levels;
    std::vector<std::uint64_t> sweep_seeds;
    std::string sweep_data, sweep_ckpt, sweep_output;
    int sweep_count = 20, sweep_size = 16;
    sweep_cmd->add_option("--methods", sweep_methods, "Methods (default l2)")->delimiter(',');
    sweep_cmd->add_option("--rates", sweep_rates, "Sampling rates (default 0.05..0.30)")
        ->delimiter(',');
    sweep_cmd->add_option("--levels", sweep_levels, "Noise levels (default 1e-4..2e-2)")
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds (default 1)")->delimiter(',');
    sweep_cmd->add_option("--data", sweep_data, "Image directory (default: bundled synthetic set)");
    sweep_cmd->add_option("--count", sweep_count, "Test images")->capture_default_str();
    sweep_cmd->add_option("--size", sweep_size, "Frame side length")->capture_default_str();
    sweep_cmd->add_option("--checkpoint", sweep_ckpt, "Trained model (enables gan rows)");
    sweep_cmd->add_option("--output", sweep_output, "CSV path (default <out-dir>/sweep.csv)");

    // video
    auto* video_cmd = app.add_subcommand("video", "Reconstruct a directory of frames");
    std::string video_frames, video_method = "l2", video_basis, video_ckpt;
    int video_size = 64;
    video_cmd->add_option("--frames", video_frames, "Directory of frame images")->required();
    video_cmd->add_option("--method", video_method, "l2|cgd|ap|ista|dgi|gan")
        ->capture_default_str();
    video_cmd->add_option("--basis", video_basis, "Basis file (default: build from --sr/--seed)");
    video_cmd->add_option("--checkpoint", video_ckpt, "Trained model (gan method)");
    video_cmd->add_option("--size", video_size, "Frame side length")->capture_default_str();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Measure per-frame timing and fps");
    std::string bench_method = "l2", bench_ckpt;
    int bench_size = 64, bench_frames = 10;
    bench_cmd->add_option("--method", bench_method, "l2|cgd|ap|ista|dgi|gan")
        ->capture_default_str();
    bench_cmd->add_option("--checkpoint", bench_ckpt, "Trained model (gan method)");
    bench_cmd->add_option("--size", bench_size, "Frame side length")->capture_default_str();
    bench_cmd->add_option("--frames", bench_frames, "Frames to time")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (basis_cmd->parsed()) return run_basis(g, basis_size, basis_k, basis_output);
        if (acq_cmd->parsed()) return run_acquire(g, acq_image, acq_basis, acq_size, acq_output);
        if (recon_cmd->parsed())
            return run_recon(g, recon_method, recon_image, recon_basis, recon_ckpt, recon_size,
                             recon_output);
        if (train_cmd->parsed())
            return run_train(g, train_data, train_count, train_val, train_size, train_epochs,
                             train_batch, train_lr, train_channels, train_blocks, train_skip,
                             train_dch, train_dstages, train_depth, train_ckpt, train_history);
        if (eval_cmd->parsed()) return run_eval(g, eval_ckpt, eval_data, eval_count);
        if (sweep_cmd->parsed())
            return run_sweep_cmd(g, sweep_methods, sweep_rates, sweep_levels, sweep_seeds,
                                 sweep_data, sweep_count, sweep_size, sweep_ckpt, sweep_output);
        if (video_cmd->parsed())
            return run_video(g, video_frames, video_method, video_basis, video_ckpt, video_size);
        if (bench_cmd->parsed())
            return run_bench(g, bench_method, bench_ckpt, bench_size, bench_frames);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
