#include "spi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "spi/dataset.hpp"
#include "spi/errors.hpp"
#include "spi/metrics.hpp"
#include "spi/nn/tensor.hpp"
#include "spi/rng.hpp"

namespace spi {

namespace {

double wall_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;  // population convention
};

Stats aggregate(const std::vector<double>& values) {
    Stats s;
    if (values.empty()) return s;
    double sum = 0.0, sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += v * v;
    }
    s.mean = sum / values.size();
    s.stddev = std::sqrt(std::max(0.0, sq / values.size() - s.mean * s.mean));
    return s;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(10);
    out << v;
    return out.str();
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::l2: return "l2";
        case Method::cgd: return "cgd";
        case Method::ap: return "ap";
        case Method::ista: return "ista";
        case Method::dgi: return "dgi";
        case Method::gan: return "gan";
    }
    throw std::invalid_argument("unknown method value");
}

Method method_from_string(const std::string& name) {
    if (name == "l2") return Method::l2;
    if (name == "cgd") return Method::cgd;
    if (name == "ap") return Method::ap;
    if (name == "ista") return Method::ista;
    if (name == "dgi") return Method::dgi;
    if (name == "gan") return Method::gan;
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected l2|cgd|ap|ista|dgi|gan)");
}

Reconstructor::Reconstructor(Method method, const ScanningBasis& phi, int width, int height,
                             IterativeConfig iterative, nn::Generator* generator)
    : method_(method), phi_(phi), width_(width), height_(height), cfg_(iterative),
      generator_(generator) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("frame size must be positive");
    if (phi.n != width * height)
        throw std::invalid_argument("scanning basis does not match the frame size");
    cfg_.validate();
    switch (method_) {
        case Method::l2:
            l2_ = std::make_unique<L2Reconstructor>(
                phi_, make_sparsifying_basis(BasisKind::identity, width_, height_));
            break;
        case Method::gan: {
            if (generator_ == nullptr)
                throw std::invalid_argument("the neural method needs a generator checkpoint");
            const nn::GeneratorConfig& g = generator_->config();
            if (g.width != width_ || g.height != height_)
                throw std::invalid_argument("generator frame size does not match");
            l2_ = std::make_unique<L2Reconstructor>(
                phi_, make_sparsifying_basis(BasisKind::identity, width_, height_));
            break;
        }
        case Method::ista:
            theta_ = std::make_unique<EffectiveMatrix>(
                effective_matrix(phi_, make_sparsifying_basis(BasisKind::dct2d, width_, height_)));
            break;
        default:
            break;
    }
}

Image Reconstructor::reconstruct(const MeasurementVector& y) {
    switch (method_) {
        case Method::l2:
            return l2_->reconstruct(y);
        case Method::cgd:
            return cgd_reconstruct(phi_, y, cfg_, width_, height_);
        case Method::ap:
            return ap_reconstruct(phi_, y, cfg_, width_, height_);
        case Method::ista: {
            const IterativeResult res = ista_reconstruct(*theta_, y, cfg_);
            const SparsifyingBasis psi = make_sparsifying_basis(BasisKind::dct2d, width_, height_);
            return Image::from_vector_clipped(width_, height_, psi.synthesize(res.x));
        }
        case Method::dgi:
            return dgi_reconstruct(phi_, y, width_, height_);
        case Method::gan: {
            const Image coarse = l2_->reconstruct(y);
            const nn::Tensor in = nn::batch_from_images({coarse});
            const nn::Tensor out = generator_->forward(in, nn::Mode::eval, false);
            return nn::image_from_tensor(out, 0);
        }
    }
    throw std::invalid_argument("unknown method value");
}

void SweepSpec::validate() const {
    if (sampling_rates.empty() || noise_levels.empty() || methods.empty() || seeds.empty())
        throw std::invalid_argument("sweep axes must be non-empty");
    for (double sr : sampling_rates)
        if (!(sr > 0.0 && sr <= 1.0))
            throw std::invalid_argument("sampling rates must lie in (0, 1]");
    for (double lvl : noise_levels)
        if (lvl < 0.0) throw std::invalid_argument("noise levels must be non-negative");
    iterative.validate();
}

std::string csv_header() {
    return "method,sr,noise_level,mean_psnr,std_psnr,mean_ssim,std_ssim,n,extractor_mode,seed";
}

std::string csv_line(const SweepRow& row) {
    std::ostringstream out;
    out << row.method << ',' << format_double(row.sr) << ',' << format_double(row.noise_level)
        << ',' << format_double(row.mean_psnr) << ',' << format_double(row.std_psnr) << ','
        << format_double(row.mean_ssim) << ',' << format_double(row.std_ssim) << ',' << row.n
        << ',' << row.extractor_mode << ',' << row.seed;
    return out.str();
}

std::vector<SweepRow> run_sweep(const std::vector<Image>& test_images, const SweepSpec& spec,
                                nn::Generator* generator, const std::string& extractor_mode,
                                std::ostream* csv) {
    spec.validate();
    if (test_images.empty()) throw std::invalid_argument("sweep needs test images");
    const int width = test_images.front().width;
    const int height = test_images.front().height;
    for (const Image& img : test_images)
        if (img.width != width || img.height != height)
            throw std::invalid_argument("test images must share one size");
    const int n = width * height;
    const bool ssim_ok = width >= 11 && height >= 11;

    if (csv) {
        (*csv) << csv_header() << "\n";
        csv->flush();
    }

    std::vector<SweepRow> rows;
    for (const std::uint64_t seed : spec.seeds) {
        for (const double sr : spec.sampling_rates) {
            const ScanningBasis phi = build_scanning_basis(measurement_count(sr, n), n, seed);
            for (const Method method : spec.methods) {
                Reconstructor recon(method, phi, width, height, spec.iterative, generator);
                for (const double level : spec.noise_levels) {
                    const double sigma = level * n;
                    std::vector<double> psnrs, ssims;
                    psnrs.reserve(test_images.size());
                    ssims.reserve(test_images.size());
                    for (std::size_t i = 0; i < test_images.size(); ++i) {
                        const MeasurementVector y = acquire(
                            phi, test_images[i], sigma,
                            mix_seed(seed, static_cast<std::uint64_t>(i)));
                        const Image rec = recon.reconstruct(y);
                        psnrs.push_back(psnr(test_images[i], rec));
                        ssims.push_back(ssim_ok ? ssim(test_images[i], rec) : 0.0);
                    }
                    const Stats ps = aggregate(psnrs);
                    const Stats ss = aggregate(ssims);
                    SweepRow row;
                    row.method = to_string(method);
                    row.sr = sr;
                    row.noise_level = level;
                    row.mean_psnr = ps.mean;
                    row.std_psnr = ps.stddev;
                    row.mean_ssim = ss.mean;
                    row.std_ssim = ss.stddev;
                    row.n = static_cast<int>(test_images.size());
                    row.extractor_mode = method == Method::gan ? extractor_mode : "none";
                    row.seed = seed;
                    rows.push_back(row);
                    if (csv) {
                        (*csv) << csv_line(row) << "\n";
                        csv->flush();
                    }
                }
            }
        }
    }
    return rows;
}

TimingModel make_timing_model(int patterns, double reconstruction_seconds, double dmd_rate) {
    if (patterns <= 0) throw std::invalid_argument("pattern count must be positive");
    if (reconstruction_seconds < 0.0)
        throw std::invalid_argument("reconstruction time must be non-negative");
    if (dmd_rate <= 0.0) throw std::invalid_argument("modulation rate must be positive");
    TimingModel t;
    t.dmd_rate = dmd_rate;
    t.patterns = patterns;
    t.acquisition_seconds = patterns / dmd_rate;
    t.reconstruction_seconds = reconstruction_seconds;
    t.total_seconds = t.acquisition_seconds + t.reconstruction_seconds;
    t.fps = 1.0 / t.total_seconds;
    return t;
}

TimingModel benchmark_timing(Reconstructor& recon, const ScanningBasis& phi, const Image& sample,
                             int n_frames) {
    if (n_frames <= 0) throw std::invalid_argument("frame count must be positive");
    const MeasurementVector y = acquire(phi, sample, 0.0, 0);
    std::vector<double> times;
    times.reserve(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        const double t0 = wall_seconds();
        recon.reconstruct(y);
        times.push_back(wall_seconds() - t0);
    }
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    const double median = times.size() % 2 == 1
                              ? times[mid]
                              : 0.5 * (times[mid - 1] + times[mid]);
    return make_timing_model(phi.k, median);
}

VideoResult reconstruct_frames(const std::string& frame_dir, Reconstructor& recon,
                               const ScanningBasis& phi, double sigma, std::uint64_t noise_seed,
                               int width, int height) {
    const std::vector<std::string> files = list_files(frame_dir);
    if (files.empty()) throw std::invalid_argument("no frames in " + frame_dir);

    VideoResult result;
    std::uint64_t index = 0;
    for (const std::string& file : files) {
        Image frame;
        try {
            frame = load_image_file(file, width, height);
        } catch (const IoError&) {
            ++result.skipped;
            continue;
        }
        const MeasurementVector y = acquire(phi, frame, sigma, mix_seed(noise_seed, index));
        const double t0 = wall_seconds();
        Image rec = recon.reconstruct(y);
        result.seconds.push_back(wall_seconds() - t0);
        result.frames.push_back(std::move(rec));
        result.files.push_back(file);
        ++index;
    }
    if (result.frames.empty())
        throw std::invalid_argument("no decodable frames in " + frame_dir);
    return result;
}

}  // namespace spi
