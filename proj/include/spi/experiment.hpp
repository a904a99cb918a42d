#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "spi/acquire.hpp"
#include "spi/baselines.hpp"
#include "spi/image.hpp"
#include "spi/linear_recovery.hpp"
#include "spi/nn/generator.hpp"
#include "spi/scanning_basis.hpp"

namespace spi {

enum class Method { l2, cgd, ap, ista, dgi, gan };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

// One reconstruction engine bound to a scanning basis. Factorizations and
// effective matrices are prepared once so per-frame work stays small. The
// neural method feeds the minimum-norm estimate through the supplied
// generator; passing none is an error for that method only.
class Reconstructor {
public:
    Reconstructor(Method method, const ScanningBasis& phi, int width, int height,
                  IterativeConfig iterative = {}, nn::Generator* generator = nullptr);

    Image reconstruct(const MeasurementVector& y);
    Method method() const { return method_; }

private:
    Method method_;
    const ScanningBasis& phi_;
    int width_;
    int height_;
    IterativeConfig cfg_;
    nn::Generator* generator_;
    std::unique_ptr<L2Reconstructor> l2_;      // minimum-norm path (l2 / gan)
    std::unique_ptr<EffectiveMatrix> theta_;   // sparsifying path (ista)
};

// Grid of experiment cells mirroring the sampling-rate and noise-level
// tables. noise_levels are sigma / N.
struct SweepSpec {
    std::vector<double> sampling_rates = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    std::vector<double> noise_levels = {1e-4, 3e-4, 5e-4, 8e-4, 1e-3, 3e-3, 8e-3, 2e-2};
    std::vector<Method> methods = {Method::l2};
    std::vector<std::uint64_t> seeds = {1};
    IterativeConfig iterative;

    void validate() const;  // rates in (0,1], levels >= 0, non-empty axes
};

struct SweepRow {
    std::string method;
    double sr = 0.0;
    double noise_level = 0.0;
    double mean_psnr = 0.0;
    double std_psnr = 0.0;
    double mean_ssim = 0.0;
    double std_ssim = 0.0;
    int n = 0;
    std::string extractor_mode;
    std::uint64_t seed = 0;
};

std::string csv_header();
std::string csv_line(const SweepRow& row);

// Evaluates every (method, rate, level, seed) cell on the test images:
// per-image PSNR/SSIM aggregated as mean and population standard deviation.
// Rows are appended to *csv as soon as they are computed (partial results
// survive an abort) and returned. One basis per (rate, seed) is shared by
// all methods and noise levels. SSIM is recorded as 0 for images smaller
// than its window.
std::vector<SweepRow> run_sweep(const std::vector<Image>& test_images, const SweepSpec& spec,
                                nn::Generator* generator = nullptr,
                                const std::string& extractor_mode = "none",
                                std::ostream* csv = nullptr);

// Frame-rate model: acquisition time is patterns / dmd_rate, reconstruction
// time is measured, and fps is the reciprocal of their sum.
struct TimingModel {
    double dmd_rate = 20000.0;
    int patterns = 0;
    double acquisition_seconds = 0.0;
    double reconstruction_seconds = 0.0;
    double total_seconds = 0.0;
    double fps = 0.0;
};

TimingModel make_timing_model(int patterns, double reconstruction_seconds,
                              double dmd_rate = 20000.0);

// Median wall-clock reconstruction time over n_frames repetitions on one
// sample image, folded into the timing model.
TimingModel benchmark_timing(Reconstructor& recon, const ScanningBasis& phi,
                             const Image& sample, int n_frames);

struct VideoResult {
    std::vector<std::string> files;   // lexicographic frame order
    std::vector<Image> frames;        // reconstructions in the same order
    std::vector<double> seconds;      // wall-clock reconstruction time each
    int skipped = 0;
};

// Simulated video pipeline: every decodable frame in frame_dir is acquired
// through phi (noise seeds derive from noise_seed and the frame index) and
// reconstructed in order.
VideoResult reconstruct_frames(const std::string& frame_dir, Reconstructor& recon,
                               const ScanningBasis& phi, double sigma,
                               std::uint64_t noise_seed, int width, int height);

}  // namespace spi
