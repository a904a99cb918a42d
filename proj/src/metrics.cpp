#include "spi/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace spi {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2 with L = 1
constexpr double kC2 = 0.03 * 0.03;

void check_shapes(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("images must share dimensions to be compared");
}

Eigen::MatrixXd gaussian_window() {
    Eigen::MatrixXd w(kWindow, kWindow);
    const int c = kWindow / 2;
    for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
            const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
            w(i, j) = std::exp(-d2 / (2.0 * kWindowSigma * kWindowSigma));
        }
    return w / w.sum();
}

}  // namespace

double mse(const Image& x, const Image& xhat) {
    check_shapes(x, xhat);
    return (x.pixels - xhat.pixels).squaredNorm() / static_cast<double>(x.n());
}

double psnr(const Image& x, const Image& xhat, double peak, double cap) {
    if (!(peak > 0.0)) throw std::invalid_argument("peak must be positive");
    const double err = mse(x, xhat);
    if (err < 1e-12) return cap;
    return 10.0 * std::log10(peak * peak / err);
}

double ssim(const Image& x, const Image& xhat) {
    check_shapes(x, xhat);
    if (x.width < kWindow || x.height < kWindow)
        throw std::invalid_argument("ssim needs images of at least 11x11 pixels");

    static const Eigen::MatrixXd w = gaussian_window();
    double total = 0.0;
    int windows = 0;
    for (int top = 0; top + kWindow <= x.height; ++top) {
        for (int left = 0; left + kWindow <= x.width; ++left) {
            double mu1 = 0.0, mu2 = 0.0, e11 = 0.0, e22 = 0.0, e12 = 0.0;
            for (int i = 0; i < kWindow; ++i) {
                for (int j = 0; j < kWindow; ++j) {
                    const double wij = w(i, j);
                    const double a = x.at(top + i, left + j);
                    const double b = xhat.at(top + i, left + j);
                    mu1 += wij * a;
                    mu2 += wij * b;
                    e11 += wij * a * a;
                    e22 += wij * b * b;
                    e12 += wij * a * b;
                }
            }
            const double var1 = e11 - mu1 * mu1;
            const double var2 = e22 - mu2 * mu2;
            const double cov = e12 - mu1 * mu2;
            total += ((2.0 * mu1 * mu2 + kC1) * (2.0 * cov + kC2)) /
                     ((mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2));
            ++windows;
        }
    }
    return total / windows;
}

QualityScore score(const Image& x, const Image& xhat, double peak) {
    QualityScore q;
    q.mse = mse(x, xhat);
    q.psnr_db = psnr(x, xhat, peak);
    q.ssim = ssim(x, xhat);
    return q;
}

}  // namespace spi
