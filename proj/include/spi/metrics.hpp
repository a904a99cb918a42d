#pragma once

#include "spi/image.hpp"

namespace spi {

struct QualityScore {
    double mse = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

// Mean squared error over all pixels (grayscale, C = 1).
double mse(const Image& x, const Image& xhat);

// 10 * log10(peak^2 / mse); returns cap when mse < 1e-12 so identical
// images score a finite value.
double psnr(const Image& x, const Image& xhat, double peak = 1.0, double cap = 99.0);

// Mean local structural similarity with an 11x11 Gaussian window
// (sigma = 1.5), C1 = (0.01 L)^2, C2 = (0.03 L)^2, L = 1. Windows are fully
// contained in the image, so both sides must be at least 11 pixels.
double ssim(const Image& x, const Image& xhat);

// Convenience bundle of all three metrics (requires ssim-compatible sizes).
QualityScore score(const Image& x, const Image& xhat, double peak = 1.0);

}  // namespace spi
