#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "spi/image.hpp"
#include "spi/rng.hpp"
#include "spi/scanning_basis.hpp"

namespace spi {

// One simulated bucket-detector readout: K photodiode samples plus the noise
// parameters they were generated with.
struct MeasurementVector {
    Eigen::VectorXd values;       // length K
    double sigma = 0.0;           // std-dev of the additive readout noise
    double noise_level = 0.0;     // sigma / N, scale-free noise descriptor
    std::uint64_t seed = 0;       // seed of the noise stream
};

// Draws an i.i.d. zero-mean Gaussian noise vector with std-dev sigma.
// sigma == 0 yields an exact zero vector; sigma < 0 is rejected.
Eigen::VectorXd sample_noise(int k, double sigma, Rng& rng);

// Simulates the detector: y = Phi * x + q.
MeasurementVector acquire(const ScanningBasis& basis, const Image& image, double sigma,
                          std::uint64_t noise_seed);

}  // namespace spi
