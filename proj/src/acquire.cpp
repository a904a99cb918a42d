#include "spi/acquire.hpp"

#include <stdexcept>
#include <string>

namespace spi {

Eigen::VectorXd sample_noise(int k, double sigma, Rng& rng) {
    if (k < 0) throw std::invalid_argument("noise vector length must be non-negative");
    if (!(sigma >= 0.0))
        throw std::invalid_argument("noise sigma must be non-negative, got " +
                                    std::to_string(sigma));
    Eigen::VectorXd q = Eigen::VectorXd::Zero(k);
    if (sigma == 0.0) return q;
    for (int i = 0; i < k; ++i) q(i) = sigma * gaussian(rng);
    return q;
}

MeasurementVector acquire(const ScanningBasis& basis, const Image& image, double sigma,
                          std::uint64_t noise_seed) {
    if (image.n() != basis.n)
        throw std::invalid_argument("image has " + std::to_string(image.n()) +
                                    " pixels but basis expects " + std::to_string(basis.n));
    Rng rng = make_rng(noise_seed);
    MeasurementVector m;
    m.values = basis.rows * image.pixels + sample_noise(basis.k, sigma, rng);
    m.sigma = sigma;
    m.noise_level = sigma / static_cast<double>(basis.n);
    m.seed = noise_seed;
    return m;
}

}  // namespace spi
