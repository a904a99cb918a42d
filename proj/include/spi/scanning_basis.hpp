#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace spi {

// K rows drawn (via a seeded permutation) from the 0/1 Walsh matrix of size
// N x N, each row scaled to unit Euclidean norm. This is the camera's
// illumination pattern set.
struct ScanningBasis {
    int k = 0;
    int n = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd rows;  // k x n

    double sampling_rate() const { return static_cast<double>(k) / n; }

    // Row r reshaped to height x width; used by correlation methods.
    Eigen::VectorXd pattern(int r) const { return rows.row(r); }
};

// Builds the basis: N x N Sylvester-Hadamard -> (H+1)/2 -> seeded row
// permutation -> first K rows -> per-row unit normalization.
// Deterministic given (k, n, seed). n must be a power of two, 1 <= k <= n.
ScanningBasis build_scanning_basis(int k, int n, std::uint64_t seed);

// Number of measurements for a sampling rate: round(sr * n), clamped to [1, n].
int measurement_count(double sampling_rate, int n);

// Binary persistence: 16-byte header (magic "SPIB", version u32, K u32, N u32)
// followed by K*N little-endian float32, row-major. Rows are re-normalized on
// load to undo float32 rounding of the per-row constant.
void save_basis(const ScanningBasis& basis, const std::string& path);
ScanningBasis load_basis(const std::string& path);

}  // namespace spi
