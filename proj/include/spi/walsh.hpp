#pragma once

#include <bit>
#include <cstdint>

#include <Eigen/Core>

namespace spi {

constexpr bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

// Entry (i, j) of the Sylvester-Hadamard matrix of any power-of-two order.
inline double hadamard_entry(std::uint64_t i, std::uint64_t j) {
    return (std::popcount(i & j) & 1) ? -1.0 : 1.0;
}

// Sylvester-Hadamard matrix of the given order (order = 2^m). Entries are
// +/-1, first row all ones, H * H^T = order * I.
Eigen::MatrixXd hadamard(int order);

}  // namespace spi
