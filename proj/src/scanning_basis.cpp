#include "spi/scanning_basis.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "spi/errors.hpp"
#include "spi/rng.hpp"
#include "spi/walsh.hpp"

namespace spi {

ScanningBasis build_scanning_basis(int k, int n, std::uint64_t seed) {
    if (!is_power_of_two(n))
        throw std::invalid_argument("basis size N must be a power of two, got " +
                                    std::to_string(n));
    if (k < 1 || k > n)
        throw std::invalid_argument("measurement count K must satisfy 1 <= K <= N, got K=" +
                                    std::to_string(k) + " N=" + std::to_string(n));

    Rng rng = make_rng(seed);
    const std::vector<int> perm = permutation(n, rng);

    ScanningBasis basis;
    basis.k = k;
    basis.n = n;
    basis.seed = seed;
    basis.rows.resize(k, n);
    for (int r = 0; r < k; ++r) {
        const std::uint64_t i = static_cast<std::uint64_t>(perm[r]);
        for (int j = 0; j < n; ++j)
            basis.rows(r, j) = hadamard_entry(i, static_cast<std::uint64_t>(j)) > 0.0 ? 1.0 : 0.0;
        basis.rows.row(r) /= basis.rows.row(r).norm();
    }
    return basis;
}

int measurement_count(double sampling_rate, int n) {
    if (!(sampling_rate > 0.0) || sampling_rate > 1.0)
        throw std::invalid_argument("sampling rate must lie in (0, 1]");
    const long long k = std::llround(sampling_rate * n);
    return static_cast<int>(std::max(1LL, std::min<long long>(k, n)));
}

namespace {

constexpr char kBasisMagic[4] = {'S', 'P', 'I', 'B'};
constexpr std::uint32_t kBasisVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

void save_basis(const ScanningBasis& basis, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kBasisMagic, 4);
    write_u32(out, kBasisVersion);
    write_u32(out, static_cast<std::uint32_t>(basis.k));
    write_u32(out, static_cast<std::uint32_t>(basis.n));
    std::vector<float> row(basis.n);
    for (int r = 0; r < basis.k; ++r) {
        for (int j = 0; j < basis.n; ++j) row[j] = static_cast<float>(basis.rows(r, j));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

ScanningBasis load_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kBasisMagic, 4) != 0)
        throw IoError("not a scanning-basis file (bad magic): " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kBasisVersion)
        throw IoError("unsupported scanning-basis version " + std::to_string(version));
    const std::uint32_t k = read_u32(in);
    const std::uint32_t n = read_u32(in);
    if (!in || k == 0 || n == 0 || k > n || !is_power_of_two(n))
        throw IoError("corrupt scanning-basis header: " + path);

    ScanningBasis basis;
    basis.k = static_cast<int>(k);
    basis.n = static_cast<int>(n);
    basis.rows.resize(basis.k, basis.n);
    std::vector<float> row(basis.n);
    for (int r = 0; r < basis.k; ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) throw IoError("truncated scanning-basis file: " + path);
        for (int j = 0; j < basis.n; ++j) basis.rows(r, j) = static_cast<double>(row[j]);
        const double norm = basis.rows.row(r).norm();
        if (norm > 0.0) basis.rows.row(r) /= norm;
    }
    return basis;
}

}  // namespace spi
