#include "spi/linear_recovery.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spi/errors.hpp"

namespace spi {

namespace {
constexpr double kGramJitter = 1e-10;
constexpr double kMaxCondition = 1e15;
}  // namespace

Eigen::LDLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& theta) {
    Eigen::MatrixXd gram = theta * theta.transpose();
    gram.diagonal().array() += kGramJitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    const double condition = (dmin > 0.0) ? dmax / dmin : std::numeric_limits<double>::infinity();
    if (ldlt.info() != Eigen::Success || !(dmin > 0.0) || condition > kMaxCondition) {
        std::ostringstream msg;
        msg << "measurement Gram matrix is numerically singular (condition estimate "
            << condition << ")";
        throw SolverError(msg.str());
    }
    return ldlt;
}

std::string to_string(BasisKind kind) {
    return kind == BasisKind::identity ? "identity" : "dct2d";
}

BasisKind basis_kind_from_string(const std::string& name) {
    if (name == "identity") return BasisKind::identity;
    if (name == "dct2d") return BasisKind::dct2d;
    throw std::invalid_argument("unknown sparsifying basis '" + name +
                                "' (expected identity or dct2d)");
}

Eigen::MatrixXd dct_matrix(int n) {
    if (n <= 0) throw std::invalid_argument("DCT size must be positive");
    Eigen::MatrixXd d(n, n);
    const double c0 = std::sqrt(1.0 / n);
    const double ck = std::sqrt(2.0 / n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            d(k, j) = (k == 0 ? c0 : ck) * std::cos(M_PI * (j + 0.5) * k / n);
    return d;
}

SparsifyingBasis make_sparsifying_basis(BasisKind kind, int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("sparsifying basis dimensions must be positive");
    SparsifyingBasis psi;
    psi.kind = kind;
    psi.width = width;
    psi.height = height;
    if (kind == BasisKind::dct2d) {
        psi.dct_w = dct_matrix(width);
        psi.dct_h = dct_matrix(height);
    }
    return psi;
}

Eigen::VectorXd SparsifyingBasis::synthesize(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != n())
        throw std::invalid_argument("coefficient vector length does not match basis");
    if (kind == BasisKind::identity) return coeffs;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> s(coeffs.data(), height, width);
    const RowMat x = dct_h.transpose() * s * dct_w;
    return Eigen::Map<const Eigen::VectorXd>(x.data(), n());
}

Eigen::VectorXd SparsifyingBasis::analyze(const Eigen::VectorXd& x) const {
    if (x.size() != n()) throw std::invalid_argument("pixel vector length does not match basis");
    if (kind == BasisKind::identity) return x;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> xm(x.data(), height, width);
    const RowMat s = dct_h * xm * dct_w.transpose();
    return Eigen::Map<const Eigen::VectorXd>(s.data(), n());
}

Eigen::MatrixXd SparsifyingBasis::materialize() const {
    const int size = n();
    if (kind == BasisKind::identity) return Eigen::MatrixXd::Identity(size, size);
    // Psi = (D_h kron D_w)^T for row-major rasters.
    Eigen::MatrixXd psi(size, size);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int p = 0; p < height; ++p)
                for (int q = 0; q < width; ++q)
                    psi(r * width + c, p * width + q) = dct_h(p, r) * dct_w(q, c);
    return psi;
}

EffectiveMatrix effective_matrix(const ScanningBasis& phi, const SparsifyingBasis& psi) {
    if (phi.n != psi.n())
        throw std::invalid_argument("scanning and sparsifying bases disagree on pixel count");
    EffectiveMatrix theta;
    theta.psi_kind = psi.kind;
    theta.phi_seed = phi.seed;
    if (psi.kind == BasisKind::identity)
        theta.matrix = phi.rows;
    else
        theta.matrix = phi.rows * psi.materialize();
    return theta;
}

Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y) {
    if (y.size() != theta.rows())
        throw std::invalid_argument("measurement length does not match matrix row count");
    const Eigen::LDLT<Eigen::MatrixXd> ldlt = factor_gram(theta);
    return theta.transpose() * ldlt.solve(y);
}

Image l2_reconstruct(const ScanningBasis& phi, const SparsifyingBasis& psi,
                     const MeasurementVector& y) {
    const EffectiveMatrix theta = effective_matrix(phi, psi);
    const Eigen::VectorXd s = min_norm_solve(theta.matrix, y.values);
    return Image::from_vector_clipped(psi.width, psi.height, psi.synthesize(s));
}

L2Reconstructor::L2Reconstructor(const ScanningBasis& phi, const SparsifyingBasis& psi)
    : psi_(psi), theta_(effective_matrix(phi, psi).matrix), gram_(factor_gram(theta_)) {}

Eigen::VectorXd L2Reconstructor::solve(const Eigen::VectorXd& y) const {
    if (y.size() != theta_.rows())
        throw std::invalid_argument("measurement length does not match matrix row count");
    return theta_.transpose() * gram_.solve(y);
}

Image L2Reconstructor::reconstruct(const MeasurementVector& y) const {
    return Image::from_vector_clipped(psi_.width, psi_.height, psi_.synthesize(solve(y.values)));
}

}  // namespace spi
