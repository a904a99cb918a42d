#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "spi/acquire.hpp"
#include "spi/image.hpp"
#include "spi/scanning_basis.hpp"

namespace spi {

enum class BasisKind { identity, dct2d };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

// Orthonormal representation basis Psi for a W x H raster. Images and
// coefficient vectors are related by x = Psi * s (synthesis) and
// s = Psi^T * x (analysis). The dct2d kind is the separable orthonormal
// type-II DCT; identity leaves pixels untouched.
struct SparsifyingBasis {
    BasisKind kind = BasisKind::identity;
    int width = 0;
    int height = 0;
    Eigen::MatrixXd dct_w;  // 1-D DCT matrices, empty for the identity kind
    Eigen::MatrixXd dct_h;

    int n() const { return width * height; }

    Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;  // Psi * s
    Eigen::VectorXd analyze(const Eigen::VectorXd& x) const;          // Psi^T * x
    Eigen::MatrixXd materialize() const;                              // dense Psi
};

SparsifyingBasis make_sparsifying_basis(BasisKind kind, int width, int height);

// Orthonormal 1-D type-II DCT matrix: D(k,j) = c_k cos(pi (j + 1/2) k / n).
Eigen::MatrixXd dct_matrix(int n);

// Theta = Phi * Psi, the matrix the solvers actually see.
struct EffectiveMatrix {
    Eigen::MatrixXd matrix;  // K x N
    BasisKind psi_kind = BasisKind::identity;
    std::uint64_t phi_seed = 0;
};

EffectiveMatrix effective_matrix(const ScanningBasis& phi, const SparsifyingBasis& psi);

// Factors Theta * Theta^T + 1e-10 I and throws SolverError (naming the
// condition estimate) when the result is numerically singular. Shared by
// every solver that projects onto the measurement-consistent affine set.
Eigen::LDLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& theta);

// Minimum Euclidean-norm solution of Theta * s = y for underdetermined
// systems: s = Theta^T (Theta Theta^T + eps I)^-1 y with eps = 1e-10.
// Throws SolverError when the jittered Gram matrix is numerically singular.
Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y);

// Full pipeline: solve for coefficients, synthesize pixels, clip into [0,1].
Image l2_reconstruct(const ScanningBasis& phi, const SparsifyingBasis& psi,
                     const MeasurementVector& y);

// Same solve with the K x K Gram factorization cached, for reconstructing
// many measurement vectors against one basis.
class L2Reconstructor {
public:
    L2Reconstructor(const ScanningBasis& phi, const SparsifyingBasis& psi);

    Image reconstruct(const MeasurementVector& y) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const;  // coefficients, unclipped

    const Eigen::MatrixXd& theta() const { return theta_; }

private:
    SparsifyingBasis psi_;
    Eigen::MatrixXd theta_;
    Eigen::LDLT<Eigen::MatrixXd> gram_;
};

}  // namespace spi
