#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spi/acquire.hpp"
#include "spi/image.hpp"
#include "spi/linear_recovery.hpp"
#include "spi/scanning_basis.hpp"

namespace spi {

// Shared knobs for the iterative solvers. step_size and l1_weight only
// matter for ISTA; step_size == 0 means "use 0.9 / ||Theta||_2^2".
struct IterativeConfig {
    int max_iters = 500;
    double tolerance = 1e-6;
    double step_size = 0.0;
    double l1_weight = 1e-3;

    void validate() const;
};

// Raw solver output before clipping into an Image; history carries one entry
// per iteration so convergence behaviour is testable.
struct IterativeResult {
    Eigen::VectorXd x;
    bool converged = false;
    int iterations = 0;
    std::vector<double> history;  // solver-specific progress measure, see each op
};

// Conjugate-direction solve of the normal equations Phi^T Phi x = Phi^T y
// from x0 = 0 (conjugate-residual variant, so the normal-equation residual
// ||Phi^T (Phi x_t - y)|| is non-increasing; history records it per iterate).
IterativeResult cgd_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                          const IterativeConfig& cfg);
Image cgd_reconstruct(const ScanningBasis& phi, const MeasurementVector& y,
                      const IterativeConfig& cfg, int width, int height);

// Projection onto convex sets: alternate exact measurement-consistency
// projection x + Phi^T (Phi Phi^T)^-1 (y - Phi x) with clipping into [0,1].
// history records the iterate change ||x_{t+1} - x_t||.
IterativeResult ap_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                         const IterativeConfig& cfg);
Image ap_reconstruct(const ScanningBasis& phi, const MeasurementVector& y,
                     const IterativeConfig& cfg, int width, int height);

// Iterative shrinkage-thresholding for min 1/2||Theta s - y||^2 + l1 ||s||_1
// from s0 = 0. history records the objective per iterate (non-increasing for
// a valid step size). Throws std::invalid_argument when step_size exceeds
// 1 / ||Theta||_2^2 (spectral norm estimated by power iteration).
IterativeResult ista_reconstruct(const EffectiveMatrix& theta, const MeasurementVector& y,
                                 const IterativeConfig& cfg);

// Largest squared singular value of a, by deterministic power iteration.
double spectral_norm_sq(const Eigen::MatrixXd& a, int iters = 200);

// Differential ghost imaging: correlation estimate
//   x_hat = <y_i P_i> - (<y_i>/<S_i>) <S_i P_i>
// over the K patterns P_i (rows of Phi) with S_i the entry sum of P_i,
// min-max normalized into [0,1].
Image dgi_reconstruct(const ScanningBasis& phi, const MeasurementVector& y, int width,
                      int height);

}  // namespace spi
