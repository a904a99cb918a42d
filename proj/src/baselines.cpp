#include "spi/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "spi/errors.hpp"
#include "spi/rng.hpp"

namespace spi {

namespace {

Image clip_to_image(const Eigen::VectorXd& x, int width, int height) {
    return Image::from_vector_clipped(width, height, x);
}

void check_dims(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y) {
    if (y.size() != phi.rows())
        throw std::invalid_argument("measurement length does not match pattern count");
}

}  // namespace

void IterativeConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (step_size < 0.0) throw std::invalid_argument("step_size must be positive");
    if (l1_weight < 0.0) throw std::invalid_argument("l1_weight must be non-negative");
}

IterativeResult cgd_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                          const IterativeConfig& cfg) {
    cfg.validate();
    check_dims(phi, y);
    const int n = static_cast<int>(phi.cols());

    // Conjugate-residual iteration on A x = b with A = Phi^T Phi, b = Phi^T y.
    // Minimizes ||b - A x_t|| over the Krylov space, hence the residual
    // history is non-increasing; from x0 = 0 the limit is the minimum-norm
    // least-squares solution.
    const Eigen::VectorXd b = phi.transpose() * y;
    const auto apply = [&phi](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return phi.transpose() * (phi * v);
    };

    IterativeResult out;
    out.x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    Eigen::VectorXd ar = apply(r);
    Eigen::VectorXd ap = ar;
    double r_ar = r.dot(ar);

    const double bnorm = b.norm();
    const double target = cfg.tolerance * (bnorm > 0.0 ? bnorm : 1.0);
    out.history.push_back(r.norm());
    if (out.history.back() <= target) {
        out.converged = true;
        return out;
    }

    for (int t = 0; t < cfg.max_iters; ++t) {
        const double denom = ap.squaredNorm();
        if (!(denom > 0.0) || !(r_ar > 0.0)) break;  // exact solution reached
        const double alpha = r_ar / denom;
        out.x += alpha * p;
        r -= alpha * ap;
        out.iterations = t + 1;
        out.history.push_back(r.norm());
        if (r.norm() <= target) {
            out.converged = true;
            break;
        }
        const Eigen::VectorXd ar_next = apply(r);
        const double r_ar_next = r.dot(ar_next);
        const double beta = r_ar_next / r_ar;
        p = r + beta * p;
        ap = ar_next + beta * ap;
        ar = ar_next;
        r_ar = r_ar_next;
    }
    if (!out.converged && r.norm() <= target) out.converged = true;
    return out;
}

Image cgd_reconstruct(const ScanningBasis& phi, const MeasurementVector& y,
                      const IterativeConfig& cfg, int width, int height) {
    if (width * height != phi.n)
        throw std::invalid_argument("output shape does not match basis pixel count");
    return clip_to_image(cgd_solve(phi.rows, y.values, cfg).x, width, height);
}

IterativeResult ap_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                         const IterativeConfig& cfg) {
    cfg.validate();
    check_dims(phi, y);
    const Eigen::LDLT<Eigen::MatrixXd> gram = factor_gram(phi);

    IterativeResult out;
    out.x = Eigen::VectorXd::Zero(phi.cols());
    for (int t = 0; t < cfg.max_iters; ++t) {
        const Eigen::VectorXd projected =
            out.x + phi.transpose() * gram.solve(y - phi * out.x);
        const Eigen::VectorXd next = projected.cwiseMax(0.0).cwiseMin(1.0);
        const double change = (next - out.x).norm();
        out.x = next;
        out.iterations = t + 1;
        out.history.push_back(change);
        if (change <= cfg.tolerance) {
            out.converged = true;
            break;
        }
    }
    return out;
}

Image ap_reconstruct(const ScanningBasis& phi, const MeasurementVector& y,
                     const IterativeConfig& cfg, int width, int height) {
    if (width * height != phi.n)
        throw std::invalid_argument("output shape does not match basis pixel count");
    return clip_to_image(ap_solve(phi.rows, y.values, cfg).x, width, height);
}

double spectral_norm_sq(const Eigen::MatrixXd& a, int iters) {
    // Power iteration on A^T A. The start vector is a fixed pseudo-random
    // draw (an all-ones start would be orthogonal to zero-sum rows); retry
    // with fresh draws in the measure-zero event of a degenerate start.
    for (std::uint64_t attempt = 0; attempt < 4; ++attempt) {
        Rng rng = make_rng(0x5eed5eedULL + attempt);
        Eigen::VectorXd v(a.cols());
        for (int i = 0; i < v.size(); ++i) v(i) = gaussian(rng);
        v.normalize();
        double lambda = 0.0;
        bool degenerate = false;
        for (int t = 0; t < iters; ++t) {
            Eigen::VectorXd w = a.transpose() * (a * v);
            const double norm = w.norm();
            if (!(norm > 0.0)) {
                degenerate = true;
                break;
            }
            lambda = v.dot(w);
            v = w / norm;
        }
        if (!degenerate) return lambda;
    }
    return 0.0;  // a (numerically) zero matrix
}

IterativeResult ista_reconstruct(const EffectiveMatrix& theta, const MeasurementVector& y,
                                 const IterativeConfig& cfg) {
    cfg.validate();
    const Eigen::MatrixXd& th = theta.matrix;
    check_dims(th, y.values);

    const double lipschitz = spectral_norm_sq(th);
    double step = cfg.step_size;
    if (step == 0.0) {
        if (!(lipschitz > 0.0)) throw std::invalid_argument("zero matrix has no valid step size");
        step = 0.9 / lipschitz;
    } else if (lipschitz > 0.0 && step > 1.0 / lipschitz * (1.0 + 1e-9)) {
        throw std::invalid_argument("step_size exceeds 1/||Theta||_2^2 = " +
                                    std::to_string(1.0 / lipschitz));
    }

    const double lam = cfg.l1_weight;
    const auto objective = [&](const Eigen::VectorXd& s) {
        return 0.5 * (th * s - y.values).squaredNorm() + lam * s.lpNorm<1>();
    };

    IterativeResult out;
    out.x = Eigen::VectorXd::Zero(th.cols());
    out.history.push_back(objective(out.x));
    for (int t = 0; t < cfg.max_iters; ++t) {
        const Eigen::VectorXd grad = th.transpose() * (th * out.x - y.values);
        const Eigen::VectorXd z = out.x - step * grad;
        const double cut = step * lam;
        const Eigen::VectorXd next =
            z.array().sign() * (z.array().abs() - cut).cwiseMax(0.0);
        const double change = (next - out.x).norm();
        out.x = next;
        out.iterations = t + 1;
        out.history.push_back(objective(out.x));
        if (change <= cfg.tolerance * std::max(1.0, out.x.norm())) {
            out.converged = true;
            break;
        }
    }
    return out;
}

Image dgi_reconstruct(const ScanningBasis& phi, const MeasurementVector& y, int width,
                      int height) {
    if (width * height != phi.n)
        throw std::invalid_argument("output shape does not match basis pixel count");
    if (phi.k < 2)
        throw std::invalid_argument("differential ghost imaging needs at least 2 patterns");
    if (y.values.size() != phi.k)
        throw std::invalid_argument("measurement length does not match pattern count");

    const Eigen::VectorXd pattern_sums = phi.rows.rowwise().sum();
    const double mean_sum = pattern_sums.mean();
    if (mean_sum == 0.0) throw NumericalError("degenerate basis: all pattern sums are zero");

    const double k = static_cast<double>(phi.k);
    const Eigen::VectorXd corr_y = phi.rows.transpose() * y.values / k;
    const Eigen::VectorXd corr_s = phi.rows.transpose() * pattern_sums / k;
    Eigen::VectorXd estimate = corr_y - (y.values.mean() / mean_sum) * corr_s;

    const double lo = estimate.minCoeff();
    const double hi = estimate.maxCoeff();
    if (hi > lo)
        estimate = (estimate.array() - lo) / (hi - lo);
    else
        estimate.setZero();  // constant estimate carries no contrast
    return Image::from_vector_clipped(width, height, estimate);
}

}  // namespace spi
