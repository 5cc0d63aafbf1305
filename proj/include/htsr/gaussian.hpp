#pragma once

#include <Eigen/Dense>
#include <vector>

#include "htsr/errors.hpp"
#include "htsr/rng.hpp"

namespace htsr {

/// Lower-triangular Cholesky factor of a covariance, together with the
/// diagonal jitter that was needed to make the factorization succeed.
struct CholeskyFactor {
    Eigen::MatrixXd lower;
    double jitter_used = 0.0;

    /// Solves L z = b.
    Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const {
        return lower.triangularView<Eigen::Lower>().solve(b);
    }

    /// Solves (L Lᵀ) z = b.
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        Eigen::VectorXd y = lower.triangularView<Eigen::Lower>().solve(b);
        return lower.transpose().triangularView<Eigen::Upper>().solve(y);
    }

    template <typename Derived>
    Eigen::MatrixXd solve(const Eigen::MatrixBase<Derived>& b) const {
        Eigen::MatrixXd y = lower.triangularView<Eigen::Lower>().solve(b.eval());
        return lower.transpose().triangularView<Eigen::Upper>().solve(y);
    }

    double log_det() const {
        return 2.0 * lower.diagonal().array().log().sum();
    }
};

/// Factorizes a symmetric matrix, escalating diagonal jitter
/// 0 → 1e-12 → 1e-10 → ... (×100) up to 1e-4·trace/d.
/// Throws NotPositiveDefiniteError when the budget is exhausted.
CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& sym);

/// Multivariate normal. The covariance is symmetrized on construction and
/// must be positive definite (after jitter); the factorization is cached.
/// Immutable after construction.
class Gaussian {
public:
    Gaussian(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

    /// 1D convenience.
    Gaussian(double mean, double var);

    Eigen::Index dim() const { return mean_.size(); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    const CholeskyFactor& chol() const { return chol_; }

    double log_pdf(const Eigen::VectorXd& x) const;
    double log_pdf(double x) const;

    /// N(Aμ, AΣAᵀ).
    Gaussian affine_pushforward(const Eigen::MatrixXd& a) const;

    /// Conditional over the unobserved coordinates given exact observations
    /// of the coordinates in `observed_idx`.
    Gaussian condition(const std::vector<Eigen::Index>& observed_idx,
                       const Eigen::VectorXd& observed_vals) const;

    std::vector<Eigen::VectorXd> sample(Rng& rng, int n) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    CholeskyFactor chol_;
};

/// Diagonal Gaussian from independent scalar marginals.
Gaussian product_of_marginals(const std::vector<Gaussian>& marginals);

}  // namespace htsr
