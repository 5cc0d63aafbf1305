#include "htsr/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace htsr {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& sym) {
    const Eigen::Index d = sym.rows();
    const double cap = std::max(1e-4 * sym.trace() / static_cast<double>(d), 1e-12);
    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd m = sym;
        if (jitter > 0.0) m.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) {
            return CholeskyFactor{llt.matrixL(), jitter};
        }
        if (jitter == 0.0) {
            jitter = 1e-12;
        } else if (jitter >= cap) {
            std::ostringstream msg;
            msg << "matrix of dimension " << d
                << " is not positive definite after jitter up to " << cap;
            throw NotPositiveDefiniteError(msg.str());
        } else {
            jitter = std::min(jitter * 100.0, cap);
        }
    }
}

Gaussian::Gaussian(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)) {
    if (cov.rows() != cov.cols()) {
        throw ContractError("covariance must be square");
    }
    if (mean_.size() != cov.rows()) {
        throw ContractError("mean length does not match covariance dimension");
    }
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
        throw ContractError("covariance is not symmetric within tolerance");
    }
    cov_ = 0.5 * (cov + cov.transpose());
    chol_ = cholesky_with_jitter(cov_);
}

Gaussian::Gaussian(double mean, double var)
    : Gaussian(Eigen::VectorXd::Constant(1, mean),
               Eigen::MatrixXd::Constant(1, 1, var)) {}

double Gaussian::log_pdf(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) {
        throw ContractError("log_pdf: point dimension does not match");
    }
    Eigen::VectorXd z = chol_.solve_lower(x - mean_);
    return -0.5 * (static_cast<double>(dim()) * kLog2Pi + chol_.log_det() +
                   z.squaredNorm());
}

double Gaussian::log_pdf(double x) const {
    return log_pdf(Eigen::VectorXd::Constant(1, x));
}

Gaussian Gaussian::affine_pushforward(const Eigen::MatrixXd& a) const {
    if (a.cols() != dim()) {
        throw ContractError("affine_pushforward: matrix columns do not match dimension");
    }
    Eigen::MatrixXd pushed = a * cov_ * a.transpose();
    try {
        return Gaussian(a * mean_, 0.5 * (pushed + pushed.transpose()));
    } catch (const NotPositiveDefiniteError&) {
        throw NotPositiveDefiniteError("singular pushforward: A Sigma A^T is rank deficient");
    }
}

Gaussian Gaussian::condition(const std::vector<Eigen::Index>& observed_idx,
                             const Eigen::VectorXd& observed_vals) const {
    const Eigen::Index d = dim();
    const Eigen::Index k = static_cast<Eigen::Index>(observed_idx.size());
    if (observed_vals.size() != k) {
        throw ContractError("condition: index/value count mismatch");
    }
    std::vector<bool> seen(d, false);
    for (Eigen::Index i : observed_idx) {
        if (i < 0 || i >= d) throw ContractError("condition: index out of range");
        if (seen[i]) throw ContractError("condition: duplicate observed index");
        seen[i] = true;
    }
    if (k == 0) return *this;
    if (k == d) throw ContractError("condition: empty unobserved set");

    std::vector<Eigen::Index> free_idx;
    free_idx.reserve(d - k);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!seen[i]) free_idx.push_back(i);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(free_idx.size());

    Eigen::MatrixXd s11(k, k), s21(m, k), s22(m, m);
    Eigen::VectorXd mu1(k), mu2(m);
    for (Eigen::Index i = 0; i < k; ++i) {
        mu1(i) = mean_(observed_idx[i]);
        for (Eigen::Index j = 0; j < k; ++j) s11(i, j) = cov_(observed_idx[i], observed_idx[j]);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        mu2(i) = mean_(free_idx[i]);
        for (Eigen::Index j = 0; j < k; ++j) s21(i, j) = cov_(free_idx[i], observed_idx[j]);
        for (Eigen::Index j = 0; j < m; ++j) s22(i, j) = cov_(free_idx[i], free_idx[j]);
    }

    CholeskyFactor f11 = cholesky_with_jitter(s11);
    Eigen::MatrixXd gain =
        f11.solve(Eigen::MatrixXd(s21.transpose())).transpose();  // Σ21 Σ11⁻¹
    Eigen::VectorXd cond_mean = mu2 + gain * (observed_vals - mu1);
    Eigen::MatrixXd cond_cov = s22 - gain * s21.transpose();
    return Gaussian(std::move(cond_mean), 0.5 * (cond_cov + cond_cov.transpose()));
}

std::vector<Eigen::VectorXd> Gaussian::sample(Rng& rng, int n) const {
    if (n < 1) throw ContractError("sample: n must be >= 1");
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(n));
    Eigen::VectorXd z(dim());
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < dim(); ++j) z(j) = rng.normal();
        out.push_back(mean_ + chol_.lower * z);
    }
    return out;
}

Gaussian product_of_marginals(const std::vector<Gaussian>& marginals) {
    Eigen::Index d = 0;
    for (const Gaussian& g : marginals) d += g.dim();
    Eigen::VectorXd mean(d);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    Eigen::Index at = 0;
    for (const Gaussian& g : marginals) {
        mean.segment(at, g.dim()) = g.mean();
        cov.block(at, at, g.dim(), g.dim()) = g.cov();
        at += g.dim();
    }
    return Gaussian(std::move(mean), cov);
}

}  // namespace htsr
