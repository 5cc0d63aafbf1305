#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "htsr/gaussian.hpp"
#include "htsr/hierarchy.hpp"

namespace htsr {

/// Independent per-level base forecasts: a Gaussian over the N bottom
/// series (diagonal when assembled from marginals) and a Gaussian over the
/// M summary series.
struct BaseForecasts {
    Gaussian bottom;
    Gaussian upper;
};

struct ReconcileDiagnostics {
    double jitter_used = 0.0;
    double min_eigenvalue = 0.0;  // of the assembled precision, pre-jitter
    bool pd_repair_applied = false;
};

struct ReconciledPosterior {
    Gaussian dist;
    ReconcileDiagnostics diagnostics;
};

/// Closed-form linear-Gaussian reconciliation:
///   Σ' = (Σ_b⁻¹ + Aᵀ[Σ_u⁻¹ − (AΣ_bAᵀ)⁻¹]A)⁻¹
///   μ' = μ_b + Σ' Aᵀ Σ_u⁻¹ (μ_u − Aμ_b)
/// Throws IncoherentForecastsError when the assembled precision is
/// indefinite beyond the jitter budget.
ReconciledPosterior reconcile_lg(const BaseForecasts& f, const Hierarchy& h);

/// Unnormalized log posterior of the density-ratio update:
///   log p(x) + log η(f(x)) − log p_u(f(x))
/// with p_u the pushforward of the prior through f. The linear factory
/// computes p_u in closed form; the general one takes a caller-supplied map
/// and pushforward log-density.
class DensityRatioPosterior {
public:
    static DensityRatioPosterior linear(const BaseForecasts& f, const Hierarchy& h);
    static DensityRatioPosterior general(
        Gaussian prior, Gaussian upper,
        std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map,
        std::function<double(const Eigen::VectorXd&)> log_pushforward);

    double log_unnorm(const Eigen::VectorXd& x) const;

    const Gaussian& prior() const { return prior_; }

private:
    DensityRatioPosterior(Gaussian prior, Gaussian upper,
                          std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map,
                          std::function<double(const Eigen::VectorXd&)> log_pushforward);

    Gaussian prior_;
    Gaussian upper_;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map_;
    std::function<double(const Eigen::VectorXd&)> log_pushforward_;
};

struct GridMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Quadrature oracle for the linear-Gaussian posterior: tensor-product grid
/// over prior mean ± half_width_sigmas·σ per dimension, Riemann-normalized.
/// N ≤ 3, points_per_dim ≥ 51, total grid ≤ 1e7 points. The default entry
/// point parallelizes the grid sweep with OpenMP; the `_serial` variant is
/// the reference implementation the tests compare against.
GridMoments grid_posterior_moments(const BaseForecasts& f, const Hierarchy& h,
                                   double half_width_sigmas = 6.0,
                                   int points_per_dim = 201);
GridMoments grid_posterior_moments_serial(const BaseForecasts& f, const Hierarchy& h,
                                          double half_width_sigmas = 6.0,
                                          int points_per_dim = 201);

/// Reconciler registry. "et" is the closed-form reconciler above;
/// "identity" passes the bottom forecast through unchanged (harness
/// baseline). Unknown names raise ParseError. The slot exists so external
/// reconcilers can be plugged in without touching the harness.
using Reconciler = std::function<ReconciledPosterior(const BaseForecasts&, const Hierarchy&)>;
Reconciler make_reconciler(const std::string& name);
std::vector<std::string> builtin_reconcilers();

/// Seeded random N-bottom / 1-upper instance for oracle checks: random PD
/// Σ_θ, means in [−3, 3], A a single all-ones row, upper variance drawn in
/// [0.5, 2] × AΣ_θAᵀ so the closed form stays well posed.
BaseForecasts random_linear_instance(std::uint64_t seed, Eigen::Index n_bottom);

}  // namespace htsr
