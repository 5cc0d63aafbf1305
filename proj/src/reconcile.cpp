#include "htsr/reconcile.hpp"

#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace htsr {

namespace {

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& m) {
    CholeskyFactor chol = cholesky_with_jitter(m);
    Eigen::MatrixXd inv = chol.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
}

void check_dims(const BaseForecasts& f, const Hierarchy& h) {
    if (f.bottom.dim() != h.n_bottom()) {
        throw ContractError("reconcile: bottom forecast dimension does not match N");
    }
    if (f.upper.dim() != h.n_upper()) {
        throw ContractError("reconcile: upper forecast dimension does not match M");
    }
}

}  // namespace

ReconciledPosterior reconcile_lg(const BaseForecasts& f, const Hierarchy& h) {
    check_dims(f, h);
    const Eigen::MatrixXd& a = h.matrix();

    Eigen::MatrixXd prec_bottom = inverse_spd(f.bottom.cov());
    Eigen::MatrixXd pushed = a * f.bottom.cov() * a.transpose();
    Eigen::MatrixXd pushed_inv = inverse_spd(0.5 * (pushed + pushed.transpose()));
    Eigen::MatrixXd upper_inv = inverse_spd(f.upper.cov());

    Eigen::MatrixXd precision =
        prec_bottom + a.transpose() * (upper_inv - pushed_inv) * a;
    precision = 0.5 * (precision + precision.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(precision,
                                                       Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double scale = precision.cwiseAbs().maxCoeff();
    if (min_eig < -1e-6 * scale) {
        std::ostringstream msg;
        msg << "incoherent forecasts: assembled precision has eigenvalue " << min_eig
            << " (scale " << scale << "); the upper forecast is too certain relative "
            << "to the aggregated bottom forecast";
        throw IncoherentForecastsError(msg.str());
    }

    CholeskyFactor chol;
    try {
        chol = cholesky_with_jitter(precision);
    } catch (const NotPositiveDefiniteError&) {
        std::ostringstream msg;
        msg << "incoherent forecasts: precision not repairable within jitter budget, "
            << "min eigenvalue " << min_eig;
        throw IncoherentForecastsError(msg.str());
    }

    Eigen::MatrixXd cov =
        chol.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
    cov = 0.5 * (cov + cov.transpose());
    Eigen::VectorXd mean =
        f.bottom.mean() +
        cov * a.transpose() * upper_inv * (f.upper.mean() - a * f.bottom.mean());

    ReconcileDiagnostics diag{chol.jitter_used, min_eig, chol.jitter_used > 0.0};
    return ReconciledPosterior{Gaussian(std::move(mean), cov), diag};
}

DensityRatioPosterior::DensityRatioPosterior(
    Gaussian prior, Gaussian upper,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map,
    std::function<double(const Eigen::VectorXd&)> log_pushforward)
    : prior_(std::move(prior)),
      upper_(std::move(upper)),
      map_(std::move(map)),
      log_pushforward_(std::move(log_pushforward)) {}

DensityRatioPosterior DensityRatioPosterior::linear(const BaseForecasts& f,
                                                    const Hierarchy& h) {
    check_dims(f, h);
    Eigen::MatrixXd a = h.matrix();
    Gaussian pushed = f.bottom.affine_pushforward(a);
    return DensityRatioPosterior(
        f.bottom, f.upper,
        [a](const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); },
        [pushed](const Eigen::VectorXd& u) { return pushed.log_pdf(u); });
}

DensityRatioPosterior DensityRatioPosterior::general(
    Gaussian prior, Gaussian upper,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map,
    std::function<double(const Eigen::VectorXd&)> log_pushforward) {
    return DensityRatioPosterior(std::move(prior), std::move(upper), std::move(map),
                                 std::move(log_pushforward));
}

double DensityRatioPosterior::log_unnorm(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u = map_(x);
    double log_upper = upper_.log_pdf(u);
    double log_pushed = log_pushforward_(u);
    if (!std::isfinite(log_pushed) && std::isfinite(log_upper)) {
        throw ContractError(
            "density ratio: pushforward density vanishes where the upper "
            "forecast has mass");
    }
    return prior_.log_pdf(x) + log_upper - log_pushed;
}

namespace {

struct Grid {
    Eigen::Index dim;
    long long total;
    int ppd;
    Eigen::VectorXd origin;
    Eigen::VectorXd step;
    double cell_volume;

    Eigen::VectorXd point(long long flat) const {
        Eigen::VectorXd x(dim);
        for (Eigen::Index d = 0; d < dim; ++d) {
            x(d) = origin(d) + static_cast<double>(flat % ppd) * step(d);
            flat /= ppd;
        }
        return x;
    }
};

Grid make_grid(const BaseForecasts& f, double half_width_sigmas, int points_per_dim) {
    const Eigen::Index n = f.bottom.dim();
    if (n > 3) throw ContractError("grid oracle: N must be <= 3");
    if (points_per_dim < 51) throw ContractError("grid oracle: need >= 51 points per dim");
    double total = std::pow(static_cast<double>(points_per_dim), static_cast<double>(n));
    if (total > 1e7) throw OracleError("grid oracle: grid budget (1e7 points) exceeded");

    Grid g;
    g.dim = n;
    g.ppd = points_per_dim;
    g.total = static_cast<long long>(total);
    g.origin.resize(n);
    g.step.resize(n);
    g.cell_volume = 1.0;
    for (Eigen::Index d = 0; d < n; ++d) {
        double sd = std::sqrt(f.bottom.cov()(d, d));
        double lo = f.bottom.mean()(d) - half_width_sigmas * sd;
        double hi = f.bottom.mean()(d) + half_width_sigmas * sd;
        g.origin(d) = lo;
        g.step(d) = (hi - lo) / static_cast<double>(points_per_dim - 1);
        g.cell_volume *= g.step(d);
    }
    return g;
}

GridMoments moments_from_log(const Grid& g, const std::vector<double>& logp) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (double v : logp) max_log = std::max(max_log, v);
    if (!std::isfinite(max_log)) {
        throw OracleError("grid oracle: posterior mass is zero on the grid");
    }

    double mass = 0.0;
    Eigen::VectorXd first = Eigen::VectorXd::Zero(g.dim);
    for (long long i = 0; i < g.total; ++i) {
        double w = std::exp(logp[static_cast<std::size_t>(i)] - max_log);
        mass += w;
        first += w * g.point(i);
    }
    if (mass <= 0.0) throw OracleError("grid oracle: posterior mass is zero on the grid");
    Eigen::VectorXd mean = first / mass;

    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(g.dim, g.dim);
    for (long long i = 0; i < g.total; ++i) {
        double w = std::exp(logp[static_cast<std::size_t>(i)] - max_log);
        Eigen::VectorXd c = g.point(i) - mean;
        second += w * c * c.transpose();
    }
    return GridMoments{mean, second / mass};
}

}  // namespace

GridMoments grid_posterior_moments_serial(const BaseForecasts& f, const Hierarchy& h,
                                          double half_width_sigmas, int points_per_dim) {
    DensityRatioPosterior post = DensityRatioPosterior::linear(f, h);
    Grid g = make_grid(f, half_width_sigmas, points_per_dim);
    std::vector<double> logp(static_cast<std::size_t>(g.total));
    for (long long i = 0; i < g.total; ++i) {
        logp[static_cast<std::size_t>(i)] = post.log_unnorm(g.point(i));
    }
    return moments_from_log(g, logp);
}

GridMoments grid_posterior_moments(const BaseForecasts& f, const Hierarchy& h,
                                   double half_width_sigmas, int points_per_dim) {
    DensityRatioPosterior post = DensityRatioPosterior::linear(f, h);
    Grid g = make_grid(f, half_width_sigmas, points_per_dim);
    std::vector<double> logp(static_cast<std::size_t>(g.total));
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < g.total; ++i) {
        logp[static_cast<std::size_t>(i)] = post.log_unnorm(g.point(i));
    }
    return moments_from_log(g, logp);
}

Reconciler make_reconciler(const std::string& name) {
    if (name == "et") {
        return [](const BaseForecasts& f, const Hierarchy& h) {
            return reconcile_lg(f, h);
        };
    }
    if (name == "identity") {
        return [](const BaseForecasts& f, const Hierarchy& h) {
            check_dims(f, h);
            return ReconciledPosterior{f.bottom, {}};
        };
    }
    throw ParseError("unknown reconciler: '" + name + "'");
}

std::vector<std::string> builtin_reconcilers() { return {"et", "identity"}; }

BaseForecasts random_linear_instance(std::uint64_t seed, Eigen::Index n_bottom) {
    Rng rng(seed);
    Eigen::VectorXd mu_b(n_bottom);
    for (Eigen::Index i = 0; i < n_bottom; ++i) mu_b(i) = rng.uniform(-3.0, 3.0);
    Eigen::MatrixXd b(n_bottom, n_bottom);
    for (Eigen::Index i = 0; i < n_bottom; ++i) {
        for (Eigen::Index j = 0; j < n_bottom; ++j) b(i, j) = rng.normal();
    }
    Eigen::MatrixXd cov_b = b * b.transpose();
    cov_b.diagonal().array() += 0.3;  // keep the instance well conditioned

    Eigen::RowVectorXd a = Eigen::RowVectorXd::Ones(n_bottom);
    double pushed_var = (a * cov_b * a.transpose())(0, 0);
    // keep the upper mean within a couple of aggregate sigmas so the
    // posterior stays inside the quadrature window of the grid oracle
    double mu_u = (a * mu_b)(0) + rng.uniform(-2.0, 2.0) * std::sqrt(pushed_var);
    double var_u = rng.uniform(0.5, 2.0) * pushed_var;
    return BaseForecasts{Gaussian(std::move(mu_b), cov_b), Gaussian(mu_u, var_u)};
}

}  // namespace htsr
