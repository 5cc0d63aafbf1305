#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "htsr/gaussian.hpp"
#include "htsr/gp.hpp"
#include "htsr/hierarchy.hpp"
#include "htsr/kernels.hpp"
#include "htsr/reconcile.hpp"

namespace htsr {

/// Four sine-wave series with i.i.d. Gaussian noise: observations on the
/// first period, hidden truth on the second, summary series as the sum.
struct SyntheticDataset {
    Eigen::VectorXd train_t;  // in [0, 2π)
    Eigen::VectorXd test_t;   // in [2π, 4π]
    Eigen::MatrixXd y;        // N × T_train observations
    Eigen::MatrixXd x_true;   // N × T_test hidden states
    Eigen::VectorXd u_true;   // T_test, exact column sums of x_true
    double sigma_eps = 0.0;
    std::uint64_t seed = 0;
};

SyntheticDataset gen_experiment_a(double sigma_eps, int points_per_period,
                                  std::uint64_t seed);

/// Shifts each bottom prediction's mean by one N(0,1) draw per series
/// (constant across time steps); covariances untouched.
std::vector<GpPrediction> shift_forecasts_b(const std::vector<GpPrediction>& base,
                                            std::uint64_t seed);

/// Average over time steps of −log density of the truth.
double nlpd(const std::vector<Gaussian>& dists,
            const std::vector<Eigen::VectorXd>& truths);

struct Aggregate {
    double mean = 0.0;
    double sem = 0.0;
    double sd = 0.0;  // n−1 denominator; 0 by convention for a single value
};

Aggregate aggregate(const std::vector<double>& values);

/// Per-method NLPD samples for one (experiment, noise level) run.
struct RunReport {
    std::string experiment;
    double sigma_eps = 0.0;
    int n_sims = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::string> methods;            // "base" first, then reconcilers
    std::vector<std::vector<double>> nlpd_by_method;  // [method][sim], NaN = failed sim
    std::vector<std::string> failures;           // per-sim error messages, "" if ok

    Aggregate aggregate_for(std::size_t method) const;
};

/// Long-format rows: method,sigma_eps,sim_index,nlpd. Full precision.
void write_per_sim_csv(const std::vector<RunReport>& reports, std::ostream& out);
std::vector<RunReport> read_per_sim_csv(std::istream& in);

/// Summary rows mean/SEM/SD per method per noise level.
void write_summary_csv(const std::vector<RunReport>& reports, std::ostream& out);
void write_summary_text(const std::vector<RunReport>& reports, std::ostream& out);

struct ExperimentConfig {
    std::string experiment = "a";  // "a", "b", or "real"
    double sigma_eps = 0.1;
    int n_sims = 50;
    int points_per_period = 50;
    std::string kernel_bottom = "periodic(p=fixed(6.283185307179586))";
    std::string kernel_upper = "periodic(p=fixed(6.283185307179586))";
    double noise_init = 0.1;
    std::vector<std::string> reconcilers = {"et"};
    std::uint64_t master_seed = 0;
    int jobs = 0;  // 0 = runtime default
    bool skip_on_failure = false;
    int fit_starts = 8;

    // real mode: bottom series matrix (N × T, aligned with the hierarchy's
    // bottom labels) plus window sizes; window start advances one step per
    // simulation.
    Eigen::MatrixXd real_bottom;
    std::optional<Hierarchy> hierarchy;  // defaults to 4-into-1 for a/b
    int train_window = 60;
    int test_window = 24;
};

/// Runs n_sims simulations (concurrently when OpenMP is enabled; results
/// are bitwise-independent of the worker count) and aggregates NLPD per
/// method. Throws on the first simulation failure unless skip_on_failure.
RunReport run_experiment(const ExperimentConfig& config);

/// One simulation's fitted forecasts, exposed for the CLI's `gen` dumps.
struct SimulationForecasts {
    SyntheticDataset data;
    std::vector<GpPrediction> bottom;  // after the B-shift when experiment == "b"
    GpPrediction upper;
};

SimulationForecasts simulate_forecasts(const ExperimentConfig& config, int sim_index);

}  // namespace htsr
