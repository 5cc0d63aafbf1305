#include "htsr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "htsr/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace htsr {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kNumSeries = 4;

// Seed stream tags, so each consumer gets an independent child stream.
constexpr std::uint64_t kStreamBottomFit = 1000;
constexpr std::uint64_t kStreamUpperFit = 2000;
constexpr std::uint64_t kStreamShift = 3000;
}  // namespace

SyntheticDataset gen_experiment_a(double sigma_eps, int points_per_period,
                                  std::uint64_t seed) {
    if (sigma_eps < 0.0) throw ContractError("gen: sigma_eps must be >= 0");
    if (points_per_period < 8) throw ContractError("gen: need >= 8 points per period");
    const int t = points_per_period;
    SyntheticDataset ds;
    ds.sigma_eps = sigma_eps;
    ds.seed = seed;
    ds.train_t.resize(t);
    ds.test_t.resize(t);
    for (int i = 0; i < t; ++i) {
        ds.train_t(i) = kTwoPi * static_cast<double>(i) / static_cast<double>(t);
        ds.test_t(i) = kTwoPi + ds.train_t(i);
    }
    ds.y.resize(kNumSeries, t);
    ds.x_true.resize(kNumSeries, t);
    Rng rng(seed);
    for (int n = 0; n < kNumSeries; ++n) {
        for (int i = 0; i < t; ++i) {
            ds.y(n, i) = std::sin(ds.train_t(i)) + sigma_eps * rng.normal();
        }
    }
    for (int n = 0; n < kNumSeries; ++n) {
        for (int i = 0; i < t; ++i) {
            ds.x_true(n, i) = std::sin(ds.test_t(i)) + sigma_eps * rng.normal();
        }
    }
    ds.u_true = ds.x_true.colwise().sum();
    return ds;
}

std::vector<GpPrediction> shift_forecasts_b(const std::vector<GpPrediction>& base,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GpPrediction> shifted;
    shifted.reserve(base.size());
    for (const GpPrediction& p : base) {
        double zeta = rng.normal();
        Eigen::VectorXd mean = p.dist.mean().array() + zeta;
        shifted.push_back(GpPrediction{p.test_x, Gaussian(std::move(mean), p.dist.cov())});
    }
    return shifted;
}

double nlpd(const std::vector<Gaussian>& dists,
            const std::vector<Eigen::VectorXd>& truths) {
    if (dists.empty() || dists.size() != truths.size()) {
        throw ContractError("nlpd: need one distribution per truth");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < dists.size(); ++t) {
        total -= dists[t].log_pdf(truths[t]);
    }
    return total / static_cast<double>(dists.size());
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw ContractError("aggregate: empty list");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() == 1) return Aggregate{mean, 0.0, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / (n - 1.0));
    return Aggregate{mean, sd / std::sqrt(n), sd};
}

Aggregate RunReport::aggregate_for(std::size_t method) const {
    std::vector<double> vals;
    for (double v : nlpd_by_method.at(method)) {
        if (std::isfinite(v)) vals.push_back(v);
    }
    return aggregate(vals);
}

namespace {

struct SimData {
    Eigen::VectorXd train_t, test_t;
    Eigen::MatrixXd y;       // N × T_train
    Eigen::MatrixXd x_true;  // N × T_test
};

Hierarchy default_hierarchy() {
    return Hierarchy::from_groups({{0, 1, 2, 3}}, 4);
}

SimData make_sim_data(const ExperimentConfig& config, const Hierarchy& h,
                      int sim_index, std::uint64_t sim_seed) {
    if (config.experiment == "real") {
        const Eigen::Index total = config.real_bottom.cols();
        const Eigen::Index start = sim_index;
        const Eigen::Index tr = config.train_window;
        const Eigen::Index te = config.test_window;
        if (config.real_bottom.rows() != h.n_bottom()) {
            throw ContractError("real data: series count does not match hierarchy");
        }
        if (start + tr + te > total) {
            throw ContractError("real data: window for simulation " +
                                std::to_string(sim_index) + " exceeds series length");
        }
        SimData d;
        d.train_t = Eigen::VectorXd::LinSpaced(tr, static_cast<double>(start),
                                               static_cast<double>(start + tr - 1));
        d.test_t = Eigen::VectorXd::LinSpaced(te, static_cast<double>(start + tr),
                                              static_cast<double>(start + tr + te - 1));
        d.y = config.real_bottom.middleCols(start, tr);
        d.x_true = config.real_bottom.middleCols(start + tr, te);
        return d;
    }
    SyntheticDataset ds =
        gen_experiment_a(config.sigma_eps, config.points_per_period, sim_seed);
    return SimData{ds.train_t, ds.test_t, ds.y, ds.x_true};
}

struct SimForecastSet {
    SimData data;
    std::vector<GpPrediction> bottom;
    std::vector<GpPrediction> upper;
};

SimForecastSet fit_sim(const ExperimentConfig& config, const Hierarchy& h,
                       int sim_index) {
    const std::uint64_t sim_seed = Rng::derive(config.master_seed, sim_index);
    SimData data = make_sim_data(config, h, sim_index, sim_seed);

    Kernel kb = parse_kernel(config.kernel_bottom);
    Kernel ku = parse_kernel(config.kernel_upper);
    GpFitOptions fit_opts;
    fit_opts.n_starts = config.fit_starts;

    // The scored quantity x is a future *observation*, so the forecast
    // distribution is over f* + ε: fitted noise variance goes onto the
    // latent predictive diagonal.
    auto predict_observable = [](const GpModel& model, const Eigen::VectorXd& test_t) {
        GpPrediction p = model.predict(test_t);
        Eigen::MatrixXd cov = p.dist.cov();
        cov.diagonal().array() += model.noise_var();
        return GpPrediction{p.test_x, Gaussian(p.dist.mean(), cov)};
    };

    SimForecastSet out{std::move(data), {}, {}};
    const Eigen::Index n = out.data.y.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        GpModel model = GpModel::fit(out.data.train_t, out.data.y.row(i).transpose(),
                                     kb, config.noise_init,
                                     Rng::derive(sim_seed, kStreamBottomFit + i),
                                     fit_opts);
        out.bottom.push_back(predict_observable(model, out.data.test_t));
    }
    Eigen::MatrixXd upper_y = h.matrix() * out.data.y;  // M × T_train
    for (Eigen::Index m = 0; m < h.n_upper(); ++m) {
        GpModel model = GpModel::fit(out.data.train_t, upper_y.row(m).transpose(),
                                     ku, config.noise_init,
                                     Rng::derive(sim_seed, kStreamUpperFit + m),
                                     fit_opts);
        out.upper.push_back(predict_observable(model, out.data.test_t));
    }
    if (config.experiment == "b") {
        out.bottom = shift_forecasts_b(out.bottom, Rng::derive(sim_seed, kStreamShift));
    }
    return out;
}

std::vector<double> score_sim(const SimForecastSet& fc, const Hierarchy& h,
                              const std::vector<Reconciler>& reconcilers) {
    const Eigen::Index n = fc.data.x_true.rows();
    const Eigen::Index horizon = fc.data.x_true.cols();

    std::vector<Eigen::VectorXd> truths;
    std::vector<Gaussian> base_dists;
    std::vector<BaseForecasts> per_step;
    for (Eigen::Index t = 0; t < horizon; ++t) {
        truths.push_back(fc.data.x_true.col(t));
        std::vector<Gaussian> bottom_marg, upper_marg;
        for (Eigen::Index i = 0; i < n; ++i) {
            bottom_marg.push_back(fc.bottom[static_cast<std::size_t>(i)].marginal_at(t));
        }
        for (const GpPrediction& up : fc.upper) {
            upper_marg.push_back(up.marginal_at(t));
        }
        per_step.push_back(BaseForecasts{product_of_marginals(bottom_marg),
                                         product_of_marginals(upper_marg)});
        base_dists.push_back(per_step.back().bottom);
    }

    std::vector<double> scores;
    scores.push_back(nlpd(base_dists, truths));
    for (const Reconciler& rec : reconcilers) {
        std::vector<Gaussian> dists;
        for (const BaseForecasts& f : per_step) dists.push_back(rec(f, h).dist);
        scores.push_back(nlpd(dists, truths));
    }
    return scores;
}

}  // namespace

SimulationForecasts simulate_forecasts(const ExperimentConfig& config, int sim_index) {
    if (config.experiment != "a" && config.experiment != "b") {
        throw ContractError("simulate_forecasts supports synthetic experiments only");
    }
    Hierarchy h = config.hierarchy ? *config.hierarchy : default_hierarchy();
    const std::uint64_t sim_seed = Rng::derive(config.master_seed, sim_index);
    SimForecastSet fc = fit_sim(config, h, sim_index);
    SyntheticDataset ds =
        gen_experiment_a(config.sigma_eps, config.points_per_period, sim_seed);
    return SimulationForecasts{std::move(ds), std::move(fc.bottom),
                               std::move(fc.upper.front())};
}

RunReport run_experiment(const ExperimentConfig& config) {
    if (config.n_sims < 1) throw ContractError("run: n_sims must be >= 1");
    Hierarchy h = config.hierarchy ? *config.hierarchy : default_hierarchy();
    std::vector<Reconciler> reconcilers;
    for (const std::string& name : config.reconcilers) {
        reconcilers.push_back(make_reconciler(name));
    }

    RunReport report;
    report.experiment = config.experiment;
    report.sigma_eps = config.sigma_eps;
    report.n_sims = config.n_sims;
    report.master_seed = config.master_seed;
    report.methods.push_back("base");
    for (const std::string& name : config.reconcilers) report.methods.push_back(name);

    const std::size_t n_methods = report.methods.size();
    std::vector<std::vector<double>> by_sim(
        static_cast<std::size_t>(config.n_sims),
        std::vector<double>(n_methods, std::numeric_limits<double>::quiet_NaN()));
    std::vector<std::string> failures(static_cast<std::size_t>(config.n_sims));

#ifdef _OPENMP
    const int jobs = config.jobs > 0 ? config.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
    for (int i = 0; i < config.n_sims; ++i) {
        try {
            SimForecastSet fc = fit_sim(config, h, i);
            by_sim[static_cast<std::size_t>(i)] = score_sim(fc, h, reconcilers);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(i)] = e.what();
        }
    }

    for (int i = 0; i < config.n_sims; ++i) {
        if (!failures[static_cast<std::size_t>(i)].empty() && !config.skip_on_failure) {
            throw Error("simulation", "simulation " + std::to_string(i) +
                                          " failed: " + failures[static_cast<std::size_t>(i)]);
        }
    }

    report.nlpd_by_method.assign(n_methods, std::vector<double>(
                                                static_cast<std::size_t>(config.n_sims)));
    for (int i = 0; i < config.n_sims; ++i) {
        for (std::size_t m = 0; m < n_methods; ++m) {
            report.nlpd_by_method[m][static_cast<std::size_t>(i)] =
                by_sim[static_cast<std::size_t>(i)][m];
        }
    }
    report.failures = std::move(failures);
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
void put_full(std::ostream& out, double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    out << s.str();
}
}  // namespace

void write_per_sim_csv(const std::vector<RunReport>& reports, std::ostream& out) {
    out << "method,sigma_eps,sim_index,nlpd\n";
    for (const RunReport& r : reports) {
        for (std::size_t m = 0; m < r.methods.size(); ++m) {
            for (int i = 0; i < r.n_sims; ++i) {
                out << r.methods[m] << ",";
                put_full(out, r.sigma_eps);
                out << "," << i << ",";
                put_full(out, r.nlpd_by_method[m][static_cast<std::size_t>(i)]);
                out << "\n";
            }
        }
    }
}

std::vector<RunReport> read_per_sim_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "method,sigma_eps,sim_index,nlpd") {
        throw ParseError("per-sim CSV: bad or missing header");
    }
    // (sigma_eps) → report; method order preserved as first encountered.
    std::vector<RunReport> reports;
    std::map<double, std::size_t> index;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string method, sigma_s, sim_s, nlpd_s;
        if (!std::getline(row, method, ',') || !std::getline(row, sigma_s, ',') ||
            !std::getline(row, sim_s, ',') || !std::getline(row, nlpd_s)) {
            throw ParseError("per-sim CSV line " + std::to_string(lineno) +
                             ": expected 4 columns");
        }
        double sigma, value;
        int sim;
        try {
            sigma = std::stod(sigma_s);
            sim = std::stoi(sim_s);
            value = std::stod(nlpd_s);
        } catch (const std::exception&) {
            throw ParseError("per-sim CSV line " + std::to_string(lineno) +
                             ": non-numeric field");
        }
        if (!index.contains(sigma)) {
            index[sigma] = reports.size();
            reports.push_back(RunReport{});
            reports.back().sigma_eps = sigma;
        }
        RunReport& r = reports[index[sigma]];
        std::size_t m = 0;
        for (; m < r.methods.size(); ++m) {
            if (r.methods[m] == method) break;
        }
        if (m == r.methods.size()) {
            r.methods.push_back(method);
            r.nlpd_by_method.emplace_back();
        }
        auto& vals = r.nlpd_by_method[m];
        if (vals.size() <= static_cast<std::size_t>(sim)) {
            vals.resize(static_cast<std::size_t>(sim) + 1,
                        std::numeric_limits<double>::quiet_NaN());
        }
        vals[static_cast<std::size_t>(sim)] = value;
        r.n_sims = std::max(r.n_sims, sim + 1);
    }
    return reports;
}

void write_summary_csv(const std::vector<RunReport>& reports, std::ostream& out) {
    out << "sigma_eps,method,mean,sem,sd\n";
    for (const RunReport& r : reports) {
        for (std::size_t m = 0; m < r.methods.size(); ++m) {
            Aggregate a = r.aggregate_for(m);
            put_full(out, r.sigma_eps);
            out << "," << r.methods[m] << ",";
            put_full(out, a.mean);
            out << ",";
            put_full(out, a.sem);
            out << ",";
            put_full(out, a.sd);
            out << "\n";
        }
    }
}

void write_summary_text(const std::vector<RunReport>& reports, std::ostream& out) {
    if (reports.empty()) return;
    const int width = 14;
    out << std::left << std::setw(18) << "" << std::setw(8) << "";
    for (const std::string& m : reports.front().methods) {
        out << std::right << std::setw(width) << m;
    }
    out << "\n";
    for (const RunReport& r : reports) {
        std::ostringstream label;
        label << "sigma_eps=" << std::setprecision(6) << r.sigma_eps;
        const char* rows[] = {"mean", "SEM", "SD"};
        for (int row = 0; row < 3; ++row) {
            out << std::left << std::setw(18) << (row == 0 ? label.str() : "")
                << std::setw(8) << rows[row];
            for (std::size_t m = 0; m < r.methods.size(); ++m) {
                Aggregate a = r.aggregate_for(m);
                double v = row == 0 ? a.mean : row == 1 ? a.sem : a.sd;
                std::ostringstream cell;
                cell << std::setprecision(6) << v;
                out << std::right << std::setw(width) << cell.str();
            }
            out << "\n";
        }
    }
}

}  // namespace htsr
