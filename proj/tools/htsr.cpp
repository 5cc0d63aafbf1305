#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "htsr/config.hpp"
#include "htsr/dataset.hpp"
#include "htsr/harness.hpp"
#include "htsr/reconcile.hpp"

namespace fs = std::filesystem;
using namespace htsr;

namespace {

constexpr double kZ95 = 1.959964;

void put_full(std::ostream& out, double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    out << s.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
    if (!out) throw Error("io", "cannot write " + path.string());
    return out;
}

// Precedence: --seed flag > HTSR_SEED env > config master_seed.
void apply_seed_override(RunConfig& config, bool flag_set, std::uint64_t flag_seed) {
    if (flag_set) {
        config.master_seed = flag_seed;
        return;
    }
    if (const char* env = std::getenv("HTSR_SEED")) {
        try {
            config.master_seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ParseError("HTSR_SEED is not an unsigned integer: " + std::string(env));
        }
    }
}

ExperimentConfig to_experiment_config(const RunConfig& config, double sigma) {
    ExperimentConfig ec;
    ec.experiment = config.experiment;
    ec.sigma_eps = sigma;
    ec.n_sims = config.n_sims;
    ec.points_per_period = config.points_per_period;
    ec.kernel_bottom = config.kernel_bottom;
    ec.kernel_upper = config.kernel_upper;
    ec.noise_init = config.noise_init;
    ec.reconcilers = config.reconcilers;
    ec.master_seed = config.master_seed;
    ec.jobs = config.jobs;
    ec.skip_on_failure = config.skip_on_failure;
    ec.fit_starts = config.fit_starts;
    ec.train_window = config.train_window;
    ec.test_window = config.test_window;
    if (config.experiment == "real") {
        LoadedDataset loaded = load_dataset(config.dataset_path, config.hierarchy_path);
        ec.real_bottom = loaded.bottom;
        ec.hierarchy = loaded.hierarchy;
    }
    return ec;
}

int cmd_run(const std::string& config_path, bool seed_set, std::uint64_t seed,
            int jobs) {
    RunConfig config = load_run_config(config_path);
    apply_seed_override(config, seed_set, seed);
    if (jobs > 0) config.jobs = jobs;
    validate_run_config(config);

    std::vector<RunReport> reports;
    std::vector<double> sweep = config.sigma_eps;
    if (config.experiment == "real") sweep = {0.0};  // noise level is not a real-data knob
    for (double sigma : sweep) {
        reports.push_back(run_experiment(to_experiment_config(config, sigma)));
    }

    fs::create_directories(config.output_dir);
    {
        auto out = open_out(fs::path(config.output_dir) / "per_sim.csv");
        write_per_sim_csv(reports, out);
    }
    {
        auto out = open_out(fs::path(config.output_dir) / "summary.csv");
        write_summary_csv(reports, out);
    }
    {
        auto out = open_out(fs::path(config.output_dir) / "summary.txt");
        write_summary_text(reports, out);
    }
    write_summary_text(reports, std::cout);
    return 0;
}

void write_forecast_csv(const fs::path& path, const Eigen::VectorXd& train_t,
                        const Eigen::VectorXd& train_truth,
                        const Eigen::VectorXd& test_t,
                        const Eigen::VectorXd& test_truth,
                        const GpPrediction& pred) {
    auto out = open_out(path);
    out << "t,split,truth,mean,lo95,hi95\n";
    for (Eigen::Index i = 0; i < train_t.size(); ++i) {
        put_full(out, train_t(i));
        out << ",train,";
        put_full(out, train_truth(i));
        out << ",,,\n";
    }
    for (Eigen::Index i = 0; i < test_t.size(); ++i) {
        double mean = pred.dist.mean()(i);
        double sd = std::sqrt(pred.dist.cov()(i, i));
        put_full(out, test_t(i));
        out << ",test,";
        put_full(out, test_truth(i));
        out << ",";
        put_full(out, mean);
        out << ",";
        put_full(out, mean - kZ95 * sd);
        out << ",";
        put_full(out, mean + kZ95 * sd);
        out << "\n";
    }
}

int cmd_gen(const std::string& experiment, double sigma, int points,
            std::uint64_t seed, const std::string& out_dir) {
    ExperimentConfig ec;
    ec.experiment = experiment;
    ec.sigma_eps = sigma;
    ec.points_per_period = points;
    ec.master_seed = seed;
    SimulationForecasts sim = simulate_forecasts(ec, 0);

    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "dataset.csv");
        out << "series,t,value\n";
        for (Eigen::Index n = 0; n < sim.data.y.rows(); ++n) {
            for (Eigen::Index i = 0; i < sim.data.train_t.size(); ++i) {
                out << "b" << n << ",";
                put_full(out, sim.data.train_t(i));
                out << ",";
                put_full(out, sim.data.y(n, i));
                out << "\n";
            }
        }
    }
    for (Eigen::Index n = 0; n < sim.data.y.rows(); ++n) {
        write_forecast_csv(fs::path(out_dir) / ("forecasts_b" + std::to_string(n) + ".csv"),
                           sim.data.train_t, sim.data.y.row(n).transpose(),
                           sim.data.test_t, sim.data.x_true.row(n).transpose(),
                           sim.bottom[static_cast<std::size_t>(n)]);
    }
    Eigen::VectorXd upper_train = sim.data.y.colwise().sum();
    write_forecast_csv(fs::path(out_dir) / "forecasts_u0.csv", sim.data.train_t,
                       upper_train, sim.data.test_t, sim.data.u_true, sim.upper);
    std::cout << "wrote dataset.csv and forecast dumps to " << out_dir << "\n";
    return 0;
}

int cmd_oracle_check(int n_seeds) {
    Hierarchy h = Hierarchy::from_groups({{0, 1}}, 2);
    double worst = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        BaseForecasts f = random_linear_instance(static_cast<std::uint64_t>(s), 2);
        ReconciledPosterior closed = reconcile_lg(f, h);
        GridMoments grid = grid_posterior_moments(f, h);
        double dev = 0.0;
        for (Eigen::Index i = 0; i < 2; ++i) {
            double scale = std::max(1.0, std::abs(grid.mean(i)));
            dev = std::max(dev, std::abs(closed.dist.mean()(i) - grid.mean(i)) / scale);
            for (Eigen::Index j = 0; j < 2; ++j) {
                double cscale = std::max(1.0, std::abs(grid.cov(i, j)));
                dev = std::max(dev,
                               std::abs(closed.dist.cov()(i, j) - grid.cov(i, j)) / cscale);
            }
        }
        worst = std::max(worst, dev);
        std::cout << "seed " << s << ": max relative moment deviation "
                  << std::setprecision(3) << std::scientific << dev << "\n";
    }
    std::cout.unsetf(std::ios::scientific);
    if (worst >= 1e-2) {
        std::cerr << "error:oracle-failure: closed form and quadrature disagree\n";
        return 1;
    }
    std::cout << "closed form and quadrature agree within 1e-2 on all seeds\n";
    return 0;
}

int cmd_report(const std::string& per_sim_path, const std::string& out_dir) {
    std::ifstream in(per_sim_path);
    if (!in) throw Error("io", "cannot open " + per_sim_path);
    std::vector<RunReport> reports = read_per_sim_csv(in);
    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "summary.csv");
        write_summary_csv(reports, out);
    }
    {
        auto out = open_out(fs::path(out_dir) / "summary.txt");
        write_summary_text(reports, out);
    }
    write_summary_text(reports, std::cout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical time-series forecast reconciliation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int jobs = 0;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "config file path")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override master seed");
    run->add_option("--jobs", jobs, "max concurrent simulations");

    std::string gen_experiment = "a";
    double gen_sigma = 0.1;
    int gen_points = 50;
    std::uint64_t gen_seed = 0;
    std::string gen_out = ".";
    auto* gen = app.add_subcommand("gen", "emit a synthetic dataset and forecast dumps");
    gen->add_option("--experiment", gen_experiment, "a or b")
        ->check(CLI::IsMember({"a", "b"}));
    gen->add_option("--sigma", gen_sigma, "noise standard deviation");
    gen->add_option("--points", gen_points, "points per period");
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("--output-dir", gen_out, "output directory");

    int oracle_seeds = 5;
    auto* oracle = app.add_subcommand(
        "oracle-check", "compare closed-form reconciliation against quadrature");
    oracle->add_option("--seeds", oracle_seeds, "number of random instances");

    std::string per_sim_path;
    std::string report_out = ".";
    auto* report = app.add_subcommand("report", "re-render tables from per_sim.csv");
    report->add_option("--per-sim", per_sim_path, "per-simulation CSV")->required();
    report->add_option("--output-dir", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path, seed_opt->count() > 0, seed, jobs);
        }
        if (gen->parsed()) {
            return cmd_gen(gen_experiment, gen_sigma, gen_points, gen_seed, gen_out);
        }
        if (oracle->parsed()) return cmd_oracle_check(oracle_seeds);
        if (report->parsed()) return cmd_report(per_sim_path, report_out);
    } catch (const Error& e) {
        std::cerr << "error:" << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
