#include "htsr/config.hpp"

#include <fstream>
#include <sstream>

#include "htsr/dataset.hpp"
#include "htsr/kernels.hpp"
#include "htsr/reconcile.hpp"

namespace htsr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config: key '" + key + "' needs a number, got '" + s + "'");
    }
}

int to_int(const std::string& key, const std::string& s) {
    try {
        std::size_t used;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config: key '" + key + "' needs an integer, got '" + s + "'");
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": missing '='");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "experiment") {
            config.experiment = value;
        } else if (key == "sigma_eps") {
            config.sigma_eps.clear();
            for (const std::string& v : split_list(value)) {
                config.sigma_eps.push_back(to_double(key, v));
            }
        } else if (key == "n_sims") {
            config.n_sims = to_int(key, value);
        } else if (key == "points_per_period") {
            config.points_per_period = to_int(key, value);
        } else if (key == "kernel_bottom") {
            config.kernel_bottom = value;
        } else if (key == "kernel_upper") {
            config.kernel_upper = value;
        } else if (key == "noise_init") {
            config.noise_init = to_double(key, value);
        } else if (key == "reconcilers") {
            config.reconcilers = split_list(value);
        } else if (key == "master_seed") {
            try {
                config.master_seed = std::stoull(value);
            } catch (const std::exception&) {
                throw ParseError("config: bad master_seed '" + value + "'");
            }
        } else if (key == "output_dir") {
            config.output_dir = value;
        } else if (key == "dataset") {
            config.dataset_path = value;
        } else if (key == "hierarchy") {
            config.hierarchy_path = value;
        } else if (key == "train_window") {
            config.train_window = to_int(key, value);
        } else if (key == "test_window") {
            config.test_window = to_int(key, value);
        } else if (key == "jobs") {
            config.jobs = to_int(key, value);
        } else if (key == "fit_starts") {
            config.fit_starts = to_int(key, value);
        } else if (key == "skip_on_failure") {
            if (value == "true") {
                config.skip_on_failure = true;
            } else if (value == "false") {
                config.skip_on_failure = false;
            } else {
                throw ParseError("config: skip_on_failure must be true or false");
            }
        } else {
            throw ParseError("config line " + std::to_string(lineno) +
                             ": unknown key '" + key + "'");
        }
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

void validate_run_config(const RunConfig& config) {
    if (config.experiment != "a" && config.experiment != "b" &&
        config.experiment != "real") {
        throw ParseError("config: experiment must be a, b, or real");
    }
    if (config.n_sims < 1) throw ParseError("config: n_sims must be >= 1");
    if (config.points_per_period < 8) {
        throw ParseError("config: points_per_period must be >= 8");
    }
    if (config.sigma_eps.empty()) throw ParseError("config: empty sigma_eps sweep");
    parse_kernel(config.kernel_bottom);
    parse_kernel(config.kernel_upper);
    if (config.reconcilers.empty()) {
        throw ParseError("config: at least one reconciler required");
    }
    for (const std::string& name : config.reconcilers) make_reconciler(name);
    if (config.experiment == "real") {
        if (config.dataset_path.empty() || config.hierarchy_path.empty()) {
            throw ParseError("config: real mode needs dataset and hierarchy paths");
        }
        LoadedDataset loaded = load_dataset(config.dataset_path, config.hierarchy_path);
        Eigen::Index needed =
            config.train_window + config.test_window + config.n_sims - 1;
        if (loaded.bottom.cols() < needed) {
            throw ParseError("config: real data has " +
                             std::to_string(loaded.bottom.cols()) +
                             " time points, needs " + std::to_string(needed));
        }
    }
}

}  // namespace htsr
