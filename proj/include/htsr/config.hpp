#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htsr/errors.hpp"

namespace htsr {

/// CLI run configuration. Flat key=value text format, `#` comments.
/// Recognized keys:
///   experiment       a | b | real                       (default a)
///   sigma_eps        comma-separated noise sweep        (default 0,0.1,0.2,0.5,1,2,5)
///   n_sims           simulations per noise level        (default 50)
///   points_per_period                                   (default 50)
///   kernel_bottom    kernel expression                  (default periodic, p fixed 2π)
///   kernel_upper     kernel expression                  (default periodic, p fixed 2π)
///   noise_init       initial noise variance for fits    (default 0.1)
///   reconcilers      comma-separated names              (default et)
///   master_seed      unsigned integer                   (default 0)
///   output_dir       directory for result files         (default .)
///   dataset          CSV path (real mode)
///   hierarchy        hierarchy file path (real mode)
///   train_window     months (real mode, default 60)
///   test_window      months (real mode, default 24)
///   jobs             max concurrent simulations         (default 0 = all cores)
///   fit_starts       optimizer restarts per GP fit      (default 8)
///   skip_on_failure  true | false                       (default false)
struct RunConfig {
    std::string experiment = "a";
    std::vector<double> sigma_eps = {0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
    int n_sims = 50;
    int points_per_period = 50;
    std::string kernel_bottom = "periodic(p=fixed(6.283185307179586))";
    std::string kernel_upper = "periodic(p=fixed(6.283185307179586))";
    double noise_init = 0.1;
    std::vector<std::string> reconcilers = {"et"};
    std::uint64_t master_seed = 0;
    std::string output_dir = ".";
    std::string dataset_path;
    std::string hierarchy_path;
    int train_window = 60;
    int test_window = 24;
    int jobs = 0;
    int fit_starts = 8;
    bool skip_on_failure = false;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Fail-fast validation: kernel expressions parse, referenced files exist
/// and parse, window arithmetic fits. Throws before any computation.
void validate_run_config(const RunConfig& config);

}  // namespace htsr
