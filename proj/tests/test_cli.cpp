#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "htsr/config.hpp"
#include "htsr/dataset.hpp"

using namespace htsr;

namespace {
const std::string kDataDir = HTSR_TEST_DATA_DIR;
}

TEST_CASE("run config parsing") {
    SUBCASE("defaults") {
        RunConfig c = parse_run_config("");
        CHECK(c.experiment == "a");
        CHECK(c.n_sims == 50);
        CHECK(c.points_per_period == 50);
        CHECK(c.sigma_eps == std::vector<double>{0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0});
        CHECK(c.reconcilers == std::vector<std::string>{"et"});
        CHECK(c.master_seed == 0);
    }

    SUBCASE("overrides, comments, whitespace") {
        RunConfig c = parse_run_config(
            "# experiment B sweep\n"
            "experiment = b\n"
            "sigma_eps = 0, 0.1 ,0.5\n"
            "n_sims=10\n"
            "reconcilers = et, identity\n"
            "master_seed = 42   # the usual\n"
            "jobs = 2\n"
            "skip_on_failure = true\n");
        CHECK(c.experiment == "b");
        CHECK(c.sigma_eps == std::vector<double>{0.0, 0.1, 0.5});
        CHECK(c.n_sims == 10);
        CHECK(c.reconcilers == std::vector<std::string>{"et", "identity"});
        CHECK(c.master_seed == 42);
        CHECK(c.jobs == 2);
        CHECK(c.skip_on_failure);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(parse_run_config("frobnicate = 1\n"), ParseError);
        CHECK_THROWS_AS(parse_run_config("just a line\n"), ParseError);
        CHECK_THROWS_AS(parse_run_config("n_sims = many\n"), ParseError);
        CHECK_THROWS_AS(parse_run_config("skip_on_failure = maybe\n"), ParseError);
    }

    SUBCASE("validation is fail-fast") {
        RunConfig c;
        c.experiment = "q";
        CHECK_THROWS_AS(validate_run_config(c), ParseError);

        RunConfig bad_kernel;
        bad_kernel.kernel_bottom = "wavelet()";
        CHECK_THROWS_AS(validate_run_config(bad_kernel), ParseError);

        RunConfig bad_rec;
        bad_rec.reconcilers = {"mint"};
        CHECK_THROWS_AS(validate_run_config(bad_rec), ParseError);

        RunConfig real_missing;
        real_missing.experiment = "real";
        CHECK_THROWS_AS(validate_run_config(real_missing), ParseError);
    }
}

TEST_CASE("series CSV parsing") {
    SUBCASE("happy path") {
        std::istringstream in(
            "series,t,value\n"
            "a,0,1.5\n"
            "a,1,2.5\n"
            "b,0,3.0\n");
        SeriesTable table = parse_series_csv(in);
        CHECK(table.records.size() == 3);
        CHECK(table.series_values("a") == std::vector<double>{1.5, 2.5});
    }
    SUBCASE("errors carry line numbers") {
        std::istringstream bad_header("when,what\n");
        CHECK_THROWS_WITH_AS(parse_series_csv(bad_header),
                             doctest::Contains("header"), ParseError);

        std::istringstream dup("series,t,value\na,0,1\na,0,2\n");
        CHECK_THROWS_WITH_AS(parse_series_csv(dup), doctest::Contains("line 3"),
                             ParseError);

        std::istringstream nonnum("series,t,value\na,0,soon\n");
        CHECK_THROWS_WITH_AS(parse_series_csv(nonnum), doctest::Contains("line 2"),
                             ParseError);
    }
}

TEST_CASE("dataset loading") {
    SUBCASE("4-series synthetic CSV with a single parent") {
        std::ofstream csv("load4.csv", std::ios::binary);
        csv << "series,t,value\n";
        for (int n = 0; n < 4; ++n) {
            for (int t = 0; t < 6; ++t) {
                csv << "s" << n << "," << t << "," << (n + 1) * 10 + t << "\n";
            }
        }
        csv.close();
        std::ofstream hier("load4.hierarchy", std::ios::binary);
        hier << "total: s0,s1,s2,s3\n";
        hier.close();

        LoadedDataset loaded = load_dataset("load4.csv", "load4.hierarchy");
        CHECK(loaded.hierarchy.n_bottom() == 4);
        CHECK(loaded.hierarchy.n_upper() == 1);
        CHECK(loaded.bottom.rows() == 4);
        CHECK(loaded.bottom.cols() == 6);
        CHECK(loaded.bottom(2, 3) == doctest::Approx(33.0));
    }

    SUBCASE("missing hierarchy member is named") {
        std::ofstream csv("load_missing.csv", std::ios::binary);
        csv << "series,t,value\nalpha,0,1\n";
        csv.close();
        std::ofstream hier("load_missing.hierarchy", std::ios::binary);
        hier << "total: alpha,beta\n";
        hier.close();
        CHECK_THROWS_WITH_AS(load_dataset("load_missing.csv", "load_missing.hierarchy"),
                             doctest::Contains("beta"), ParseError);
    }

    SUBCASE("7-state fixture: computed total equals the column sums") {
        LoadedDataset loaded = load_dataset(kDataDir + "/tourism7.csv",
                                            kDataDir + "/tourism7.hierarchy");
        CHECK(loaded.hierarchy.n_bottom() == 7);
        CHECK(loaded.hierarchy.n_upper() == 1);
        CHECK(loaded.bottom.cols() == 120);
        Eigen::VectorXd computed_total =
            loaded.hierarchy.matrix() * loaded.bottom.col(17);
        CHECK(computed_total(0) ==
              doctest::Approx(loaded.bottom.col(17).sum()).epsilon(1e-9));
    }
}
