#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "htsr/errors.hpp"
#include "htsr/hierarchy.hpp"

namespace htsr {

/// Long-format time series records, one value per (series, time index).
struct SeriesRecord {
    std::string series;
    double t = 0.0;
    double value = 0.0;
};

struct SeriesTable {
    std::vector<SeriesRecord> records;

    /// Values of one series ordered by time index.
    std::vector<double> series_values(const std::string& label) const;
};

/// Parses a `series,t,value` CSV. Duplicate (series, t) pairs and
/// non-numeric fields are reported with their line numbers.
SeriesTable parse_series_csv(std::istream& in);

struct LoadedDataset {
    SeriesTable table;
    Hierarchy hierarchy;
    /// Bottom series matrix, N × T, rows aligned with hierarchy bottom
    /// labels, columns ordered by time index. Upper series are always
    /// recomputed as sums of their children, never read from the file.
    Eigen::MatrixXd bottom;
};

LoadedDataset load_dataset(const std::string& csv_path,
                           const std::string& hierarchy_path);

}  // namespace htsr
