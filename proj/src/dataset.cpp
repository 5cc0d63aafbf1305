#include "htsr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace htsr {

std::vector<double> SeriesTable::series_values(const std::string& label) const {
    std::vector<std::pair<double, double>> rows;
    for (const SeriesRecord& r : records) {
        if (r.series == label) rows.emplace_back(r.t, r.value);
    }
    std::sort(rows.begin(), rows.end());
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto& [t, v] : rows) out.push_back(v);
    return out;
}

SeriesTable parse_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "series,t,value") {
        throw ParseError("dataset CSV: header must be 'series,t,value'");
    }
    SeriesTable table;
    std::set<std::pair<std::string, double>> seen;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string series, t_s, v_s;
        if (!std::getline(row, series, ',') || !std::getline(row, t_s, ',') ||
            !std::getline(row, v_s)) {
            throw ParseError("dataset CSV line " + std::to_string(lineno) +
                             ": expected 3 columns");
        }
        double t, v;
        try {
            std::size_t used;
            t = std::stod(t_s, &used);
            if (used != t_s.size()) throw std::invalid_argument(t_s);
            v = std::stod(v_s, &used);
            if (used != v_s.size()) throw std::invalid_argument(v_s);
        } catch (const std::exception&) {
            throw ParseError("dataset CSV line " + std::to_string(lineno) +
                             ": non-numeric value");
        }
        if (!seen.insert({series, t}).second) {
            throw ParseError("dataset CSV line " + std::to_string(lineno) +
                             ": duplicate (series, t) = (" + series + ", " + t_s + ")");
        }
        table.records.push_back(SeriesRecord{series, t, v});
    }
    return table;
}

LoadedDataset load_dataset(const std::string& csv_path,
                           const std::string& hierarchy_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw ParseError("cannot open dataset CSV: " + csv_path);
    SeriesTable table = parse_series_csv(csv);
    Hierarchy hierarchy = Hierarchy::load(hierarchy_path);

    // Collect per-series time-indexed values.
    std::map<std::string, std::map<double, double>> by_series;
    for (const SeriesRecord& r : table.records) {
        by_series[r.series][r.t] = r.value;
    }

    const auto& labels = hierarchy.bottom_labels();
    std::size_t t_len = 0;
    for (const std::string& label : labels) {
        auto it = by_series.find(label);
        if (it == by_series.end()) {
            throw ParseError("dataset CSV is missing hierarchy series '" + label + "'");
        }
        if (t_len == 0) {
            t_len = it->second.size();
        } else if (it->second.size() != t_len) {
            throw ParseError("series '" + label + "' has " +
                             std::to_string(it->second.size()) +
                             " points, expected " + std::to_string(t_len));
        }
    }
    if (t_len == 0) throw ParseError("dataset CSV contains no rows for the hierarchy");

    Eigen::MatrixXd bottom(static_cast<Eigen::Index>(labels.size()),
                           static_cast<Eigen::Index>(t_len));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Eigen::Index j = 0;
        for (auto& [t, v] : by_series.at(labels[i])) {
            bottom(static_cast<Eigen::Index>(i), j++) = v;
        }
    }
    return LoadedDataset{std::move(table), std::move(hierarchy), std::move(bottom)};
}

}  // namespace htsr
