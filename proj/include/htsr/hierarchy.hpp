#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "htsr/errors.hpp"

namespace htsr {

/// Grouping of N bottom series into M summary series through a 0/1
/// aggregation matrix A (M×N). Groups may overlap; M ≤ N. Immutable.
class Hierarchy {
public:
    Hierarchy(Eigen::MatrixXd a, std::vector<std::string> bottom_labels,
              std::vector<std::string> upper_labels);

    /// Row r of A has ones exactly at the members of groups[r].
    static Hierarchy from_groups(const std::vector<std::vector<Eigen::Index>>& groups,
                                 Eigen::Index n_bottom);

    /// Parses the hierarchy text format: one `upper: bottom,bottom,...` line
    /// per summary series, UTF-8, `#` comments, labels whitespace-trimmed.
    static Hierarchy parse(const std::string& text);
    static Hierarchy load(const std::string& path);

    Eigen::Index n_bottom() const { return a_.cols(); }
    Eigen::Index n_upper() const { return a_.rows(); }
    const Eigen::MatrixXd& matrix() const { return a_; }
    const std::vector<std::string>& bottom_labels() const { return bottom_labels_; }
    const std::vector<std::string>& upper_labels() const { return upper_labels_; }

    /// u = A x.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    /// Members of summary row r.
    std::vector<Eigen::Index> group(Eigen::Index r) const;

private:
    Eigen::MatrixXd a_;
    std::vector<std::string> bottom_labels_;
    std::vector<std::string> upper_labels_;
};

}  // namespace htsr
