#include "htsr/hierarchy.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace htsr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> default_labels(const char* prefix, Eigen::Index n) {
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < n; ++i) {
        labels.push_back(std::string(prefix) + std::to_string(i));
    }
    return labels;
}

}  // namespace

Hierarchy::Hierarchy(Eigen::MatrixXd a, std::vector<std::string> bottom_labels,
                     std::vector<std::string> upper_labels)
    : a_(std::move(a)),
      bottom_labels_(std::move(bottom_labels)),
      upper_labels_(std::move(upper_labels)) {
    if (a_.rows() > a_.cols()) {
        throw ContractError("hierarchy: M must not exceed N");
    }
    if (bottom_labels_.empty()) bottom_labels_ = default_labels("b", a_.cols());
    if (upper_labels_.empty()) upper_labels_ = default_labels("u", a_.rows());
    if (static_cast<Eigen::Index>(bottom_labels_.size()) != a_.cols() ||
        static_cast<Eigen::Index>(upper_labels_.size()) != a_.rows()) {
        throw ContractError("hierarchy: label counts do not match matrix shape");
    }
    for (Eigen::Index r = 0; r < a_.rows(); ++r) {
        bool any = false;
        for (Eigen::Index c = 0; c < a_.cols(); ++c) {
            double v = a_(r, c);
            if (v != 0.0 && v != 1.0) {
                throw ContractError("hierarchy: matrix entries must be 0 or 1");
            }
            any = any || v == 1.0;
        }
        if (!any) {
            throw ContractError("hierarchy: summary row " + std::to_string(r) +
                                " aggregates nothing");
        }
    }
}

Hierarchy Hierarchy::from_groups(const std::vector<std::vector<Eigen::Index>>& groups,
                                 Eigen::Index n_bottom) {
    Eigen::MatrixXd a =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), n_bottom);
    for (std::size_t r = 0; r < groups.size(); ++r) {
        if (groups[r].empty()) {
            throw ContractError("hierarchy: group " + std::to_string(r) + " is empty");
        }
        for (Eigen::Index c : groups[r]) {
            if (c < 0 || c >= n_bottom) {
                throw ContractError("hierarchy: index out of range in group " +
                                    std::to_string(r));
            }
            a(static_cast<Eigen::Index>(r), c) = 1.0;
        }
    }
    return Hierarchy(std::move(a), {}, {});
}

Hierarchy Hierarchy::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> upper_labels;
    std::vector<std::vector<std::string>> members;
    std::map<std::string, Eigen::Index> bottom_index;
    std::vector<std::string> bottom_labels;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError("hierarchy line " + std::to_string(lineno) +
                             ": missing ':'");
        }
        std::string upper = trim(line.substr(0, colon));
        if (upper.empty()) {
            throw ParseError("hierarchy line " + std::to_string(lineno) +
                             ": empty upper label");
        }
        for (const std::string& u : upper_labels) {
            if (u == upper) {
                throw ParseError("hierarchy line " + std::to_string(lineno) +
                                 ": duplicate upper label '" + upper + "'");
            }
        }
        std::vector<std::string> group;
        std::istringstream rest(line.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            group.push_back(item);
            if (!bottom_index.contains(item)) {
                bottom_index[item] = static_cast<Eigen::Index>(bottom_labels.size());
                bottom_labels.push_back(item);
            }
        }
        if (group.empty()) {
            throw ParseError("hierarchy line " + std::to_string(lineno) +
                             ": no bottom labels for '" + upper + "'");
        }
        upper_labels.push_back(upper);
        members.push_back(std::move(group));
    }
    if (upper_labels.empty()) {
        throw ParseError("hierarchy file contains no summary definitions");
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(upper_labels.size()),
        static_cast<Eigen::Index>(bottom_labels.size()));
    for (std::size_t r = 0; r < members.size(); ++r) {
        for (const std::string& label : members[r]) {
            a(static_cast<Eigen::Index>(r), bottom_index.at(label)) = 1.0;
        }
    }
    return Hierarchy(std::move(a), std::move(bottom_labels), std::move(upper_labels));
}

Hierarchy Hierarchy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open hierarchy file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

Eigen::VectorXd Hierarchy::apply(const Eigen::VectorXd& x) const {
    if (x.size() != n_bottom()) {
        throw ContractError("hierarchy apply: vector length does not match N");
    }
    return a_ * x;
}

std::vector<Eigen::Index> Hierarchy::group(Eigen::Index r) const {
    if (r < 0 || r >= n_upper()) throw ContractError("hierarchy group: row out of range");
    std::vector<Eigen::Index> out;
    for (Eigen::Index c = 0; c < n_bottom(); ++c) {
        if (a_(r, c) == 1.0) out.push_back(c);
    }
    return out;
}

}  // namespace htsr
