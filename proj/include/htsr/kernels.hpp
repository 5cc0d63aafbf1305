#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "htsr/errors.hpp"

namespace htsr {

/// A positive scalar hyperparameter with box bounds. Fixed hyperparameters
/// are excluded from the optimizer's packed vector.
struct Hyperparameter {
    double value = 1.0;
    double lower = 1e-4;
    double upper = 1e4;
    bool fixed = false;

    static Hyperparameter fixed_at(double v) { return {v, v, v, true}; }
    static Hyperparameter bounded(double lo, double hi, double init) {
        return {init, lo, hi, false};
    }
};

namespace detail {
struct KernelNode;
}

/// Composable covariance function: RBF / periodic / linear leaves combined
/// by sum and product nodes. Value type; copies are deep.
///
/// Leaf forms (d = x - x2):
///   rbf:      σ²·exp(−d²/(2ℓ²))
///   periodic: σ²·exp(−2·sin²(π|d|/p)/ℓ²)
///   linear:   σ²·x·x2
class Kernel {
public:
    static Kernel rbf(Hyperparameter sigma2 = {}, Hyperparameter length = {});
    static Kernel periodic(Hyperparameter sigma2 = {}, Hyperparameter length = {},
                           Hyperparameter period = {});
    static Kernel linear(Hyperparameter sigma2 = {});
    static Kernel sum(Kernel left, Kernel right);
    static Kernel product(Kernel left, Kernel right);

    Kernel(const Kernel& other);
    Kernel& operator=(const Kernel& other);
    Kernel(Kernel&&) noexcept;
    Kernel& operator=(Kernel&&) noexcept;
    ~Kernel();

    double eval(double x, double x2) const;

    /// Evaluates and writes d eval / d log θ_j for every free hyperparameter
    /// (pack order) into `grad`, which must have n_free() entries.
    double eval_with_grad(double x, double x2, double* grad) const;

    Eigen::MatrixXd gram(const Eigen::VectorXd& xs) const;

    /// Gram matrix plus its derivative w.r.t. each free log-hyperparameter.
    void gram_with_grads(const Eigen::VectorXd& xs, Eigen::MatrixXd& gram_out,
                         std::vector<Eigen::MatrixXd>& grads_out) const;

    // Packed log-hyperparameter vector (free parameters only, fixed order).
    int n_free() const;
    std::vector<std::string> free_names() const;
    Eigen::VectorXd pack_log() const;
    void unpack_log(const Eigen::VectorXd& log_values);
    Eigen::VectorXd lower_log() const;
    Eigen::VectorXd upper_log() const;

    std::string to_string() const;

private:
    explicit Kernel(std::unique_ptr<detail::KernelNode> node);
    std::unique_ptr<detail::KernelNode> node_;
};

/// Parses the nested kernel expression grammar used in config files, e.g.
///   sum(periodic(p=fixed(6.2831853)), rbf(ell=bounds(0.1,10,1)))
/// Hyperparameter specs: `name=value`, `name=fixed(v)`, `name=bounds(lo,hi[,init])`.
Kernel parse_kernel(std::string_view expr);

}  // namespace htsr
