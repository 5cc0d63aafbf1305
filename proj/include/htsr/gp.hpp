#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "htsr/gaussian.hpp"
#include "htsr/kernels.hpp"

namespace htsr {

/// Posterior over latent function values at the test inputs. Observation
/// noise is not added to the covariance.
struct GpPrediction {
    Eigen::VectorXd test_x;
    Gaussian dist;

    /// Univariate marginal (mean[i], cov[i][i]).
    Gaussian marginal_at(Eigen::Index t_index) const;
};

struct GpFitOptions {
    int n_starts = 8;
    int max_iters = 200;
    double noise_lower = 1e-8;
    double noise_upper = 1e2;
};

/// Fitted Gaussian-process regression model: y = f(x) + ε, constant mean,
/// homoscedastic noise. Immutable once constructed.
class GpModel {
public:
    /// Builds the model as given, without optimizing hyperparameters.
    GpModel(Eigen::VectorXd train_x, Eigen::VectorXd train_y, Kernel kernel,
            double noise_var, double mean_const);

    /// MLE hyperparameter fit: multi-start projected gradient ascent on the
    /// log marginal likelihood in log-hyperparameter space (analytic
    /// gradients). Deterministic given (data, template, seed).
    static GpModel fit(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                       const Kernel& kernel_template, double noise_init,
                       std::uint64_t seed, const GpFitOptions& options = {});

    double log_marginal_likelihood() const { return lml_; }
    GpPrediction predict(const Eigen::VectorXd& test_x) const;

    const Eigen::VectorXd& train_x() const { return x_; }
    const Eigen::VectorXd& train_y() const { return y_; }
    const Kernel& kernel() const { return kernel_; }
    double noise_var() const { return noise_var_; }
    double mean_const() const { return mean_const_; }
    const CholeskyFactor& chol() const { return chol_; }

private:
    Eigen::VectorXd x_, y_;
    Kernel kernel_;
    double noise_var_;
    double mean_const_;
    CholeskyFactor chol_;   // of K(X,X) + σ²I
    Eigen::VectorXd alpha_; // (K+σ²I)⁻¹ (y − c)
    double lml_;
};

/// Log marginal likelihood and its gradient w.r.t. the packed vector
/// [kernel log-hyperparameters..., log noise_var], evaluated without
/// constructing a full model. Used by the optimizer and the gradient tests.
double gp_lml_with_grad(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                        const Kernel& kernel, double noise_var, double mean_const,
                        Eigen::VectorXd* grad_out);

}  // namespace htsr
