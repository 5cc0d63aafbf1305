#include "htsr/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "htsr/rng.hpp"

namespace htsr {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

// Sort by x and drop exact duplicates, keeping the first occurrence.
void sort_dedup(Eigen::VectorXd& xs, Eigen::VectorXd& ys) {
    const Eigen::Index t = xs.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(t));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return xs(a) < xs(b); });
    Eigen::VectorXd sx(t), sy(t);
    Eigen::Index n = 0;
    for (Eigen::Index k = 0; k < t; ++k) {
        Eigen::Index i = order[static_cast<std::size_t>(k)];
        if (n > 0 && xs(i) == sx(n - 1)) continue;
        sx(n) = xs(i);
        sy(n) = ys(i);
        ++n;
    }
    xs = sx.head(n);
    ys = sy.head(n);
}

}  // namespace

Gaussian GpPrediction::marginal_at(Eigen::Index t_index) const {
    if (t_index < 0 || t_index >= dist.dim()) {
        throw ContractError("marginal_at: index out of range");
    }
    return Gaussian(dist.mean()(t_index), dist.cov()(t_index, t_index));
}

double gp_lml_with_grad(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                        const Kernel& kernel, double noise_var, double mean_const,
                        Eigen::VectorXd* grad_out) {
    const Eigen::Index t = xs.size();
    Eigen::MatrixXd k;
    std::vector<Eigen::MatrixXd> dk;
    if (grad_out != nullptr) {
        kernel.gram_with_grads(xs, k, dk);
    } else {
        k = kernel.gram(xs);
    }
    k.diagonal().array() += noise_var;
    CholeskyFactor chol = cholesky_with_jitter(k);
    Eigen::VectorXd resid = ys.array() - mean_const;
    Eigen::VectorXd alpha = chol.solve(resid);
    double lml = -0.5 * resid.dot(alpha) - 0.5 * chol.log_det() -
                 0.5 * static_cast<double>(t) * kLog2Pi;
    if (grad_out != nullptr) {
        Eigen::MatrixXd kinv = chol.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(t, t)));
        Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
        const int nf = static_cast<int>(dk.size());
        grad_out->resize(nf + 1);
        for (int j = 0; j < nf; ++j) {
            (*grad_out)(j) = 0.5 * w.cwiseProduct(dk[static_cast<std::size_t>(j)]).sum();
        }
        // d/d log σ_n²:  dK = σ_n² I
        (*grad_out)(nf) = 0.5 * noise_var * w.trace();
    }
    return lml;
}

GpModel::GpModel(Eigen::VectorXd train_x, Eigen::VectorXd train_y, Kernel kernel,
                 double noise_var, double mean_const)
    : x_(std::move(train_x)),
      y_(std::move(train_y)),
      kernel_(std::move(kernel)),
      noise_var_(noise_var),
      mean_const_(mean_const) {
    if (x_.size() != y_.size()) {
        throw ContractError("gp: train_x and train_y lengths differ");
    }
    if (x_.size() < 1) throw ContractError("gp: empty training set");
    if (!(noise_var_ > 0.0)) throw ContractError("gp: noise variance must be positive");
    sort_dedup(x_, y_);
    Eigen::MatrixXd k = kernel_.gram(x_);
    k.diagonal().array() += noise_var_;
    chol_ = cholesky_with_jitter(k);
    alpha_ = chol_.solve(Eigen::VectorXd(y_.array() - mean_const_));
    lml_ = -0.5 * (y_.array() - mean_const_).matrix().dot(alpha_) -
           0.5 * chol_.log_det() -
           0.5 * static_cast<double>(x_.size()) * kLog2Pi;
}

GpModel GpModel::fit(const Eigen::VectorXd& xs_in, const Eigen::VectorXd& ys_in,
                     const Kernel& kernel_template, double noise_init,
                     std::uint64_t seed, const GpFitOptions& options) {
    if (xs_in.size() != ys_in.size() || xs_in.size() < 2) {
        throw ContractError("gp fit: need at least two (x, y) pairs");
    }
    Eigen::VectorXd xs = xs_in, ys = ys_in;
    sort_dedup(xs, ys);
    const double mean_const = ys.mean();

    Kernel work = kernel_template;
    const int nk = work.n_free();
    const int np = nk + 1;  // + log noise

    Eigen::VectorXd lo(np), hi(np);
    lo.head(nk) = work.lower_log();
    hi.head(nk) = work.upper_log();
    lo(nk) = std::log(options.noise_lower);
    hi(nk) = std::log(options.noise_upper);

    auto clamp = [&](Eigen::VectorXd v) {
        for (int i = 0; i < np; ++i) v(i) = std::min(hi(i), std::max(lo(i), v(i)));
        return v;
    };

    auto objective = [&](const Eigen::VectorXd& s, Eigen::VectorXd* grad) {
        work.unpack_log(s.head(nk));
        return gp_lml_with_grad(xs, ys, work, std::exp(s(nk)), mean_const, grad);
    };

    // Random restarts stay inside a moderate sub-box; the default bounds
    // span eight decades and the extremes are numerically hostile.
    Eigen::VectorXd start_lo = lo.cwiseMax(std::log(1e-3));
    Eigen::VectorXd start_hi = hi.cwiseMin(std::log(1e3));

    Rng rng(seed);
    Eigen::VectorXd init(np);
    init.head(nk) = work.pack_log();
    init(nk) = std::log(noise_init);
    init = clamp(init);

    bool have_best = false;
    double best_f = 0.0;
    Eigen::VectorXd best_s;
    std::string last_failure;

    for (int start = 0; start < options.n_starts; ++start) {
        Eigen::VectorXd s = init;
        if (start > 0) {
            for (int i = 0; i < np; ++i) s(i) = rng.uniform(start_lo(i), start_hi(i));
        }
        Eigen::VectorXd grad;
        double f;
        try {
            f = objective(s, &grad);
        } catch (const Error& e) {
            last_failure = e.what();
            continue;
        }
        double step = 0.1;
        for (int iter = 0; iter < options.max_iters && step > 1e-12; ++iter) {
            Eigen::VectorXd cand = clamp(s + step * grad);
            double f2;
            Eigen::VectorXd grad2;
            try {
                f2 = objective(cand, &grad2);
            } catch (const Error&) {
                step *= 0.5;
                continue;
            }
            if (f2 > f) {
                s = cand;
                f = f2;
                grad = grad2;
                step *= 1.3;
            } else {
                step *= 0.5;
            }
        }
        if (!have_best || f > best_f) {
            have_best = true;
            best_f = f;
            best_s = s;
        }
    }

    if (!have_best) {
        std::ostringstream msg;
        msg << "gp fit: all " << options.n_starts
            << " restarts failed factorization; last error: " << last_failure;
        throw FitError(msg.str());
    }

    work.unpack_log(best_s.head(nk));
    return GpModel(xs, ys, work, std::exp(best_s(nk)), mean_const);
}

GpPrediction GpModel::predict(const Eigen::VectorXd& test_x) const {
    const Eigen::Index t = x_.size();
    const Eigen::Index m = test_x.size();
    if (m == 0) throw ContractError("predict: empty test inputs");
    Eigen::MatrixXd ks(m, t);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < t; ++j) ks(i, j) = kernel_.eval(test_x(i), x_(j));
    }
    Eigen::MatrixXd kss(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = kernel_.eval(test_x(i), test_x(j));
            kss(i, j) = kss(j, i) = v;
        }
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(m, mean_const_) + ks * alpha_;
    Eigen::MatrixXd v = chol_.lower.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd(ks.transpose()));
    Eigen::MatrixXd cov = kss - v.transpose() * v;
    // the subtraction cancels almost completely when the fit is nearly
    // noise-free; its rounding error scales with kss, so a ridge relative
    // to kss keeps the result factorizable without distorting it
    cov.diagonal().array() += 1e-12 * kss.diagonal().maxCoeff();
    return GpPrediction{test_x, Gaussian(std::move(mean), 0.5 * (cov + cov.transpose()))};
}

}  // namespace htsr
