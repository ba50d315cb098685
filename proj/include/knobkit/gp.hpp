#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "knobkit/error.hpp"
#include "knobkit/kernel.hpp"
#include "knobkit/rng.hpp"

namespace knobkit {

/// Gaussian process regressor. Targets are standardized internally; the
/// posterior is the textbook form
///   mean(q) = k^T (K + noise I)^{-1} y,   var(q) = k(q,q) - k^T (K + noise I)^{-1} k
/// evaluated in standardized units and mapped back on the way out.
class GPModel {
public:
    GPModel() = default;

    /// Fit on row-major points X. Empty X yields the prior model: mean 0,
    /// variance k(q,q).
    static GPModel fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                       Kernel kernel, double noise) {
        if (X.size() != y.size())
            throw ValidationError("gp_fit: |X| != |y|");
        if (noise < 0.0) throw ValidationError("gp_fit: negative noise");
        GPModel m;
        m.kernel_ = std::move(kernel);
        m.noise_ = noise;
        m.X_ = X;
        if (X.empty()) {
            m.y_mean_ = 0.0;
            m.y_scale_ = 1.0;
            return m;
        }
        const std::size_t n = X.size();
        m.dim_ = X[0].size();
        for (const auto& row : X)
            if (row.size() != m.dim_)
                throw ValidationError("gp_fit: ragged training matrix");
        m.kernel_.validate(m.dim_);

        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        m.y_mean_ = mean;
        m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;

        Eigen::VectorXd ys(n);
        for (std::size_t i = 0; i < n; ++i) ys(i) = (y[i] - m.y_mean_) / m.y_scale_;

        Eigen::MatrixXd K(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = kernel_eval(m.kernel_, X[i], X[j]);
                K(i, j) = v;
                K(j, i) = v;
            }
        }

        // Jitter ladder: retry the factorization with growing diagonal boosts.
        const double jitters[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
        for (double jitter : jitters) {
            Eigen::MatrixXd Kn = K;
            Kn.diagonal().array() += noise + jitter;
            Eigen::LLT<Eigen::MatrixXd> llt(Kn);
            if (llt.info() == Eigen::Success) {
                m.llt_ = std::move(llt);
                m.alpha_ = m.llt_.solve(ys);
                m.ys_ = std::move(ys);
                m.jitter_ = jitter;
                m.fitted_ = true;
                return m;
            }
        }
        throw ConditioningError("gp_fit: covariance stayed indefinite through the jitter ladder");
    }

    const Kernel& kernel() const { return kernel_; }
    double noise() const { return noise_; }
    std::size_t size() const { return X_.size(); }
    const std::vector<std::vector<double>>& points() const { return X_; }

    std::pair<double, double> predict(std::span<const double> q) const {
        if (X_.empty()) {
            return {0.0, kernel_eval(kernel_, q, q)};
        }
        if (q.size() != dim_) throw ValidationError("gp_predict: query length mismatch");
        const std::size_t n = X_.size();
        Eigen::VectorXd kv(n);
        for (std::size_t i = 0; i < n; ++i) kv(i) = kernel_eval(kernel_, X_[i], q);
        const double mean_s = kv.dot(alpha_);
        const Eigen::VectorXd w = llt_.solve(kv);
        double var_s = kernel_eval(kernel_, q, q) - kv.dot(w);
        if (var_s < 0.0) var_s = 0.0;
        return {y_mean_ + y_scale_ * mean_s, y_scale_ * y_scale_ * var_s};
    }

    /// Log marginal likelihood of the standardized targets.
    double log_marginal_likelihood() const {
        if (!fitted_) throw ValidationError("log_marginal_likelihood: model not fitted");
        const auto n = static_cast<double>(X_.size());
        double logdet = 0.0;
        const auto& L = llt_.matrixLLT();
        for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += std::log(L(i, i));
        return -0.5 * ys_.dot(alpha_) - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }

    /// Leave-one-out posterior for each training point, from the closed form
    ///   mu_-i = y_i - alpha_i / [Kn^-1]_ii,   var_-i = 1 / [Kn^-1]_ii.
    std::vector<std::pair<double, double>> loo_predictions() const {
        if (!fitted_) throw ValidationError("loo_predictions: model not fitted");
        const auto n = static_cast<Eigen::Index>(X_.size());
        Eigen::MatrixXd Kinv = llt_.solve(Eigen::MatrixXd::Identity(n, n));
        std::vector<std::pair<double, double>> out;
        out.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = Kinv(i, i);
            const double mu_s = ys_(i) - alpha_(i) / d;
            const double var_s = 1.0 / d;
            out.emplace_back(y_mean_ + y_scale_ * mu_s, y_scale_ * y_scale_ * var_s);
        }
        return out;
    }

private:
    Kernel kernel_;
    double noise_ = 0.0;
    std::vector<std::vector<double>> X_;
    std::size_t dim_ = 0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd ys_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    double jitter_ = 0.0;
    bool fitted_ = false;
};

inline GPModel gp_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                      Kernel kernel, double noise) {
    return GPModel::fit(X, y, std::move(kernel), noise);
}

inline std::pair<double, double> gp_predict(const GPModel& m, std::span<const double> q) {
    return m.predict(q);
}

struct HyperFitResult {
    Kernel kernel;
    double noise = 1e-6;
    double log_marginal = 0.0;
};

namespace detail {

// Shared-lengthscale parameterization: one log-lengthscale per kernel
// component, one log signal variance (carried by the first component for
// products), one log noise.
inline Kernel instantiate(const Kernel& family, const std::vector<double>& log_ls, double log_s2) {
    Kernel k = family;
    if (k.kind == Kernel::Kind::product) {
        for (std::size_t c = 0; c < k.components.size(); ++c) {
            k.components[c] = k.components[c].with_shared_lengthscale(std::exp(log_ls[c]));
            k.components[c].signal_variance = c == 0 ? std::exp(log_s2) : 1.0;
        }
    } else {
        k = k.with_shared_lengthscale(std::exp(log_ls[0]));
        k.signal_variance = std::exp(log_s2);
    }
    return k;
}

} // namespace detail

/// Maximize the log marginal likelihood over shared per-component
/// lengthscales, signal variance and noise with seeded multi-restart
/// coordinate search. `family` supplies the kernel structure; its numeric
/// hyperparameters are ignored.
inline HyperFitResult gp_fit_hypers(const std::vector<std::vector<double>>& X,
                                    const std::vector<double>& y, const Kernel& family,
                                    std::uint64_t seed, int restarts = 5) {
    if (X.size() < 2) throw ValidationError("gp_fit_hypers: need at least 2 points");
    const std::size_t n_components =
        family.kind == Kernel::Kind::product ? family.components.size() : 1;
    const std::size_t n_params = n_components + 2;  // log-ls..., log s2, log noise

    const double ls_lo = std::log(0.05), ls_hi = std::log(3.0);
    const double s2_lo = std::log(0.05), s2_hi = std::log(10.0);
    const double nz_lo = std::log(1e-8), nz_hi = std::log(0.5);

    auto clamp_params = [&](std::vector<double>& p) {
        for (std::size_t c = 0; c < n_components; ++c)
            p[c] = std::clamp(p[c], ls_lo, ls_hi);
        p[n_components] = std::clamp(p[n_components], s2_lo, s2_hi);
        p[n_components + 1] = std::clamp(p[n_components + 1], nz_lo, nz_hi);
    };

    auto objective = [&](const std::vector<double>& p) -> double {
        std::vector<double> log_ls(p.begin(), p.begin() + static_cast<long>(n_components));
        Kernel k = detail::instantiate(family, log_ls, p[n_components]);
        const double noise = std::exp(p[n_components + 1]);
        GPModel m = GPModel::fit(X, y, std::move(k), noise);
        return m.log_marginal_likelihood();
    };

    Rng rng = Rng::derive(seed, 0x4B9);
    bool any_ok = false;
    double best_obj = -std::numeric_limits<double>::infinity();
    std::vector<double> best_p;

    const int total_restarts = std::max(restarts, 1);
    for (int r = 0; r <= total_restarts; ++r) {
        std::vector<double> p(n_params);
        if (r == 0) {
            for (std::size_t c = 0; c < n_components; ++c) p[c] = std::log(0.5);
            p[n_components] = 0.0;
            p[n_components + 1] = std::log(1e-3);
        } else {
            for (std::size_t c = 0; c < n_components; ++c) p[c] = rng.uniform(ls_lo, ls_hi);
            p[n_components] = rng.uniform(s2_lo, s2_hi);
            p[n_components + 1] = rng.uniform(nz_lo, nz_hi);
        }
        double cur;
        try {
            cur = objective(p);
        } catch (const ConditioningError&) {
            continue;
        }
        const double steps[] = {0.8, 0.4, 0.2, 0.1};
        for (double step : steps) {
            for (std::size_t i = 0; i < n_params; ++i) {
                for (double dir : {+1.0, -1.0}) {
                    std::vector<double> q = p;
                    q[i] += dir * step;
                    clamp_params(q);
                    if (q[i] == p[i]) continue;
                    try {
                        const double v = objective(q);
                        if (v > cur) {
                            cur = v;
                            p = q;
                        }
                    } catch (const ConditioningError&) {
                    }
                }
            }
        }
        if (!any_ok || cur > best_obj) {
            any_ok = true;
            best_obj = cur;
            best_p = p;
        }
    }

    HyperFitResult out;
    if (!any_ok) {
        // Every restart lost to conditioning: fall back to unit lengthscales.
        out.kernel = family.with_shared_lengthscale(1.0);
        if (out.kernel.kind == Kernel::Kind::product) {
            for (auto& c : out.kernel.components) c.signal_variance = 1.0;
        } else {
            out.kernel.signal_variance = 1.0;
        }
        out.noise = 1e-6;
        out.log_marginal = -std::numeric_limits<double>::infinity();
        return out;
    }
    std::vector<double> log_ls(best_p.begin(), best_p.begin() + static_cast<long>(n_components));
    out.kernel = detail::instantiate(family, log_ls, best_p[n_components]);
    out.noise = std::exp(best_p[n_components + 1]);
    out.log_marginal = best_obj;
    return out;
}

} // namespace knobkit
