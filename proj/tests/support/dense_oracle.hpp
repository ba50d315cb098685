// Independent reference implementations used only by tests: plain
// Gauss-Jordan linear algebra and hand-written kernel formulas, kept free of
// the library's Eigen/Cholesky path so the two can check each other.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "knobkit/kernel.hpp"

namespace oracle {

inline double kernel_value(const knobkit::Kernel& k, const std::vector<double>& a,
                           const std::vector<double>& b) {
    using knobkit::Kernel;
    if (k.kind == Kernel::Kind::product) {
        double v = 1.0;
        for (const auto& c : k.components) v *= kernel_value(c, a, b);
        return v;
    }
    std::vector<std::size_t> cols = k.columns;
    if (cols.empty())
        for (std::size_t i = 0; i < a.size(); ++i) cols.push_back(i);
    if (k.kind == Kernel::Kind::hamming) {
        double acc = 0.0;
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (a[cols[i]] != b[cols[i]]) acc += 1.0 / k.lengthscales[i];
        return k.signal_variance * std::exp(-acc);
    }
    double r2 = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const double d = (a[cols[i]] - b[cols[i]]) / k.lengthscales[i];
        r2 += d * d;
    }
    if (k.kind == Kernel::Kind::rbf) return k.signal_variance * std::exp(-0.5 * r2);
    const double r = std::sqrt(r2);
    return k.signal_variance * (1.0 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) *
           std::exp(-std::sqrt(5.0) * r);
}

/// Solve A x = b by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = A.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        if (A[col][col] == 0.0) throw std::runtime_error("oracle::solve: singular matrix");
        const double d = A[col][col];
        for (std::size_t c = 0; c < n; ++c) A[col][c] /= d;
        b[col] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = A[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

/// Posterior mean/variance by direct dense solve, with the same target
/// standardization convention the library documents.
inline std::pair<double, double> gp_predict(const std::vector<std::vector<double>>& X,
                                            const std::vector<double>& y,
                                            const knobkit::Kernel& kernel, double noise,
                                            const std::vector<double>& q) {
    const std::size_t n = X.size();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double scale = var > 1e-24 ? std::sqrt(var) : 1.0;

    std::vector<std::vector<double>> Kn(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            Kn[i][j] = kernel_value(kernel, X[i], X[j]) + (i == j ? noise : 0.0);

    std::vector<double> ys(n), kv(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = (y[i] - mean) / scale;
        kv[i] = kernel_value(kernel, X[i], q);
    }
    const auto alpha = solve(Kn, ys);
    const auto w = solve(Kn, kv);
    double mean_s = 0.0, kw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_s += kv[i] * alpha[i];
        kw += kv[i] * w[i];
    }
    double var_s = kernel_value(kernel, q, q) - kw;
    if (var_s < 0.0) var_s = 0.0;
    return {mean + scale * mean_s, scale * scale * var_s};
}

} // namespace oracle
