#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "knobkit/error.hpp"

namespace knobkit {

/// Covariance kernel over encoded vectors. A kernel acts on its active
/// columns (all columns when the mask is empty); product kernels multiply
/// component values and require disjoint column masks on the components.
struct Kernel {
    enum class Kind { rbf, matern52, hamming, product };

    Kind kind = Kind::rbf;
    std::vector<double> lengthscales;   // one per active column (non-product)
    double signal_variance = 1.0;       // ignored for product
    std::vector<std::size_t> columns;   // active columns; empty = all
    std::vector<Kernel> components;     // product only

    static Kernel rbf(std::vector<double> ls, double s2 = 1.0,
                      std::vector<std::size_t> cols = {}) {
        Kernel k;
        k.kind = Kind::rbf;
        k.lengthscales = std::move(ls);
        k.signal_variance = s2;
        k.columns = std::move(cols);
        return k;
    }

    static Kernel matern52(std::vector<double> ls, double s2 = 1.0,
                           std::vector<std::size_t> cols = {}) {
        Kernel k;
        k.kind = Kind::matern52;
        k.lengthscales = std::move(ls);
        k.signal_variance = s2;
        k.columns = std::move(cols);
        return k;
    }

    static Kernel hamming(std::vector<double> ls, double s2 = 1.0,
                          std::vector<std::size_t> cols = {}) {
        Kernel k;
        k.kind = Kind::hamming;
        k.lengthscales = std::move(ls);
        k.signal_variance = s2;
        k.columns = std::move(cols);
        return k;
    }

    static Kernel product(std::vector<Kernel> parts) {
        Kernel k;
        k.kind = Kind::product;
        k.components = std::move(parts);
        return k;
    }

    /// Column indices this kernel reads on a dim-wide vector.
    std::vector<std::size_t> active_columns(std::size_t dim) const {
        if (kind == Kind::product) {
            std::vector<std::size_t> all;
            for (const auto& c : components) {
                auto part = c.active_columns(dim);
                all.insert(all.end(), part.begin(), part.end());
            }
            return all;
        }
        if (!columns.empty()) return columns;
        std::vector<std::size_t> all(dim);
        for (std::size_t i = 0; i < dim; ++i) all[i] = i;
        return all;
    }

    void validate(std::size_t dim) const {
        if (kind == Kind::product) {
            if (components.empty())
                throw ValidationError("product kernel needs at least one component");
            std::vector<bool> used(dim, false);
            for (const auto& c : components) {
                if (c.kind == Kind::product)
                    throw ValidationError("nested product kernels are not supported");
                c.validate(dim);
                for (std::size_t col : c.active_columns(dim)) {
                    if (used[col])
                        throw ValidationError("product kernel components overlap on column " +
                                              std::to_string(col));
                    used[col] = true;
                }
            }
            return;
        }
        const auto cols = active_columns(dim);
        for (std::size_t col : cols)
            if (col >= dim)
                throw ValidationError("kernel column " + std::to_string(col) +
                                      " out of range for dim " + std::to_string(dim));
        if (lengthscales.size() != cols.size())
            throw ValidationError("kernel has " + std::to_string(lengthscales.size()) +
                                  " lengthscales for " + std::to_string(cols.size()) +
                                  " active columns");
        for (double l : lengthscales)
            if (!(l > 0.0)) throw ValidationError("kernel lengthscales must be positive");
        if (!(signal_variance > 0.0))
            throw ValidationError("kernel signal variance must be positive");
    }

    /// Same structure with every lengthscale set to v (used as a fallback and
    /// as the hyper-search template instantiation).
    Kernel with_shared_lengthscale(double v) const {
        Kernel k = *this;
        if (kind == Kind::product) {
            for (auto& c : k.components) c = c.with_shared_lengthscale(v);
        } else {
            for (auto& l : k.lengthscales) l = v;
        }
        return k;
    }
};

inline double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ValidationError("kernel_eval: vectors have different lengths");
    switch (k.kind) {
        case Kernel::Kind::product: {
            double v = 1.0;
            for (const auto& c : k.components) v *= kernel_eval(c, a, b);
            return v;
        }
        case Kernel::Kind::rbf:
        case Kernel::Kind::matern52: {
            const auto cols = k.active_columns(a.size());
            if (k.lengthscales.size() != cols.size())
                throw ValidationError("kernel_eval: lengthscale count does not match layout");
            double r2 = 0.0;
            for (std::size_t i = 0; i < cols.size(); ++i) {
                if (cols[i] >= a.size())
                    throw ValidationError("kernel_eval: column out of range");
                const double d = (a[cols[i]] - b[cols[i]]) / k.lengthscales[i];
                r2 += d * d;
            }
            if (k.kind == Kernel::Kind::rbf) return k.signal_variance * std::exp(-0.5 * r2);
            const double r = std::sqrt(r2);
            const double sr = std::sqrt(5.0) * r;
            return k.signal_variance * (1.0 + sr + 5.0 * r2 / 3.0) * std::exp(-sr);
        }
        case Kernel::Kind::hamming: {
            const auto cols = k.active_columns(a.size());
            if (k.lengthscales.size() != cols.size())
                throw ValidationError("kernel_eval: lengthscale count does not match layout");
            double mismatch = 0.0;
            for (std::size_t i = 0; i < cols.size(); ++i) {
                if (cols[i] >= a.size())
                    throw ValidationError("kernel_eval: column out of range");
                if (a[cols[i]] != b[cols[i]]) mismatch += 1.0 / k.lengthscales[i];
            }
            return k.signal_variance * std::exp(-mismatch);
        }
    }
    throw ValidationError("kernel_eval: unknown kernel kind");
}

} // namespace knobkit
