#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "knobkit/error.hpp"
#include "knobkit/history.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

} // namespace detail

/// Per-knob 1-D density estimators for TPE: truncated-Gaussian KDE in unit
/// coordinates for numeric knobs, Laplace-smoothed frequencies for
/// categorical knobs. Knobs are modeled independently.
struct ParzenPair {
    struct NumericDensity {
        std::vector<double> centers;  // unit coordinates of the set members
        double bandwidth = 1e-3;

        /// Mixture of per-center Gaussians truncated to [0,1]; integrates to 1.
        double density(double u) const {
            double acc = 0.0;
            for (double c : centers) {
                const double z = detail::std_normal_cdf((1.0 - c) / bandwidth) -
                                 detail::std_normal_cdf((0.0 - c) / bandwidth);
                acc += detail::std_normal_pdf((u - c) / bandwidth) / (bandwidth * std::max(z, 1e-300));
            }
            return acc / static_cast<double>(centers.size());
        }

        double sample(Rng& rng) const {
            const double c = centers[rng.index(centers.size())];
            for (int attempt = 0; attempt < 100; ++attempt) {
                const double u = c + bandwidth * rng.normal();
                if (u >= 0.0 && u <= 1.0) return u;
            }
            return std::clamp(c, 0.0, 1.0);
        }
    };

    struct CategoricalDensity {
        std::vector<double> probs;  // smoothed frequencies, sum to 1

        double density(std::size_t idx) const { return probs.at(idx); }

        std::size_t sample(Rng& rng) const {
            double u = rng.uniform();
            for (std::size_t i = 0; i < probs.size(); ++i) {
                u -= probs[i];
                if (u <= 0.0) return i;
            }
            return probs.size() - 1;
        }
    };

    using KnobDensity = std::variant<NumericDensity, CategoricalDensity>;

    ConfigSpace space;
    double gamma = 0.25;
    std::vector<KnobDensity> good;  // l(theta), one per knob
    std::vector<KnobDensity> bad;   // g(theta)
};

namespace detail {

inline double silverman_bandwidth(const std::vector<double>& centers) {
    const std::size_t n = centers.size();
    if (n < 2) return 1e-3;
    double mean = 0.0;
    for (double c : centers) mean += c;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double c : centers) var += (c - mean) * (c - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    std::vector<double> sorted = centers;
    std::sort(sorted.begin(), sorted.end());
    const auto q = [&](double p) {
        const double pos = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    const double iqr = q(0.75) - q(0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = sd;
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, 1e-3);
}

inline ParzenPair::KnobDensity fit_knob_density(const KnobSpec& knob,
                                                const std::vector<const Configuration*>& members,
                                                std::size_t knob_index) {
    if (knob.kind == KnobKind::categorical) {
        ParzenPair::CategoricalDensity d;
        const std::size_t k = knob.num_categories();
        std::vector<double> counts(k, 0.0);
        for (const auto* c : members)
            counts[knob.category_index(std::get<std::string>(c->values[knob_index]))] += 1.0;
        const double total = static_cast<double>(members.size()) + static_cast<double>(k);
        d.probs.resize(k);
        for (std::size_t i = 0; i < k; ++i) d.probs[i] = (counts[i] + 1.0) / total;
        return d;
    }
    ParzenPair::NumericDensity d;
    d.centers.reserve(members.size());
    for (const auto* c : members) d.centers.push_back(detail::unit_of(knob, c->values[knob_index]));
    d.bandwidth = silverman_bandwidth(d.centers);
    return d;
}

} // namespace detail

/// Split successful observations at the gamma quantile (better side = good,
/// ties broken by observation order) and fit per-knob densities for each side.
inline ParzenPair tpe_fit(const ConfigSpace& space, const History& history, double gamma = 0.25) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("tpe_fit: gamma must be in (0,1)");
    std::vector<const Observation*> ok;
    for (const auto& r : history.records)
        if (r.status == EvalStatus::ok) ok.push_back(&r);
    if (ok.size() < 2) throw ValidationError("tpe_fit: need at least 2 successful observations");

    // Stable sort best-first: equal values keep observation order.
    std::stable_sort(ok.begin(), ok.end(), [&](const Observation* a, const Observation* b) {
        return is_better(a->value, b->value, history.sense);
    });
    const auto n_good = static_cast<std::size_t>(
        std::ceil(gamma * static_cast<double>(ok.size())));

    std::vector<const Configuration*> good_members, bad_members;
    for (std::size_t i = 0; i < ok.size(); ++i)
        (i < n_good ? good_members : bad_members).push_back(&ok[i]->config);
    if (good_members.empty() || bad_members.empty())
        throw ValidationError("tpe_fit: quantile split left one side empty");

    ParzenPair pair;
    pair.space = space;
    pair.gamma = gamma;
    for (std::size_t d = 0; d < space.size(); ++d) {
        pair.good.push_back(detail::fit_knob_density(space.knob(d), good_members, d));
        pair.bad.push_back(detail::fit_knob_density(space.knob(d), bad_members, d));
    }
    return pair;
}

namespace detail {

inline double log_knob_density(const ParzenPair::KnobDensity& density, const KnobSpec& knob,
                               const KnobValue& value) {
    if (std::holds_alternative<ParzenPair::CategoricalDensity>(density)) {
        const auto& d = std::get<ParzenPair::CategoricalDensity>(density);
        return std::log(d.density(knob.category_index(std::get<std::string>(value))));
    }
    const auto& d = std::get<ParzenPair::NumericDensity>(density);
    return std::log(std::max(d.density(unit_of(knob, value)), 1e-300));
}

} // namespace detail

/// Density ratio l(theta)/g(theta); g floored so the score stays finite.
inline double tpe_score(const ParzenPair& pair, const Configuration& config) {
    pair.space.validate(config);
    double log_l = 0.0, log_g = 0.0;
    for (std::size_t d = 0; d < pair.space.size(); ++d) {
        const KnobSpec& knob = pair.space.knob(d);
        log_l += detail::log_knob_density(pair.good[d], knob, config.values[d]);
        log_g += std::max(detail::log_knob_density(pair.bad[d], knob, config.values[d]),
                          std::log(1e-12));
    }
    return std::exp(std::clamp(log_l - log_g, -700.0, 700.0));
}

/// Draw one configuration from the good density, knob by knob.
inline Configuration tpe_sample_good(const ParzenPair& pair, Rng& rng) {
    Configuration c;
    c.values.reserve(pair.space.size());
    for (std::size_t d = 0; d < pair.space.size(); ++d) {
        const KnobSpec& knob = pair.space.knob(d);
        if (std::holds_alternative<ParzenPair::CategoricalDensity>(pair.good[d])) {
            const auto& density = std::get<ParzenPair::CategoricalDensity>(pair.good[d]);
            c.values.push_back(knob.categories[density.sample(rng)]);
        } else {
            const auto& density = std::get<ParzenPair::NumericDensity>(pair.good[d]);
            c.values.push_back(detail::value_from_unit(knob, density.sample(rng)));
        }
    }
    return c;
}

} // namespace knobkit
