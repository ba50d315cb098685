#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "knobkit/error.hpp"
#include "knobkit/history.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

struct AcquisitionSpec {
    enum class Kind { expected_improvement, density_ratio };
    Kind kind = Kind::expected_improvement;
    Sense sense = Sense::minimize;
    double best_observed = 0.0;
};

/// Expected positive improvement of N(mean, std^2) over best. The canonical
/// minimization form uses z = (best - mean)/std and EI = std*(z*Phi(z) + phi(z));
/// maximization mirrors the signs. std = 0 collapses to the deterministic
/// improvement max(improvement, 0).
inline double expected_improvement(double mean, double std_dev, double best, Sense sense) {
    if (std_dev < 0.0) throw ValidationError("expected_improvement: negative std");
    const double gap = sense == Sense::minimize ? best - mean : mean - best;
    if (std_dev == 0.0) return std::max(gap, 0.0);
    const double z = gap / std_dev;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(std_dev * (z * cdf + pdf), 0.0);
}

struct AcquisitionOptions {
    std::size_t n_random = 1000;        // uniform candidates
    std::size_t local_starts = 10;      // walks from the best observed configs
    double step = 0.05;                 // numeric neighbor step in unit coords
    std::size_t stop_after = 20;        // cumulative non-improving neighborhoods
    std::size_t budget = 100;           // total neighborhoods across all walks
};

namespace detail {

inline std::vector<Configuration> one_exchange_neighbors(const ConfigSpace& space,
                                                         const Configuration& c, double step) {
    std::vector<Configuration> out;
    for (std::size_t d = 0; d < space.size(); ++d) {
        const KnobSpec& k = space.knob(d);
        if (k.kind == KnobKind::categorical) {
            for (const auto& cat : k.categories) {
                if (cat == std::get<std::string>(c.values[d])) continue;
                Configuration n = c;
                n.values[d] = cat;
                out.push_back(std::move(n));
            }
        } else {
            const double u = unit_of(k, c.values[d]);
            for (double delta : {step, -step}) {
                const double nu = std::clamp(u + delta, 0.0, 1.0);
                KnobValue v = value_from_unit(k, nu);
                if (v == c.values[d]) continue;
                Configuration n = c;
                n.values[d] = std::move(v);
                out.push_back(std::move(n));
            }
        }
    }
    return out;
}

} // namespace detail

/// Maximize an acquisition score over the space: score the `n_random` uniform
/// candidates drawn as random_sample(space, n_random, seed), then greedy
/// one-exchange walks from the `local_starts` best observed configurations.
/// Configurations already evaluated in `history` are skipped; the argmax keeps
/// the earliest candidate on ties. Deterministic in `seed`.
inline Configuration maximize_acquisition(const ConfigSpace& space,
                                          const std::function<double(const Configuration&)>& score,
                                          const History& history, std::uint64_t seed,
                                          AcquisitionOptions opts = {}) {
    if (opts.n_random == 0) throw ValidationError("maximize_acquisition: n_random must be >= 1");

    const auto seen = [&](const Configuration& c) {
        for (const auto& r : history.records)
            if (r.config == c) return true;
        return false;
    };

    std::optional<Configuration> best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::optional<Configuration> best_any;  // fallback if everything is a duplicate
    double best_any_score = -std::numeric_limits<double>::infinity();

    const auto consider = [&](const Configuration& c) {
        const double s = score(c);
        if (s > best_any_score) {
            best_any_score = s;
            best_any = c;
        }
        if (seen(c)) return false;
        if (s > best_score) {
            best_score = s;
            best = c;
            return true;
        }
        return false;
    };

    for (const auto& c : random_sample(space, opts.n_random, seed)) consider(c);

    // Local phase: walk uphill from the best observed configs.
    std::vector<const Observation*> ok;
    for (const auto& r : history.records)
        if (r.status == EvalStatus::ok) ok.push_back(&r);
    std::stable_sort(ok.begin(), ok.end(), [&](const Observation* a, const Observation* b) {
        return is_better(a->value, b->value, history.sense);
    });
    if (ok.size() > opts.local_starts) ok.resize(opts.local_starts);

    std::size_t neighborhoods = 0;
    std::size_t non_improving = 0;
    for (const Observation* start : ok) {
        if (neighborhoods >= opts.budget || non_improving >= opts.stop_after) break;
        Configuration cur = start->config;
        double cur_score = score(cur);
        while (neighborhoods < opts.budget && non_improving < opts.stop_after) {
            ++neighborhoods;
            Configuration next;
            double next_score = cur_score;
            bool improved = false;
            for (auto& n : detail::one_exchange_neighbors(space, cur, opts.step)) {
                const double s = score(n);
                if (s > best_any_score) {
                    best_any_score = s;
                    best_any = n;
                }
                if (!seen(n) && s > best_score) {
                    best_score = s;
                    best = n;
                }
                if (s > next_score) {
                    next_score = s;
                    next = std::move(n);
                    improved = true;
                }
            }
            if (!improved) {
                ++non_improving;
                break;
            }
            cur = std::move(next);
            cur_score = next_score;
        }
    }

    if (best) return *best;
    if (best_any) return *best_any;
    throw ValidationError("maximize_acquisition: no candidates produced");
}

} // namespace knobkit
