#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "knobkit/error.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

enum class Sense { minimize, maximize };

inline const char* to_string(Sense s) {
    return s == Sense::minimize ? "minimize" : "maximize";
}

inline Sense sense_from_string(const std::string& s) {
    if (s == "minimize") return Sense::minimize;
    if (s == "maximize") return Sense::maximize;
    throw ValidationError("unknown sense '" + s + "'");
}

/// True when a is strictly better than b under the sense.
inline bool is_better(double a, double b, Sense sense) {
    return sense == Sense::minimize ? a < b : a > b;
}

enum class EvalStatus { ok, failed };

inline const char* to_string(EvalStatus s) { return s == EvalStatus::ok ? "ok" : "failed"; }

struct Observation {
    Configuration config;
    double value = 0.0;
    EvalStatus status = EvalStatus::ok;
    std::vector<double> metrics;  // optional internal-metrics vector
    std::size_t iteration = 0;
};

/// Append-only evaluation log of one tuning task.
struct History {
    std::vector<Observation> records;
    Sense sense = Sense::minimize;

    std::size_t size() const { return records.size(); }

    void append(Observation obs) {
        obs.iteration = records.size();
        records.push_back(std::move(obs));
    }

    std::size_t ok_count() const {
        std::size_t n = 0;
        for (const auto& r : records)
            if (r.status == EvalStatus::ok) ++n;
        return n;
    }
};

/// Substituted value for a failed evaluation: the worst successful value seen
/// so far, or a sense-appropriate sentinel (+-1e18) before the first success.
inline double handle_failure(const History& history, Sense sense) {
    constexpr double kNoSuccessSentinel = 1e18;
    std::optional<double> worst;
    for (const auto& r : history.records) {
        if (r.status != EvalStatus::ok) continue;
        if (!worst || is_better(*worst, r.value, sense)) worst = r.value;
    }
    if (worst) return *worst;
    return sense == Sense::minimize ? kNoSuccessSentinel : -kNoSuccessSentinel;
}

/// Best successful observation; earliest index wins ties.
inline std::pair<Configuration, double> best_so_far(const History& history) {
    const Observation* best = nullptr;
    for (const auto& r : history.records) {
        if (r.status != EvalStatus::ok) continue;
        if (!best || is_better(r.value, best->value, history.sense)) best = &r;
    }
    if (!best) throw ValidationError("best_so_far: no successful observations");
    return {best->config, best->value};
}

} // namespace knobkit
