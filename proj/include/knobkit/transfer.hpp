#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "knobkit/csv.hpp"
#include "knobkit/error.hpp"
#include "knobkit/gp.hpp"
#include "knobkit/history.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

/// Workload characterization: mean internal-metrics vector of one task. All
/// profiles compared against each other must share the same dimension.
using MetricsProfile = std::vector<double>;

/// A finished tuning task whose observations can inform a new one.
struct BaseTask {
    std::string task_id;
    History history;
    GPModel model;
    MetricsProfile metrics_profile;
};

/// Kernel family for task models over unit encoding: Matern 5/2 on numeric
/// columns times a Hamming factor on categorical columns.
inline Kernel transfer_kernel_family(const ConfigSpace& space) {
    std::vector<std::size_t> numeric_cols, categorical_cols;
    for (std::size_t d = 0; d < space.size(); ++d) {
        if (space.knob(d).kind == KnobKind::categorical)
            categorical_cols.push_back(d);
        else
            numeric_cols.push_back(d);
    }
    std::vector<Kernel> parts;
    if (!numeric_cols.empty())
        parts.push_back(
            Kernel::matern52(std::vector<double>(numeric_cols.size(), 1.0), 1.0, numeric_cols));
    if (!categorical_cols.empty())
        parts.push_back(
            Kernel::hamming(std::vector<double>(categorical_cols.size(), 1.0), 1.0,
                            categorical_cols));
    if (parts.size() == 1) return parts[0];
    return Kernel::product(std::move(parts));
}

/// Fit a task GP on unit-encoded configurations with seeded hyperparameter
/// search. Needs at least two observations.
inline GPModel fit_task_gp(const ConfigSpace& space, const std::vector<Configuration>& X,
                           const std::vector<double>& y, std::uint64_t seed) {
    if (X.size() != y.size()) throw ValidationError("fit_task_gp: |X| != |y|");
    if (X.size() < 2) throw ValidationError("fit_task_gp: need at least 2 observations");
    auto layout = std::make_shared<EncodingLayout>(layout_for(space, EncodingScheme::unit));
    std::vector<std::vector<double>> Xe;
    Xe.reserve(X.size());
    for (const auto& c : X) Xe.push_back(encode(c, space, EncodingScheme::unit, layout).coords);
    const auto hypers = gp_fit_hypers(Xe, y, transfer_kernel_family(space), seed);
    return gp_fit(Xe, y, hypers.kernel, hypers.noise);
}

/// Number of ordered pairs (j, k), including j = k, whose predicted order
/// disagrees with the observed order: 1[(pred_j <= pred_k) != (y_j <= y_k)].
/// The j = k pairs contribute 0 since both comparisons hold.
inline std::size_t ranking_loss(std::span<const double> preds, std::span<const double> y) {
    if (preds.size() != y.size()) throw ValidationError("ranking_loss: length mismatch");
    if (preds.size() < 2) throw ValidationError("ranking_loss: need at least 2 observations");
    std::size_t mismatches = 0;
    for (std::size_t j = 0; j < preds.size(); ++j)
        for (std::size_t k = 0; k < preds.size(); ++k)
            if ((preds[j] <= preds[k]) != (y[j] <= y[k])) ++mismatches;
    return mismatches;
}

/// Ranking loss of a model's mean predictions against a history's stored
/// values.
inline std::size_t ranking_loss(const GPModel& model, const ConfigSpace& space,
                                const History& history) {
    if (history.size() < 2) throw ValidationError("ranking_loss: need at least 2 observations");
    auto layout = std::make_shared<EncodingLayout>(layout_for(space, EncodingScheme::unit));
    std::vector<double> preds, y;
    preds.reserve(history.size());
    y.reserve(history.size());
    for (const auto& r : history.records) {
        preds.push_back(
            model.predict(encode(r.config, space, EncodingScheme::unit, layout).coords).first);
        y.push_back(r.value);
    }
    return ranking_loss(preds, y);
}

/// Bootstrap weighting of base models against the target's own model: each of
/// `resamples` resamples of the target history (with replacement, same size)
/// awards 1/resamples to the model with the lowest ranking loss on the
/// resample, split equally on ties. The target competes through its
/// leave-one-out predictions. Returned weights are ordered bases-then-target,
/// are nonnegative and sum to 1; with no base tasks the target gets weight 1.
inline std::vector<double> rgpe_weights(const std::vector<BaseTask>& bases,
                                        const GPModel& target_model, const ConfigSpace& space,
                                        const std::vector<Configuration>& target_X,
                                        const std::vector<double>& target_y, std::uint64_t seed,
                                        std::size_t resamples = 100) {
    const std::size_t n_models = bases.size() + 1;
    if (bases.empty()) return {1.0};
    if (target_X.size() != target_y.size()) throw ValidationError("rgpe_weights: |X| != |y|");
    const std::size_t n = target_X.size();
    if (n < 3) throw ValidationError("rgpe_weights: need at least 3 target observations");
    if (resamples < 1) throw ValidationError("rgpe_weights: need at least 1 resample");

    auto layout = std::make_shared<EncodingLayout>(layout_for(space, EncodingScheme::unit));
    // Per-model predictions at the target's own configurations. The target
    // model may not predict its training points directly (it would interpolate
    // them), so it enters through leave-one-out means.
    std::vector<std::vector<double>> preds(n_models, std::vector<double>(n));
    for (std::size_t b = 0; b < bases.size(); ++b)
        for (std::size_t i = 0; i < n; ++i)
            preds[b][i] = bases[b]
                              .model
                              .predict(encode(target_X[i], space, EncodingScheme::unit, layout)
                                           .coords)
                              .first;
    const auto loo = target_model.loo_predictions();
    if (loo.size() != n) throw ValidationError("rgpe_weights: target model size mismatch");
    for (std::size_t i = 0; i < n; ++i) preds[n_models - 1][i] = loo[i].first;

    std::vector<double> weights(n_models, 0.0);
    Rng rng = Rng::derive(seed, 0xB007);
    std::vector<double> rp(n), ry(n);
    std::vector<std::size_t> losses(n_models);
    for (std::size_t s = 0; s < resamples; ++s) {
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = rng.index(n);
        for (std::size_t m = 0; m < n_models; ++m) {
            for (std::size_t i = 0; i < n; ++i) {
                rp[i] = preds[m][idx[i]];
                ry[i] = target_y[idx[i]];
            }
            losses[m] = ranking_loss(rp, ry);
        }
        const std::size_t best = *std::min_element(losses.begin(), losses.end());
        std::size_t ties = 0;
        for (auto l : losses)
            if (l == best) ++ties;
        const double share = 1.0 / (static_cast<double>(resamples) * static_cast<double>(ties));
        for (std::size_t m = 0; m < n_models; ++m)
            if (losses[m] == best) weights[m] += share;
    }
    return weights;
}

/// Weighted combination of base models and the target model.
struct EnsembleModel {
    ConfigSpace space;
    std::vector<BaseTask> bases;
    GPModel target_model;
    std::vector<double> weights;  // bases..., target

    void validate() const {
        if (weights.size() != bases.size() + 1)
            throw ValidationError("ensemble: weight count mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (w < -1e-12) throw ValidationError("ensemble: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("ensemble: weights must sum to 1");
    }
};

/// Fit the target model and weight it against the base tasks. The target
/// model is exactly fit_task_gp(space, X, y, seed) over the history's stored
/// values, so a zero-base ensemble reproduces the plain target GP.
inline EnsembleModel build_ensemble(const ConfigSpace& space, std::vector<BaseTask> bases,
                                    const History& target_history, std::uint64_t seed) {
    std::vector<Configuration> X;
    std::vector<double> y;
    for (const auto& r : target_history.records) {
        X.push_back(r.config);
        y.push_back(r.value);
    }
    EnsembleModel m;
    m.space = space;
    m.bases = std::move(bases);
    m.target_model = fit_task_gp(space, X, y, seed);
    m.weights = rgpe_weights(m.bases, m.target_model, space, X, y, Rng::mix(seed, 0x7318));
    m.validate();
    return m;
}

/// Ensemble posterior: weighted mean of means and weighted sum of variances.
inline std::pair<double, double> rgpe_predict(const EnsembleModel& m,
                                              std::span<const double> q) {
    m.validate();
    double mean = 0.0, var = 0.0;
    for (std::size_t b = 0; b < m.bases.size(); ++b) {
        if (m.weights[b] == 0.0) continue;
        const auto [mu, v] = m.bases[b].model.predict(q);
        mean += m.weights[b] * mu;
        var += m.weights[b] * v;
    }
    const double wt = m.weights.back();
    if (wt != 0.0) {
        const auto [mu, v] = m.target_model.predict(q);
        mean += wt * mu;
        var += wt * v;
    }
    return {mean, var};
}

inline std::pair<double, double> rgpe_predict(const EnsembleModel& m, const EncodedVector& q) {
    const auto expected = layout_for(m.space, EncodingScheme::unit).dim;
    if (q.coords.size() != expected) throw ValidationError("rgpe_predict: layout mismatch");
    return rgpe_predict(m, std::span<const double>(q.coords));
}

inline std::pair<double, double> rgpe_predict(const EnsembleModel& m, const Configuration& c) {
    auto layout = std::make_shared<EncodingLayout>(layout_for(m.space, EncodingScheme::unit));
    return rgpe_predict(m, std::span<const double>(
                               encode(c, m.space, EncodingScheme::unit, layout).coords));
}

/// Nearest source task by Euclidean distance between standardized metrics
/// profiles. Each metric dimension is standardized over sources plus target;
/// zero-variance dimensions are dropped. Distance ties go to the smallest
/// task_id. All profiles must share the target's dimension.
inline const BaseTask& workload_map(const std::vector<BaseTask>& sources,
                                    const MetricsProfile& target) {
    if (sources.empty()) throw ValidationError("workload_map: no source tasks");
    const std::size_t dim = target.size();
    for (const auto& s : sources)
        if (s.metrics_profile.size() != dim)
            throw ValidationError("workload_map: task '" + s.task_id +
                                  "' profile dimension mismatch");

    std::vector<double> sd(dim, 0.0);
    const auto count = static_cast<double>(sources.size() + 1);
    for (std::size_t d = 0; d < dim; ++d) {
        double m = target[d];
        for (const auto& s : sources) m += s.metrics_profile[d];
        m /= count;
        double var = (target[d] - m) * (target[d] - m);
        for (const auto& s : sources)
            var += (s.metrics_profile[d] - m) * (s.metrics_profile[d] - m);
        var /= count;
        sd[d] = var > 1e-24 ? std::sqrt(var) : 0.0;  // 0 marks a dropped dimension
    }

    const BaseTask* best = nullptr;
    double best_dist = 0.0;
    for (const auto& s : sources) {
        double dist = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            if (sd[d] == 0.0) continue;
            const double z = (s.metrics_profile[d] - target[d]) / sd[d];
            dist += z * z;
        }
        if (!best || dist < best_dist || (dist == best_dist && s.task_id < best->task_id)) {
            best = &s;
            best_dist = dist;
        }
    }
    return *best;
}

/// Relative performance change from using transfer: (with - without)/without.
inline double transfer_pe(double with_transfer, double without_transfer) {
    if (without_transfer == 0.0)
        throw ValidationError("transfer_pe: baseline performance is zero");
    return (with_transfer - without_transfer) / without_transfer;
}

/// First evaluation count (1-based) whose value is at least as good as
/// `target` under the sense; nullopt when never reached.
inline std::optional<std::size_t> steps_to_reach(const std::vector<double>& values, double target,
                                                 Sense sense) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == target || is_better(values[i], target, sense)) return i + 1;
    return std::nullopt;
}

/// Speedup of a transfer run over its baseline in evaluations-to-reach terms;
/// nullopt marks a run that never reached the baseline's best.
inline std::optional<double> transfer_speedup(double steps_base,
                                              std::optional<double> steps_transfer) {
    if (steps_base <= 0.0) throw ValidationError("transfer_speedup: invalid baseline step count");
    if (!steps_transfer) return std::nullopt;
    if (*steps_transfer <= 0.0)
        throw ValidationError("transfer_speedup: invalid transfer step count");
    return steps_base / *steps_transfer;
}

inline std::string format_speedup(const std::optional<double>& speedup) {
    if (!speedup) return "×";  // never surpassed the baseline
    return format_double(*speedup);
}

// ---------------------------------------------------------------------------
// Task archives

namespace detail {

/// FNV-1a, pinned here so task seeds don't depend on the standard library.
inline std::uint64_t string_seed(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace detail

/// Parse a task history CSV: knob columns plus "value" and optional "status";
/// extra columns (iteration, best_so_far) are ignored, which makes session
/// trajectory files loadable as-is.
inline History parse_task_history(const ConfigSpace& space, const CsvTable& table, Sense sense) {
    History h;
    h.sense = sense;
    const std::size_t value_col = table.column("value");
    std::optional<std::size_t> status_col;
    if (table.has_column("status")) status_col = table.column("status");
    std::vector<std::size_t> knob_cols;
    for (const auto& k : space.knobs()) knob_cols.push_back(table.column(k.name));
    for (const auto& row : table.rows) {
        Observation obs;
        obs.config.values.reserve(space.size());
        for (std::size_t d = 0; d < space.size(); ++d) {
            const KnobSpec& k = space.knob(d);
            const std::string& cell = row[knob_cols[d]];
            switch (k.kind) {
                case KnobKind::continuous: obs.config.values.push_back(parse_double(cell)); break;
                case KnobKind::integer:
                    obs.config.values.push_back(
                        static_cast<std::int64_t>(std::llround(parse_double(cell))));
                    break;
                case KnobKind::categorical: obs.config.values.push_back(cell); break;
            }
        }
        space.validate(obs.config);
        obs.value = parse_double(row[value_col]);
        if (status_col) {
            const std::string& st = row[*status_col];
            if (st == "ok")
                obs.status = EvalStatus::ok;
            else if (st == "failed")
                obs.status = EvalStatus::failed;
            else
                throw ValidationError("task history: unknown status '" + st + "'");
        }
        h.append(std::move(obs));
    }
    return h;
}

/// Load one task directory: `history.csv` plus an optional `metrics.json`
/// array holding the task's metrics profile. The directory name is the task
/// id.
inline BaseTask load_base_task(const ConfigSpace& space, const std::filesystem::path& dir,
                               Sense sense, std::uint64_t seed) {
    BaseTask task;
    task.task_id = dir.filename().string();
    task.history = parse_task_history(space, read_csv_file((dir / "history.csv").string()), sense);
    if (task.history.size() < 2)
        throw ValidationError("task '" + task.task_id + "': need at least 2 observations");

    const auto metrics_path = dir / "metrics.json";
    if (std::filesystem::exists(metrics_path)) {
        std::ifstream in(metrics_path);
        if (!in) throw IoError("cannot open '" + metrics_path.string() + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(metrics_path.string() + ": " + e.what());
        }
        if (!doc.is_array())
            throw ValidationError(metrics_path.string() + ": expected an array of numbers");
        for (const auto& val : doc) {
            if (!val.is_number())
                throw ValidationError(metrics_path.string() + ": non-numeric metric entry");
            task.metrics_profile.push_back(val.get<double>());
        }
    }

    std::vector<Configuration> X;
    std::vector<double> y;
    for (const auto& r : task.history.records) {
        X.push_back(r.config);
        y.push_back(r.value);
    }
    task.model = fit_task_gp(space, X, y, Rng::mix(seed, detail::string_seed(task.task_id)));
    return task;
}

/// Load every task subdirectory (one containing history.csv) under `root`,
/// sorted by task id.
inline std::vector<BaseTask> load_task_archive(const ConfigSpace& space,
                                               const std::filesystem::path& root, Sense sense,
                                               std::uint64_t seed) {
    if (!std::filesystem::is_directory(root))
        throw IoError("task archive '" + root.string() + "' is not a directory");
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "history.csv"))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<BaseTask> tasks;
    tasks.reserve(dirs.size());
    for (const auto& dir : dirs) tasks.push_back(load_base_task(space, dir, sense, seed));
    return tasks;
}

} // namespace knobkit
