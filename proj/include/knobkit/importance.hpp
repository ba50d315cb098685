#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "knobkit/csv.hpp"
#include "knobkit/error.hpp"
#include "knobkit/forest.hpp"
#include "knobkit/history.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

/// Observation corpus an importance measurement runs on: configurations with
/// measured performance plus the default baseline pair.
struct TrainingSet {
    ConfigSpace space;
    std::vector<Configuration> X;
    std::vector<double> y;
    Configuration default_config;
    double default_value = 0.0;
    Sense sense = Sense::minimize;

    void validate() const {
        if (X.size() != y.size()) throw ValidationError("training set: |X| != |y|");
        if (X.size() < 2) throw ValidationError("training set: need at least 2 observations");
        if (!std::isfinite(default_value))
            throw ValidationError("training set: default value must be finite");
        space.validate(default_config);
        for (const auto& c : X) space.validate(c);
        for (double v : y)
            if (!std::isfinite(v)) throw ValidationError("training set: non-finite performance");
    }
};

struct ImportanceReport {
    std::string method;
    std::map<std::string, double> scores;
    std::vector<std::string> ranking;  // descending score, ties by name

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["method"] = method;
        doc["scores"] = scores;
        doc["ranking"] = ranking;
        return doc;
    }
};

namespace detail {

inline ImportanceReport make_report(const ConfigSpace& space, std::string method,
                                    const std::vector<double>& per_knob) {
    ImportanceReport r;
    r.method = std::move(method);
    for (std::size_t d = 0; d < space.size(); ++d) r.scores[space.knob(d).name] = per_knob[d];
    r.ranking.reserve(space.size());
    for (const auto& k : space.knobs()) r.ranking.push_back(k.name);
    std::sort(r.ranking.begin(), r.ranking.end(), [&](const std::string& a, const std::string& b) {
        const double sa = r.scores.at(a), sb = r.scores.at(b);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return r;
}

inline std::vector<ColumnKind> raw_column_kinds(const ConfigSpace& space) {
    std::vector<ColumnKind> kinds;
    kinds.reserve(space.size());
    for (const auto& k : space.knobs())
        kinds.push_back(k.kind == KnobKind::categorical ? ColumnKind::categorical
                                                        : ColumnKind::numeric);
    return kinds;
}

inline std::vector<std::vector<double>> raw_matrix(const TrainingSet& data) {
    auto layout = std::make_shared<EncodingLayout>(layout_for(data.space, EncodingScheme::raw));
    std::vector<std::vector<double>> X;
    X.reserve(data.X.size());
    for (const auto& c : data.X)
        X.push_back(encode(c, data.space, EncodingScheme::raw, layout).coords);
    return X;
}

inline ForestModel importance_forest(const TrainingSet& data, std::uint64_t seed,
                                     ForestParams params = {}) {
    return rf_fit(raw_matrix(data), data.y, raw_column_kinds(data.space), params, seed);
}

inline bool constant_targets(const std::vector<double>& y) {
    for (double v : y)
        if (v != y[0]) return false;
    return true;
}

inline ImportanceReport uniform_report(const ConfigSpace& space, const std::string& method) {
    return make_report(space, method,
                       std::vector<double>(space.size(), 1.0 / static_cast<double>(space.size())));
}

} // namespace detail

/// Split-count importance: how often each knob is used in a tree split across
/// the forest, normalized to sum 1. Constant targets grow no splits and fall
/// back to uniform scores.
inline ImportanceReport gini_importance(const TrainingSet& data, std::uint64_t seed) {
    data.validate();
    if (detail::constant_targets(data.y)) return detail::uniform_report(data.space, "gini");
    auto forest = detail::importance_forest(data, seed);
    auto counts = forest.split_counts();
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total == 0.0) return detail::uniform_report(data.space, "gini");
    std::vector<double> scores(counts.size());
    for (std::size_t d = 0; d < counts.size(); ++d)
        scores[d] = static_cast<double>(counts[d]) / total;
    return detail::make_report(data.space, "gini", scores);
}

// ---------------------------------------------------------------------------
// Lasso path

namespace detail {

struct LassoDesign {
    std::vector<std::vector<double>> cols;  // standardized feature columns
    std::vector<std::vector<std::size_t>> owners;  // knob indices per column
};

/// First- and second-degree design over unit-encoded knob columns: every
/// knob, its square, and all pairwise products. Columns are standardized;
/// zero-variance columns are kept at zero so they can never activate.
inline LassoDesign lasso_design(const TrainingSet& data) {
    const std::size_t m = data.space.size();
    auto layout = std::make_shared<EncodingLayout>(layout_for(data.space, EncodingScheme::unit));
    std::vector<std::vector<double>> U(data.X.size());
    for (std::size_t i = 0; i < data.X.size(); ++i)
        U[i] = encode(data.X[i], data.space, EncodingScheme::unit, layout).coords;

    LassoDesign design;
    const auto add_col = [&](std::vector<double> col, std::vector<std::size_t> owners) {
        design.cols.push_back(std::move(col));
        design.owners.push_back(std::move(owners));
    };
    const std::size_t n = data.X.size();
    for (std::size_t a = 0; a < m; ++a) {
        std::vector<double> lin(n), sq(n);
        for (std::size_t i = 0; i < n; ++i) {
            lin[i] = U[i][a];
            sq[i] = U[i][a] * U[i][a];
        }
        add_col(std::move(lin), {a});
        add_col(std::move(sq), {a});
    }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            std::vector<double> prod(n);
            for (std::size_t i = 0; i < n; ++i) prod[i] = U[i][a] * U[i][b];
            add_col(std::move(prod), {a, b});
        }

    for (auto& col : design.cols) {
        double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        if (var < 1e-24) {
            std::fill(col.begin(), col.end(), 0.0);
        } else {
            const double sd = std::sqrt(var);
            for (auto& v : col) v = (v - mean) / sd;
        }
    }
    return design;
}

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

} // namespace detail

/// Lasso-path importance over a second-degree polynomial design: coordinate
/// descent runs down a decreasing lambda path, and a knob's score reflects
/// how early any of its derived columns (linear, square, pairwise product)
/// first enters the active set. Never-active knobs score 0; an all-zero
/// target yields the uniform fallback.
inline ImportanceReport lasso_importance(const TrainingSet& data,
                                         std::vector<double> lambda_path = {}) {
    data.validate();
    const std::size_t m = data.space.size();
    const std::size_t n = data.X.size();
    if (detail::constant_targets(data.y)) return detail::uniform_report(data.space, "lasso");

    auto design = detail::lasso_design(data);
    const std::size_t p = design.cols.size();

    double y_mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
    double y_var = 0.0;
    for (double v : data.y) y_var += (v - y_mean) * (v - y_mean);
    y_var /= static_cast<double>(n);
    const double y_scale = y_var > 1e-24 ? std::sqrt(y_var) : 1.0;
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = (data.y[i] - y_mean) / y_scale;

    if (lambda_path.empty()) {
        double lambda_max = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += design.cols[j][i] * ys[i];
            lambda_max = std::max(lambda_max, std::abs(dot) / static_cast<double>(n));
        }
        if (lambda_max <= 0.0) return detail::uniform_report(data.space, "lasso");
        constexpr std::size_t kSteps = 50;
        const double decay = std::pow(1e-3, 1.0 / (kSteps - 1));
        double lambda = lambda_max * 0.999;  // just inside the all-zero boundary
        for (std::size_t k = 0; k < kSteps; ++k, lambda *= decay) lambda_path.push_back(lambda);
    }

    std::vector<double> beta(p, 0.0);
    std::vector<double> residual = ys;
    std::vector<std::optional<std::size_t>> activation(p);
    for (std::size_t step = 0; step < lambda_path.size(); ++step) {
        const double lambda = lambda_path[step];
        for (int sweep = 0; sweep < 200; ++sweep) {
            double max_delta = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const auto& col = design.cols[j];
                double rho = 0.0;
                for (std::size_t i = 0; i < n; ++i) rho += col[i] * residual[i];
                rho = rho / static_cast<double>(n) + beta[j];  // col variance is 1
                const double nb = detail::soft_threshold(rho, lambda);
                const double delta = nb - beta[j];
                if (delta != 0.0) {
                    for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * col[i];
                    beta[j] = nb;
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            if (max_delta < 1e-7) break;
        }
        for (std::size_t j = 0; j < p; ++j)
            if (!activation[j] && std::abs(beta[j]) > 1e-10) activation[j] = step;
    }

    std::vector<std::optional<std::size_t>> knob_activation(m);
    for (std::size_t j = 0; j < p; ++j) {
        if (!activation[j]) continue;
        for (std::size_t owner : design.owners[j])
            if (!knob_activation[owner] || *activation[j] < *knob_activation[owner])
                knob_activation[owner] = *activation[j];
    }
    bool any = false;
    std::vector<double> scores(m, 0.0);
    const auto steps = static_cast<double>(lambda_path.size());
    for (std::size_t d = 0; d < m; ++d) {
        if (knob_activation[d]) {
            scores[d] = (steps - static_cast<double>(*knob_activation[d])) / steps;
            any = true;
        }
    }
    if (!any) return detail::uniform_report(data.space, "lasso");
    return detail::make_report(data.space, "lasso", scores);
}

// ---------------------------------------------------------------------------
// fANOVA

namespace detail {

struct LeafBox {
    double value = 0.0;
    double weight = 0.0;                        // product of per-column fractions
    std::vector<double> frac;                   // per column
    std::vector<std::pair<double, double>> num; // numeric interval per column
    std::vector<std::vector<std::int64_t>> cat; // allowed categories per column
};

inline void collect_leaf_boxes(const ForestModel::Tree& tree, const ConfigSpace& space,
                               std::size_t node, LeafBox box, std::vector<LeafBox>& out) {
    const auto& n = tree[node];
    if (n.leaf) {
        box.value = n.value;
        box.weight = 1.0;
        box.frac.resize(space.size());
        for (std::size_t d = 0; d < space.size(); ++d) {
            const KnobSpec& k = space.knob(d);
            double f;
            if (k.kind == KnobKind::categorical) {
                f = static_cast<double>(box.cat[d].size()) /
                    static_cast<double>(k.num_categories());
            } else {
                const double len = std::max(box.num[d].second - box.num[d].first, 0.0);
                f = len / (k.upper - k.lower);
            }
            box.frac[d] = f;
            box.weight *= f;
        }
        if (box.weight > 0.0) out.push_back(std::move(box));
        return;
    }
    const std::size_t d = n.column;
    if (n.kind == ColumnKind::numeric) {
        LeafBox left = box;
        left.num[d].second = std::min(left.num[d].second, n.threshold);
        collect_leaf_boxes(tree, space, static_cast<std::size_t>(n.left), std::move(left), out);
        box.num[d].first = std::max(box.num[d].first, n.threshold);
        collect_leaf_boxes(tree, space, static_cast<std::size_t>(n.right), std::move(box), out);
    } else {
        LeafBox left = box;
        std::vector<std::int64_t> in, outcats;
        for (auto c : box.cat[d]) {
            if (std::find(n.left_categories.begin(), n.left_categories.end(), c) !=
                n.left_categories.end())
                in.push_back(c);
            else
                outcats.push_back(c);
        }
        left.cat[d] = std::move(in);
        collect_leaf_boxes(tree, space, static_cast<std::size_t>(n.left), std::move(left), out);
        box.cat[d] = std::move(outcats);
        collect_leaf_boxes(tree, space, static_cast<std::size_t>(n.right), std::move(box), out);
    }
}

} // namespace detail

/// First-order variance fractions under the uniform product measure over the
/// space. Each tree is integrated exactly over its leaf partition: the
/// marginal of one knob is piecewise constant between that tree's split
/// thresholds, so segment sums give the knob's marginal variance; dividing by
/// the tree's total variance and averaging over trees yields the fraction.
/// First-order fractions are nonnegative and sum to at most 1 per tree.
inline ImportanceReport fanova_importance(const TrainingSet& data, std::uint64_t seed) {
    data.validate();
    if (detail::constant_targets(data.y)) return detail::uniform_report(data.space, "fanova");
    const ConfigSpace& space = data.space;
    const std::size_t m = space.size();
    ForestParams params;
    params.n_trees = 32;
    params.min_samples_leaf = 2;
    auto forest = detail::importance_forest(data, seed, params);

    std::vector<double> fraction_sum(m, 0.0);
    std::size_t informative_trees = 0;
    for (const auto& tree : forest.trees()) {
        detail::LeafBox root;
        root.num.resize(m);
        root.cat.resize(m);
        for (std::size_t d = 0; d < m; ++d) {
            const KnobSpec& k = space.knob(d);
            if (k.kind == KnobKind::categorical) {
                for (std::size_t c = 0; c < k.num_categories(); ++c)
                    root.cat[d].push_back(static_cast<std::int64_t>(c));
            } else {
                root.num[d] = {k.lower, k.upper};
            }
        }
        std::vector<detail::LeafBox> leaves;
        detail::collect_leaf_boxes(tree, space, 0, root, leaves);

        double ef = 0.0, ef2 = 0.0;
        for (const auto& leaf : leaves) {
            ef += leaf.value * leaf.weight;
            ef2 += leaf.value * leaf.value * leaf.weight;
        }
        const double total_var = ef2 - ef * ef;
        if (total_var < 1e-24) continue;
        ++informative_trees;

        for (std::size_t d = 0; d < m; ++d) {
            const KnobSpec& k = space.knob(d);
            double var_d = 0.0;
            if (k.kind == KnobKind::categorical) {
                const std::size_t kc = k.num_categories();
                std::vector<double> marginal(kc, 0.0);
                for (const auto& leaf : leaves) {
                    if (leaf.frac[d] <= 0.0) continue;
                    const double w_rest = leaf.weight / leaf.frac[d];
                    for (auto c : leaf.cat[d])
                        marginal[static_cast<std::size_t>(c)] += leaf.value * w_rest;
                }
                double mu = 0.0;
                for (double v : marginal) mu += v / static_cast<double>(kc);
                for (double v : marginal)
                    var_d += (v - mu) * (v - mu) / static_cast<double>(kc);
            } else {
                // Segment boundaries: this tree's thresholds on column d.
                std::vector<double> bounds{k.lower, k.upper};
                for (const auto& node : tree)
                    if (!node.leaf && node.column == d && node.kind == ColumnKind::numeric &&
                        node.threshold > k.lower && node.threshold < k.upper)
                        bounds.push_back(node.threshold);
                std::sort(bounds.begin(), bounds.end());
                bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
                const std::size_t s_count = bounds.size() - 1;
                std::vector<double> diff(s_count + 1, 0.0);
                for (const auto& leaf : leaves) {
                    if (leaf.frac[d] <= 0.0) continue;
                    const double w_rest = leaf.weight / leaf.frac[d];
                    const auto lo = static_cast<std::size_t>(
                        std::lower_bound(bounds.begin(), bounds.end(), leaf.num[d].first) -
                        bounds.begin());
                    const auto hi = static_cast<std::size_t>(
                        std::lower_bound(bounds.begin(), bounds.end(), leaf.num[d].second) -
                        bounds.begin());
                    // Leaf interval [bounds[lo], bounds[hi]] covers segments lo..hi-1.
                    diff[lo] += leaf.value * w_rest;
                    diff[hi] -= leaf.value * w_rest;
                }
                double mu = 0.0, acc = 0.0;
                std::vector<double> marginal(s_count);
                for (std::size_t s = 0; s < s_count; ++s) {
                    acc += diff[s];
                    marginal[s] = acc;
                    mu += acc * (bounds[s + 1] - bounds[s]) / (k.upper - k.lower);
                }
                for (std::size_t s = 0; s < s_count; ++s) {
                    const double w = (bounds[s + 1] - bounds[s]) / (k.upper - k.lower);
                    var_d += w * (marginal[s] - mu) * (marginal[s] - mu);
                }
            }
            fraction_sum[d] += var_d / total_var;
        }
    }
    if (informative_trees == 0) return detail::uniform_report(data.space, "fanova");
    std::vector<double> scores(m);
    for (std::size_t d = 0; d < m; ++d)
        scores[d] = fraction_sum[d] / static_cast<double>(informative_trees);
    return detail::make_report(space, "fanova", scores);
}

// ---------------------------------------------------------------------------
// Ablation paths

/// Greedy ablation from the default configuration toward each
/// better-than-default target, using a forest fit as the evaluation proxy.
/// Each step applies the single remaining knob change with the best predicted
/// objective; a knob's score is its mean inverse path rank, with knobs absent
/// from a path sharing the worst rank m.
inline ImportanceReport ablation_importance(const TrainingSet& data, std::uint64_t seed) {
    data.validate();
    const ConfigSpace& space = data.space;
    const std::size_t m = space.size();
    auto forest = detail::importance_forest(data, seed);
    auto layout = std::make_shared<EncodingLayout>(layout_for(space, EncodingScheme::raw));
    const auto predict = [&](const Configuration& c) {
        return forest.predict(encode(c, space, EncodingScheme::raw, layout).coords).first;
    };

    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < data.X.size(); ++i)
        if (is_better(data.y[i], data.default_value, data.sense)) targets.push_back(i);
    if (targets.empty())
        throw ValidationError("ablation: no observation beats the default configuration");

    std::vector<double> score_sum(m, 0.0);
    for (std::size_t t : targets) {
        const Configuration& target = data.X[t];
        std::vector<std::size_t> remaining;
        for (std::size_t d = 0; d < m; ++d)
            if (!(target.values[d] == data.default_config.values[d])) remaining.push_back(d);

        Configuration current = data.default_config;
        std::size_t rank = 1;
        std::vector<std::size_t> rank_of(m, 0);  // 0 = absent
        while (!remaining.empty()) {
            std::size_t best_idx = 0;
            double best_pred = 0.0;
            for (std::size_t i = 0; i < remaining.size(); ++i) {
                Configuration candidate = current;
                candidate.values[remaining[i]] = target.values[remaining[i]];
                const double p = predict(candidate);
                if (i == 0 || is_better(p, best_pred, data.sense)) {
                    best_pred = p;
                    best_idx = i;
                }
            }
            const std::size_t knob = remaining[best_idx];
            rank_of[knob] = rank++;
            current.values[knob] = target.values[knob];
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_idx));
        }
        for (std::size_t d = 0; d < m; ++d) {
            const std::size_t r = rank_of[d] == 0 ? m : rank_of[d];
            score_sum[d] += 1.0 / static_cast<double>(r);
        }
    }
    std::vector<double> scores(m);
    for (std::size_t d = 0; d < m; ++d)
        scores[d] = score_sum[d] / static_cast<double>(targets.size());
    return detail::make_report(space, "ablation", scores);
}

// ---------------------------------------------------------------------------
// Shapley tunability

namespace detail {

/// Shapley values of prediction(config mixed from theta/default) for one
/// observation. Exact subset enumeration; m must stay small.
inline std::vector<double> shapley_exact(const ForestModel& forest,
                                         const std::vector<double>& default_raw,
                                         const std::vector<double>& theta_raw) {
    const std::size_t m = default_raw.size();
    const std::size_t full = std::size_t{1} << m;
    std::vector<double> value(full);
    std::vector<double> q(m);
    for (std::size_t mask = 0; mask < full; ++mask) {
        for (std::size_t d = 0; d < m; ++d)
            q[d] = (mask >> d) & 1 ? theta_raw[d] : default_raw[d];
        value[mask] = forest.predict(q).first;
    }
    // weight[s] = s! (m-1-s)! / m!
    std::vector<double> weight(m);
    for (std::size_t s = 0; s < m; ++s) {
        double w = 1.0;
        for (std::size_t i = 1; i <= s; ++i) w *= static_cast<double>(i);
        for (std::size_t i = 1; i <= m - 1 - s; ++i) w *= static_cast<double>(i);
        for (std::size_t i = 1; i <= m; ++i) w /= static_cast<double>(i);
        weight[s] = w;
    }
    std::vector<double> phi(m, 0.0);
    for (std::size_t mask = 0; mask < full; ++mask) {
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        for (std::size_t d = 0; d < m; ++d) {
            if ((mask >> d) & 1) continue;
            phi[d] += weight[size] * (value[mask | (std::size_t{1} << d)] - value[mask]);
        }
    }
    return phi;
}

/// Permutation-sampling estimate of the same Shapley values.
inline std::vector<double> shapley_sampled(const ForestModel& forest,
                                           const std::vector<double>& default_raw,
                                           const std::vector<double>& theta_raw, Rng& rng,
                                           std::size_t permutations) {
    const std::size_t m = default_raw.size();
    std::vector<double> phi(m, 0.0);
    std::vector<double> q(m);
    for (std::size_t p = 0; p < permutations; ++p) {
        auto order = rng.permutation(m);
        q = default_raw;
        double prev = forest.predict(q).first;
        for (std::size_t d : order) {
            q[d] = theta_raw[d];
            const double cur = forest.predict(q).first;
            phi[d] += cur - prev;
            prev = cur;
        }
    }
    for (auto& v : phi) v /= static_cast<double>(permutations);
    return phi;
}

} // namespace detail

/// Shapley-based tunability: per observation, how much each knob's move away
/// from the default contributes to the predicted change, credited only when
/// the contribution improves on the default (better = positive under the
/// sense). Exact enumeration up to 12 knobs, 200-permutation sampling beyond.
inline ImportanceReport shap_importance(const TrainingSet& data, std::uint64_t seed) {
    data.validate();
    const ConfigSpace& space = data.space;
    const std::size_t m = space.size();
    auto forest = detail::importance_forest(data, seed);
    auto layout = std::make_shared<EncodingLayout>(layout_for(space, EncodingScheme::raw));
    const auto raw = [&](const Configuration& c) {
        return encode(c, space, EncodingScheme::raw, layout).coords;
    };
    const auto default_raw = raw(data.default_config);

    std::vector<double> positive_sum(m, 0.0);
    Rng rng = Rng::derive(seed, 0x5AAB);
    for (std::size_t i = 0; i < data.X.size(); ++i) {
        const auto theta_raw = raw(data.X[i]);
        const auto phi = m <= 12
                             ? detail::shapley_exact(forest, default_raw, theta_raw)
                             : detail::shapley_sampled(forest, default_raw, theta_raw, rng, 200);
        for (std::size_t d = 0; d < m; ++d) {
            const double oriented = data.sense == Sense::maximize ? phi[d] : -phi[d];
            positive_sum[d] += std::max(oriented, 0.0);
        }
    }
    std::vector<double> scores(m);
    for (std::size_t d = 0; d < m; ++d)
        scores[d] = positive_sum[d] / static_cast<double>(data.X.size());
    return detail::make_report(space, "shap", scores);
}

/// Shapley values for one observation, exposed for property checks.
inline std::vector<double> shapley_values(const TrainingSet& data, const ForestModel& forest,
                                          const Configuration& config) {
    auto layout = std::make_shared<EncodingLayout>(layout_for(data.space, EncodingScheme::raw));
    const auto default_raw =
        encode(data.default_config, data.space, EncodingScheme::raw, layout).coords;
    const auto theta_raw = encode(config, data.space, EncodingScheme::raw, layout).coords;
    return detail::shapley_exact(forest, default_raw, theta_raw);
}

// ---------------------------------------------------------------------------
// Dispatch, ranking utilities, schedules

inline ImportanceReport compute_importance(const std::string& method, const TrainingSet& data,
                                           std::uint64_t seed) {
    if (method == "gini") return gini_importance(data, seed);
    if (method == "lasso") return lasso_importance(data);
    if (method == "fanova") return fanova_importance(data, seed);
    if (method == "ablation") return ablation_importance(data, seed);
    if (method == "shap") return shap_importance(data, seed);
    throw ValidationError("unknown importance method '" + method + "'");
}

inline std::vector<std::string> topk(const ImportanceReport& report, std::size_t k) {
    if (k < 1 || k > report.ranking.size())
        throw ValidationError("topk: k must be in [1, " + std::to_string(report.ranking.size()) +
                              "]");
    return {report.ranking.begin(), report.ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

/// Intersection-over-union of two knob sets; two empty sets count as equal.
inline double iou_topk(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& x : sa)
        if (sb.count(x)) ++inter;
    const std::size_t uni = sa.size() + sb.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

enum class ScheduleKind { increase, decrease };

/// Active knob count at an iteration: the increasing schedule starts at the
/// top four knobs and adds two every four iterations; the decreasing schedule
/// drops to 60% (rounded up) every 20 iterations, never below one knob.
inline std::size_t incremental_schedule(ScheduleKind kind, std::size_t total_knobs,
                                        std::size_t iteration) {
    if (total_knobs < 1) throw ValidationError("incremental_schedule: no knobs");
    if (kind == ScheduleKind::increase) {
        return std::min(total_knobs, 4 + 2 * (iteration / 4));
    }
    const auto shrinks = static_cast<double>(iteration / 20);
    const double count = std::ceil(static_cast<double>(total_knobs) * std::pow(0.6, shrinks));
    return std::max<std::size_t>(1, static_cast<std::size_t>(count));
}

// ---------------------------------------------------------------------------
// Training data files

/// Load a training CSV: header = knob names + "performance" (+ optional
/// "status"; failed rows are dropped). The baseline pair comes from the row
/// matching the space default when present, else the mean performance with
/// the space default configuration.
inline TrainingSet load_training_set(const ConfigSpace& space, const CsvTable& table,
                                     Sense sense = Sense::minimize,
                                     std::optional<double> default_value_override = std::nullopt) {
    TrainingSet data;
    data.space = space;
    data.sense = sense;
    data.default_config = space.default_configuration();

    const std::size_t perf_col = table.column("performance");
    std::optional<std::size_t> status_col;
    if (table.has_column("status")) status_col = table.column("status");
    std::vector<std::size_t> knob_cols;
    for (const auto& k : space.knobs()) knob_cols.push_back(table.column(k.name));

    for (const auto& row : table.rows) {
        if (status_col && row[*status_col] != "ok") continue;
        Configuration c;
        c.values.reserve(space.size());
        for (std::size_t d = 0; d < space.size(); ++d) {
            const KnobSpec& k = space.knob(d);
            const std::string& cell = row[knob_cols[d]];
            switch (k.kind) {
                case KnobKind::continuous: c.values.push_back(parse_double(cell)); break;
                case KnobKind::integer:
                    c.values.push_back(static_cast<std::int64_t>(std::llround(parse_double(cell))));
                    break;
                case KnobKind::categorical: c.values.push_back(cell); break;
            }
        }
        space.validate(c);
        data.X.push_back(std::move(c));
        data.y.push_back(parse_double(row[perf_col]));
    }
    if (data.X.size() < 2)
        throw ValidationError("training data: fewer than 2 usable rows");

    if (default_value_override) {
        data.default_value = *default_value_override;
    } else {
        bool found = false;
        for (std::size_t i = 0; i < data.X.size(); ++i) {
            if (data.X[i] == data.default_config) {
                data.default_value = data.y[i];
                found = true;
                break;
            }
        }
        if (!found) {
            data.default_value = std::accumulate(data.y.begin(), data.y.end(), 0.0) /
                                 static_cast<double>(data.y.size());
        }
    }
    data.validate();
    return data;
}

} // namespace knobkit
