#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "knobkit/error.hpp"
#include "knobkit/rng.hpp"

namespace knobkit {

enum class ColumnKind { numeric, categorical };

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;        // 0 = unlimited
    std::size_t min_samples_leaf = 1;
    double feature_fraction = 5.0 / 6.0;
    bool bootstrap = true;
};

/// Random forest regressor over raw-encoded rows. Categorical columns hold
/// category indices and split by subset membership; numeric columns split on
/// thresholds. Per-tree predictions supply the ensemble mean and variance.
class ForestModel {
public:
    struct Node {
        bool leaf = true;
        double value = 0.0;              // leaf mean (standardized units)
        std::size_t column = 0;
        ColumnKind kind = ColumnKind::numeric;
        double threshold = 0.0;          // numeric: x <= threshold goes left
        std::vector<std::int64_t> left_categories;  // categorical: members go left
        std::int64_t left = -1;
        std::int64_t right = -1;
    };
    using Tree = std::vector<Node>;

    ForestModel() = default;

    static ForestModel fit(const std::vector<std::vector<double>>& X,
                           const std::vector<double>& y,
                           const std::vector<ColumnKind>& kinds, ForestParams params,
                           std::uint64_t seed) {
        if (X.size() != y.size()) throw ValidationError("rf_fit: |X| != |y|");
        if (X.size() < 2) throw ValidationError("rf_fit: need at least 2 points");
        const std::size_t dim = X[0].size();
        for (const auto& row : X)
            if (row.size() != dim) throw ValidationError("rf_fit: ragged matrix");
        if (!kinds.empty() && kinds.size() != dim)
            throw ValidationError("rf_fit: column kind count mismatch");
        if (params.n_trees < 1) throw ValidationError("rf_fit: need at least 1 tree");

        ForestModel m;
        m.params_ = params;
        m.kinds_ = kinds.empty() ? std::vector<ColumnKind>(dim, ColumnKind::numeric) : kinds;
        m.dim_ = dim;

        const std::size_t n = X.size();
        double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        m.y_mean_ = mean;
        m.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
        std::vector<double> ys(n);
        for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - m.y_mean_) / m.y_scale_;

        m.trees_.reserve(params.n_trees);
        for (std::size_t t = 0; t < params.n_trees; ++t) {
            Rng rng = Rng::derive(seed, 0xF0 + t);
            std::vector<std::size_t> rows(n);
            if (params.bootstrap) {
                for (auto& r : rows) r = rng.index(n);
            } else {
                std::iota(rows.begin(), rows.end(), std::size_t{0});
            }
            Tree tree;
            m.grow(tree, X, ys, rows, 0, rng);
            m.trees_.push_back(std::move(tree));
        }
        return m;
    }

    std::pair<double, double> predict(std::span<const double> q) const {
        if (trees_.empty()) throw ValidationError("rf_predict: model not fitted");
        if (q.size() != dim_) throw ValidationError("rf_predict: query length mismatch");
        const auto preds = tree_predictions(q);
        const auto t = static_cast<double>(preds.size());
        double mean = 0.0;
        for (double p : preds) mean += p;
        mean /= t;
        double var = 0.0;
        for (double p : preds) var += (p - mean) * (p - mean);
        var /= t;
        return {mean, var};
    }

    /// Raw per-tree predictions (de-standardized), for brute-force checks.
    std::vector<double> tree_predictions(std::span<const double> q) const {
        std::vector<double> out;
        out.reserve(trees_.size());
        for (const auto& tree : trees_)
            out.push_back(y_mean_ + y_scale_ * tree_value(tree, q));
        return out;
    }

    const std::vector<Tree>& trees() const { return trees_; }
    const std::vector<ColumnKind>& column_kinds() const { return kinds_; }
    std::size_t dim() const { return dim_; }
    double target_mean() const { return y_mean_; }
    double target_scale() const { return y_scale_; }

    /// Count of internal splits per column across all trees.
    std::vector<std::size_t> split_counts() const {
        std::vector<std::size_t> counts(dim_, 0);
        for (const auto& tree : trees_)
            for (const auto& node : tree)
                if (!node.leaf) counts[node.column]++;
        return counts;
    }

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["n_trees"] = params_.n_trees;
        doc["max_depth"] = params_.max_depth;
        doc["min_samples_leaf"] = params_.min_samples_leaf;
        doc["feature_fraction"] = params_.feature_fraction;
        doc["bootstrap"] = params_.bootstrap;
        doc["y_mean"] = y_mean_;
        doc["y_scale"] = y_scale_;
        doc["dim"] = dim_;
        doc["column_kinds"] = nlohmann::json::array();
        for (auto k : kinds_)
            doc["column_kinds"].push_back(k == ColumnKind::numeric ? "numeric" : "categorical");
        doc["trees"] = nlohmann::json::array();
        for (const auto& tree : trees_) {
            nlohmann::json jt = nlohmann::json::array();
            for (const auto& n : tree) {
                nlohmann::json jn;
                if (n.leaf) {
                    jn["value"] = n.value;
                } else {
                    jn["column"] = n.column;
                    jn["kind"] = n.kind == ColumnKind::numeric ? "numeric" : "categorical";
                    if (n.kind == ColumnKind::numeric)
                        jn["threshold"] = n.threshold;
                    else
                        jn["left_categories"] = n.left_categories;
                    jn["left"] = n.left;
                    jn["right"] = n.right;
                }
                jt.push_back(std::move(jn));
            }
            doc["trees"].push_back(std::move(jt));
        }
        return doc;
    }

    static ForestModel from_json(const nlohmann::json& doc) {
        ForestModel m;
        try {
            m.params_.n_trees = doc.at("n_trees").get<std::size_t>();
            m.params_.max_depth = doc.at("max_depth").get<std::size_t>();
            m.params_.min_samples_leaf = doc.at("min_samples_leaf").get<std::size_t>();
            m.params_.feature_fraction = doc.at("feature_fraction").get<double>();
            m.params_.bootstrap = doc.at("bootstrap").get<bool>();
            m.y_mean_ = doc.at("y_mean").get<double>();
            m.y_scale_ = doc.at("y_scale").get<double>();
            m.dim_ = doc.at("dim").get<std::size_t>();
            for (const auto& jk : doc.at("column_kinds"))
                m.kinds_.push_back(jk.get<std::string>() == "numeric" ? ColumnKind::numeric
                                                                      : ColumnKind::categorical);
            for (const auto& jt : doc.at("trees")) {
                Tree tree;
                for (const auto& jn : jt) {
                    Node n;
                    if (jn.contains("value")) {
                        n.leaf = true;
                        n.value = jn.at("value").get<double>();
                    } else {
                        n.leaf = false;
                        n.column = jn.at("column").get<std::size_t>();
                        n.kind = jn.at("kind").get<std::string>() == "numeric"
                                     ? ColumnKind::numeric
                                     : ColumnKind::categorical;
                        if (n.kind == ColumnKind::numeric)
                            n.threshold = jn.at("threshold").get<double>();
                        else
                            n.left_categories =
                                jn.at("left_categories").get<std::vector<std::int64_t>>();
                        n.left = jn.at("left").get<std::int64_t>();
                        n.right = jn.at("right").get<std::int64_t>();
                    }
                    tree.push_back(std::move(n));
                }
                m.trees_.push_back(std::move(tree));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("forest document malformed: ") + e.what());
        }
        if (m.kinds_.size() != m.dim_)
            throw ValidationError("forest document malformed: column kind count mismatch");
        return m;
    }

private:
    static double tree_value(const Tree& tree, std::span<const double> q) {
        std::size_t idx = 0;
        while (!tree[idx].leaf) {
            const Node& n = tree[idx];
            bool go_left;
            if (n.kind == ColumnKind::numeric) {
                go_left = q[n.column] <= n.threshold;
            } else {
                const auto c = static_cast<std::int64_t>(std::llround(q[n.column]));
                go_left = std::find(n.left_categories.begin(), n.left_categories.end(), c) !=
                          n.left_categories.end();
            }
            idx = static_cast<std::size_t>(go_left ? n.left : n.right);
        }
        return tree[idx].value;
    }

    struct Split {
        bool found = false;
        std::size_t column = 0;
        double threshold = 0.0;
        std::vector<std::int64_t> left_categories;
        double score = std::numeric_limits<double>::infinity();  // weighted child SSE
    };

    std::int64_t grow(Tree& tree, const std::vector<std::vector<double>>& X,
                      const std::vector<double>& ys, const std::vector<std::size_t>& rows,
                      std::size_t depth, Rng& rng) const {
        double mean = 0.0;
        for (auto r : rows) mean += ys[r];
        mean /= static_cast<double>(rows.size());

        const auto make_leaf = [&]() {
            Node n;
            n.leaf = true;
            n.value = mean;
            tree.push_back(std::move(n));
            return static_cast<std::int64_t>(tree.size() - 1);
        };

        if (rows.size() < 2 * params_.min_samples_leaf || rows.size() < 2) return make_leaf();
        if (params_.max_depth != 0 && depth >= params_.max_depth) return make_leaf();

        bool constant = true;
        for (auto r : rows)
            if (ys[r] != ys[rows[0]]) {
                constant = false;
                break;
            }
        if (constant) return make_leaf();

        // Feature subsampling per split, SMAC style.
        std::vector<std::size_t> features(dim_);
        std::iota(features.begin(), features.end(), std::size_t{0});
        auto n_feat = static_cast<std::size_t>(
            std::ceil(params_.feature_fraction * static_cast<double>(dim_)));
        n_feat = std::clamp<std::size_t>(n_feat, 1, dim_);
        rng.shuffle(features);
        features.resize(n_feat);
        std::sort(features.begin(), features.end());

        Split best;
        for (std::size_t col : features) {
            if (kinds_[col] == ColumnKind::numeric) {
                consider_numeric(X, ys, rows, col, best);
            } else {
                consider_categorical(X, ys, rows, col, best);
            }
        }
        if (!best.found) return make_leaf();

        std::vector<std::size_t> left_rows, right_rows;
        for (auto r : rows) {
            bool go_left;
            if (kinds_[best.column] == ColumnKind::numeric) {
                go_left = X[r][best.column] <= best.threshold;
            } else {
                const auto c = static_cast<std::int64_t>(std::llround(X[r][best.column]));
                go_left = std::find(best.left_categories.begin(), best.left_categories.end(), c) !=
                          best.left_categories.end();
            }
            (go_left ? left_rows : right_rows).push_back(r);
        }
        if (left_rows.empty() || right_rows.empty()) return make_leaf();

        Node n;
        n.leaf = false;
        n.column = best.column;
        n.kind = kinds_[best.column];
        n.threshold = best.threshold;
        n.left_categories = best.left_categories;
        tree.push_back(std::move(n));
        const auto self = static_cast<std::int64_t>(tree.size() - 1);
        const auto l = grow(tree, X, ys, left_rows, depth + 1, rng);
        const auto r = grow(tree, X, ys, right_rows, depth + 1, rng);
        tree[static_cast<std::size_t>(self)].left = l;
        tree[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    void consider_numeric(const std::vector<std::vector<double>>& X, const std::vector<double>& ys,
                          const std::vector<std::size_t>& rows, std::size_t col,
                          Split& best) const {
        std::vector<std::pair<double, double>> vals;  // (x, y)
        vals.reserve(rows.size());
        for (auto r : rows) vals.emplace_back(X[r][col], ys[r]);
        std::sort(vals.begin(), vals.end());
        double right_sum = 0.0, right_sq = 0.0;
        for (const auto& [x, v] : vals) {
            right_sum += v;
            right_sq += v * v;
        }
        double left_sum = 0.0, left_sq = 0.0;
        const std::size_t n = vals.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double v = vals[i].second;
            left_sum += v;
            left_sq += v * v;
            right_sum -= v;
            right_sq -= v * v;
            if (vals[i].first == vals[i + 1].first) continue;  // no threshold between equal x
            const std::size_t nl = i + 1, nr = n - nl;
            if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
            const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                               (right_sq - right_sum * right_sum / static_cast<double>(nr));
            if (sse < best.score) {
                best.found = true;
                best.score = sse;
                best.column = col;
                best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                best.left_categories.clear();
            }
        }
    }

    // Categories ordered by mean target, then scanned like a numeric split;
    // optimal for variance reduction without enumerating subsets.
    void consider_categorical(const std::vector<std::vector<double>>& X,
                              const std::vector<double>& ys,
                              const std::vector<std::size_t>& rows, std::size_t col,
                              Split& best) const {
        struct CatStat {
            std::int64_t cat;
            double sum = 0.0, sq = 0.0;
            std::size_t n = 0;
        };
        std::vector<CatStat> stats;
        for (auto r : rows) {
            const auto c = static_cast<std::int64_t>(std::llround(X[r][col]));
            auto it = std::find_if(stats.begin(), stats.end(),
                                   [c](const CatStat& s) { return s.cat == c; });
            if (it == stats.end()) {
                stats.push_back({c, 0.0, 0.0, 0});
                it = std::prev(stats.end());
            }
            it->sum += ys[r];
            it->sq += ys[r] * ys[r];
            it->n++;
        }
        if (stats.size() < 2) return;
        std::sort(stats.begin(), stats.end(), [](const CatStat& a, const CatStat& b) {
            const double ma = a.sum / static_cast<double>(a.n);
            const double mb = b.sum / static_cast<double>(b.n);
            if (ma != mb) return ma < mb;
            return a.cat < b.cat;
        });
        double right_sum = 0.0, right_sq = 0.0;
        std::size_t right_n = 0;
        for (const auto& s : stats) {
            right_sum += s.sum;
            right_sq += s.sq;
            right_n += s.n;
        }
        double left_sum = 0.0, left_sq = 0.0;
        std::size_t left_n = 0;
        for (std::size_t i = 0; i + 1 < stats.size(); ++i) {
            left_sum += stats[i].sum;
            left_sq += stats[i].sq;
            left_n += stats[i].n;
            right_sum -= stats[i].sum;
            right_sq -= stats[i].sq;
            right_n -= stats[i].n;
            if (left_n < params_.min_samples_leaf || right_n < params_.min_samples_leaf) continue;
            const double sse = (left_sq - left_sum * left_sum / static_cast<double>(left_n)) +
                               (right_sq - right_sum * right_sum / static_cast<double>(right_n));
            if (sse < best.score) {
                best.found = true;
                best.score = sse;
                best.column = col;
                best.threshold = 0.0;
                best.left_categories.clear();
                for (std::size_t j = 0; j <= i; ++j) best.left_categories.push_back(stats[j].cat);
            }
        }
    }

    ForestParams params_;
    std::vector<ColumnKind> kinds_;
    std::size_t dim_ = 0;
    std::vector<Tree> trees_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
};

inline ForestModel rf_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                          const std::vector<ColumnKind>& kinds = {}, ForestParams params = {},
                          std::uint64_t seed = 0) {
    return ForestModel::fit(X, y, kinds, params, seed);
}

inline std::pair<double, double> rf_predict(const ForestModel& m, std::span<const double> q) {
    return m.predict(q);
}

} // namespace knobkit
