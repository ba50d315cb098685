#pragma once

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <json.hpp>

#include "knobkit/csv.hpp"
#include "knobkit/error.hpp"
#include "knobkit/forest.hpp"
#include "knobkit/history.hpp"
#include "knobkit/importance.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/session.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

// ---------------------------------------------------------------------------
// Benchmark artifact

/// A frozen surrogate tuning benchmark: forest predictions stand in for the
/// expensive objective, so optimizer tournaments run in seconds per session.
struct TuningBenchmark {
    ConfigSpace space;
    ForestModel surrogate;
    Sense sense = Sense::minimize;
    Configuration default_config;
    double default_value = 0.0;  // surrogate prediction at default, at build time
    nlohmann::json provenance;

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["space"] = space_to_json(space);
        doc["forest"] = surrogate.to_json();
        doc["sense"] = to_string(sense);
        doc["default_config"] = config_to_json(default_config, space);
        doc["default_value"] = default_value;
        doc["provenance"] = provenance;
        return doc;
    }

    static TuningBenchmark from_json(const nlohmann::json& doc) {
        TuningBenchmark b;
        try {
            b.space = parse_space(doc.at("space"));
            b.surrogate = ForestModel::from_json(doc.at("forest"));
            b.sense = sense_from_string(doc.at("sense").get<std::string>());
            b.default_config = config_from_json(doc.at("default_config"), b.space);
            b.default_value = doc.at("default_value").get<double>();
            b.provenance = doc.value("provenance", nlohmann::json::object());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("benchmark document: ") + e.what());
        }
        if (b.surrogate.dim() != b.space.size())
            throw ValidationError("benchmark document: surrogate dimension mismatch");
        return b;
    }
};

inline void save_benchmark(const std::filesystem::path& path, const TuningBenchmark& bench) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << bench.to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline TuningBenchmark load_benchmark(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return TuningBenchmark::from_json(doc);
}

/// Surrogate prediction for one configuration. Pure and deterministic.
inline double bench_evaluate(const TuningBenchmark& bench, const Configuration& config) {
    bench.space.validate(config);
    auto layout = std::make_shared<EncodingLayout>(layout_for(bench.space, EncodingScheme::raw));
    return bench.surrogate.predict(encode(config, bench.space, EncodingScheme::raw, layout).coords)
        .first;
}

// ---------------------------------------------------------------------------
// Dataset assembly

namespace detail {

inline Configuration config_from_csv_row(const ConfigSpace& space,
                                         const std::vector<std::string>& row,
                                         const std::vector<std::size_t>& knob_cols) {
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
    return c;
}

/// Canonical duplicate-detection key: parsed values reformatted, so textual
/// variants of the same configuration collide.
inline std::string config_key(const ConfigSpace& space, const Configuration& c) {
    std::string key;
    for (std::size_t d = 0; d < space.size(); ++d) {
        const KnobSpec& k = space.knob(d);
        switch (k.kind) {
            case KnobKind::continuous: key += format_double(std::get<double>(c.values[d])); break;
            case KnobKind::integer: key += std::to_string(std::get<std::int64_t>(c.values[d])); break;
            case KnobKind::categorical: key += std::get<std::string>(c.values[d]); break;
        }
        key += '\x1f';
    }
    return key;
}

} // namespace detail

/// Concatenate observation tables (optimizer trajectories, LHS sweeps) into
/// one training set: failed rows are dropped, exact configuration duplicates
/// keep their first occurrence. Tables may name the objective column "value"
/// or "performance"; iteration/best_so_far columns are ignored. log_y applies
/// a natural-log transform per row (heavy-tailed latencies); every usable
/// value must then be positive. The default value is resolved after the
/// transform, so the mean fallback is a mean of logs.
inline TrainingSet assemble_dataset(const ConfigSpace& space, const std::vector<CsvTable>& tables,
                                    Sense sense = Sense::minimize, bool log_y = false) {
    TrainingSet data;
    data.space = space;
    data.sense = sense;
    data.default_config = space.default_configuration();

    std::unordered_set<std::string> seen;
    for (const auto& table : tables) {
        std::size_t value_col = 0;
        if (table.has_column("value"))
            value_col = table.column("value");
        else if (table.has_column("performance"))
            value_col = table.column("performance");
        else
            throw ValidationError("dataset table: no value or performance column");
        std::optional<std::size_t> status_col;
        if (table.has_column("status")) status_col = table.column("status");
        std::vector<std::size_t> knob_cols;
        for (const auto& k : space.knobs()) knob_cols.push_back(table.column(k.name));

        for (const auto& row : table.rows) {
            if (status_col && row[*status_col] != "ok") continue;
            auto config = detail::config_from_csv_row(space, row, knob_cols);
            if (!seen.insert(detail::config_key(space, config)).second) continue;
            double v = parse_double(row[value_col]);
            if (log_y) {
                if (!(v > 0.0))
                    throw ValidationError("dataset: log transform needs positive values, got " +
                                          format_double(v));
                v = std::log(v);
            }
            data.y.push_back(v);
            data.X.push_back(std::move(config));
        }
    }
    if (data.X.size() < 2) throw ValidationError("dataset: fewer than 2 usable rows");

    data.default_value = std::accumulate(data.y.begin(), data.y.end(), 0.0) /
                         static_cast<double>(data.y.size());
    for (std::size_t i = 0; i < data.X.size(); ++i) {
        if (data.X[i] == data.default_config) {
            data.default_value = data.y[i];
            break;
        }
    }
    data.validate();
    return data;
}

// ---------------------------------------------------------------------------
// Model selection

struct ModelScore {
    std::string name;
    double rmse = 0.0;
    double r2 = 0.0;
    nlohmann::json params;
};

struct ModelSelection {
    std::vector<ModelScore> table;  // rf, knn, ridge
    std::string winner;
};

namespace detail {

struct CvSplit {
    std::vector<std::vector<std::size_t>> folds;
};

inline CvSplit make_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
    CvSplit split;
    split.folds.resize(folds);
    const auto perm = Rng::derive(seed, 0xCF0).permutation(n);
    for (std::size_t i = 0; i < n; ++i) split.folds[i % folds].push_back(perm[i]);
    return split;
}

/// Mean RMSE and R2 over folds for one train/predict recipe.
template <typename FitPredict>
std::pair<double, double> cross_validate(const std::vector<std::vector<double>>& X,
                                         const std::vector<double>& y, const CvSplit& split,
                                         FitPredict&& fit_predict) {
    double rmse_sum = 0.0, r2_sum = 0.0;
    for (const auto& test : split.folds) {
        std::vector<std::size_t> train;
        for (const auto& fold : split.folds)
            if (&fold != &test) train.insert(train.end(), fold.begin(), fold.end());
        const auto preds = fit_predict(train, test);

        double test_mean = 0.0;
        for (auto i : test) test_mean += y[i];
        test_mean /= static_cast<double>(test.size());
        double ss_res = 0.0, ss_tot = 0.0;
        for (std::size_t j = 0; j < test.size(); ++j) {
            const double err = preds[j] - y[test[j]];
            ss_res += err * err;
            ss_tot += (y[test[j]] - test_mean) * (y[test[j]] - test_mean);
        }
        rmse_sum += std::sqrt(ss_res / static_cast<double>(test.size()));
        if (ss_tot > 1e-24)
            r2_sum += 1.0 - ss_res / ss_tot;
        else
            r2_sum += ss_res < 1e-12 ? 1.0 : 0.0;  // constant test fold
    }
    const auto f = static_cast<double>(split.folds.size());
    return {rmse_sum / f, r2_sum / f};
}

inline std::vector<double> knn_predict(const std::vector<std::vector<double>>& X,
                                       const std::vector<double>& y,
                                       const std::vector<std::size_t>& train,
                                       const std::vector<std::size_t>& test, std::size_t k) {
    std::vector<double> preds;
    preds.reserve(test.size());
    const std::size_t kk = std::min(k, train.size());
    for (auto t : test) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(train.size());
        for (auto i : train) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < X[t].size(); ++c) {
                const double diff = X[t][c] - X[i][c];
                d2 += diff * diff;
            }
            dist.emplace_back(d2, i);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk),
                          dist.end());
        double mean = 0.0;
        for (std::size_t j = 0; j < kk; ++j) mean += y[dist[j].second];
        preds.push_back(mean / static_cast<double>(kk));
    }
    return preds;
}

/// Ridge with unpenalized intercept: center on the training fold, penalize
/// slopes only.
inline std::vector<double> ridge_predict(const std::vector<std::vector<double>>& X,
                                         const std::vector<double>& y,
                                         const std::vector<std::size_t>& train,
                                         const std::vector<std::size_t>& test, double lambda) {
    const auto n = static_cast<Eigen::Index>(train.size());
    const auto p = static_cast<Eigen::Index>(X[train[0]].size());
    Eigen::MatrixXd A(n, p);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) A(i, j) = X[train[static_cast<std::size_t>(i)]]
                                                        [static_cast<std::size_t>(j)];
        b(i) = y[train[static_cast<std::size_t>(i)]];
    }
    const Eigen::RowVectorXd x_mean = A.colwise().mean();
    const double y_mean = b.mean();
    A.rowwise() -= x_mean;
    b.array() -= y_mean;
    Eigen::MatrixXd gram = A.transpose() * A;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd beta = gram.ldlt().solve(A.transpose() * b);

    std::vector<double> preds;
    preds.reserve(test.size());
    for (auto t : test) {
        double v = y_mean;
        for (Eigen::Index j = 0; j < p; ++j)
            v += (X[t][static_cast<std::size_t>(j)] - x_mean(j)) * beta(j);
        preds.push_back(v);
    }
    return preds;
}

inline ForestParams draw_forest_params(Rng& rng) {
    ForestParams params;
    params.n_trees = 24 + rng.index(41);  // 24..64
    params.max_depth = rng.index(2) == 0 ? 0 : 6 + rng.index(9);
    params.min_samples_leaf = 1 + rng.index(5);
    params.feature_fraction = rng.uniform(0.5, 1.0);
    return params;
}

} // namespace detail

/// 10-fold cross-validation over three surrogate families with a randomized
/// hyperparameter search (20 draws each), scored by mean fold RMSE; R2 is
/// 1 - SS_res/SS_tot per fold, averaged. Winner is the lowest RMSE; exact
/// ties go to the forest.
inline ModelSelection model_select(const TrainingSet& data, std::size_t folds = 10,
                                   std::uint64_t seed = 0, std::size_t draws = 20) {
    data.validate();
    const std::size_t n = data.X.size();
    if (n < folds) throw ValidationError("model_select: fewer rows than folds");
    if (folds < 2) throw ValidationError("model_select: need at least 2 folds");

    auto unit_layout = std::make_shared<EncodingLayout>(layout_for(data.space, EncodingScheme::unit));
    auto raw_layout = std::make_shared<EncodingLayout>(layout_for(data.space, EncodingScheme::raw));
    std::vector<std::vector<double>> Xu;
    Xu.reserve(n);
    for (const auto& c : data.X)
        Xu.push_back(encode(c, data.space, EncodingScheme::unit, unit_layout).coords);
    std::vector<std::vector<double>> Xr;
    Xr.reserve(n);
    for (const auto& c : data.X)
        Xr.push_back(encode(c, data.space, EncodingScheme::raw, raw_layout).coords);
    const auto kinds = detail::raw_column_kinds(data.space);
    const auto split = detail::make_folds(n, folds, seed);

    ModelSelection sel;
    // Random forest on raw encoding.
    {
        ModelScore best;
        best.name = "rf";
        for (std::size_t d = 0; d < draws; ++d) {
            Rng rng = Rng::derive(seed, 0xD0000 + d);
            const auto params = detail::draw_forest_params(rng);
            const std::uint64_t fit_seed = Rng::mix(seed, 0xDF00 + d);
            const auto [rmse, r2] = detail::cross_validate(
                Xr, data.y, split,
                [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
                    std::vector<std::vector<double>> tx;
                    std::vector<double> ty;
                    for (auto i : train) {
                        tx.push_back(Xr[i]);
                        ty.push_back(data.y[i]);
                    }
                    auto forest = rf_fit(tx, ty, kinds, params, fit_seed);
                    std::vector<double> preds;
                    for (auto t : test) preds.push_back(forest.predict(Xr[t]).first);
                    return preds;
                });
            if (d == 0 || rmse < best.rmse) {
                best.rmse = rmse;
                best.r2 = r2;
                best.params = {{"n_trees", params.n_trees},
                               {"max_depth", params.max_depth},
                               {"min_samples_leaf", params.min_samples_leaf},
                               {"feature_fraction", params.feature_fraction}};
            }
        }
        sel.table.push_back(std::move(best));
    }
    // k-nearest-neighbors on unit encoding.
    {
        ModelScore best;
        best.name = "knn";
        for (std::size_t d = 0; d < draws; ++d) {
            Rng rng = Rng::derive(seed, 0xD1000 + d);
            const std::size_t k = 1 + rng.index(std::min<std::size_t>(25, n - n / folds));
            const auto [rmse, r2] = detail::cross_validate(
                Xu, data.y, split,
                [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
                    return detail::knn_predict(Xu, data.y, train, test, k);
                });
            if (d == 0 || rmse < best.rmse) {
                best.rmse = rmse;
                best.r2 = r2;
                best.params = {{"k", k}};
            }
        }
        sel.table.push_back(std::move(best));
    }
    // Ridge regression on unit encoding.
    {
        ModelScore best;
        best.name = "ridge";
        for (std::size_t d = 0; d < draws; ++d) {
            Rng rng = Rng::derive(seed, 0xD2000 + d);
            const double lambda = std::exp(rng.uniform(std::log(1e-6), std::log(10.0)));
            const auto [rmse, r2] = detail::cross_validate(
                Xu, data.y, split,
                [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
                    return detail::ridge_predict(Xu, data.y, train, test, lambda);
                });
            if (d == 0 || rmse < best.rmse) {
                best.rmse = rmse;
                best.r2 = r2;
                best.params = {{"lambda", lambda}};
            }
        }
        sel.table.push_back(std::move(best));
    }

    sel.winner = "rf";
    double best_rmse = sel.table[0].rmse;
    for (const auto& row : sel.table) {
        if (row.rmse < best_rmse) {
            best_rmse = row.rmse;
            sel.winner = row.name;
        }
    }
    return sel;
}

/// Package a benchmark: run model selection for provenance, fit the forest
/// surrogate on all rows with the best forest hyperparameters, and record its
/// prediction at the default configuration. The artifact always carries the
/// forest; the cross-validation table documents how the alternatives scored.
inline TuningBenchmark build_benchmark(const TrainingSet& data, std::uint64_t seed,
                                       std::string description = "",
                                       std::size_t folds = 10) {
    const auto selection = model_select(data, folds, seed);
    const ModelScore* rf_row = nullptr;
    for (const auto& row : selection.table)
        if (row.name == "rf") rf_row = &row;

    ForestParams params;
    params.n_trees = rf_row->params.at("n_trees").get<std::size_t>();
    params.max_depth = rf_row->params.at("max_depth").get<std::size_t>();
    params.min_samples_leaf = rf_row->params.at("min_samples_leaf").get<std::size_t>();
    params.feature_fraction = rf_row->params.at("feature_fraction").get<double>();

    TuningBenchmark bench;
    bench.space = data.space;
    bench.sense = data.sense;
    bench.default_config = data.default_config;
    bench.surrogate = detail::importance_forest(data, Rng::mix(seed, 0xBE9C), params);
    bench.default_value = bench_evaluate(bench, bench.default_config);

    // Resubstitution error of the packaged surrogate on its own training rows.
    // Recorded for the record, not enforced: bagging keeps it above zero even
    // on noiseless data, and readers should see how far.
    double resub = 0.0;
    for (std::size_t i = 0; i < data.X.size(); ++i) {
        const double err = bench_evaluate(bench, data.X[i]) - data.y[i];
        resub += err * err;
    }
    resub = std::sqrt(resub / static_cast<double>(data.X.size()));

    nlohmann::json cv = nlohmann::json::array();
    for (const auto& row : selection.table)
        cv.push_back({{"model", row.name},
                      {"rmse", row.rmse},
                      {"r2", row.r2},
                      {"params", row.params}});
    bench.provenance = {{"description", description},
                        {"rows", data.X.size()},
                        {"cv", cv},
                        {"cv_winner", selection.winner},
                        {"dataset_default_value", data.default_value},
                        {"resubstitution_rmse", resub}};
    return bench;
}

// ---------------------------------------------------------------------------
// Experiment plans

struct ExperimentPlan {
    std::string benchmark_path;
    std::vector<OptimizerKind> optimizers;
    std::size_t budget = 0;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;

    void validate() const {
        if (optimizers.empty()) throw ValidationError("plan: no optimizers");
        if (seeds.empty()) throw ValidationError("plan: no seeds");
        if (budget < 1) throw ValidationError("plan: budget must be >= 1");
        if (out_dir.empty()) throw ValidationError("plan: out_dir is empty");
        std::unordered_set<std::string> names;
        for (auto k : optimizers)
            if (!names.insert(to_string(k)).second)
                throw ValidationError(std::string("plan: duplicate optimizer '") + to_string(k) +
                                      "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["benchmark_path"] = benchmark_path;
        auto names = nlohmann::json::array();
        for (auto k : optimizers) names.push_back(to_string(k));
        doc["optimizers"] = names;
        doc["budget"] = budget;
        doc["seeds"] = seeds;
        doc["out_dir"] = out_dir;
        return doc;
    }

    static ExperimentPlan from_json(const nlohmann::json& doc) {
        ExperimentPlan plan;
        try {
            plan.benchmark_path = doc.at("benchmark_path").get<std::string>();
            for (const auto& name : doc.at("optimizers"))
                plan.optimizers.push_back(optimizer_kind_from_string(name.get<std::string>()));
            plan.budget = doc.at("budget").get<std::size_t>();
            plan.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
            plan.out_dir = doc.at("out_dir").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("plan document: ") + e.what());
        }
        plan.validate();
        return plan;
    }
};

inline ExperimentPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return ExperimentPlan::from_json(doc);
}

struct SessionResult {
    OptimizerKind optimizer = OptimizerKind::random_search;
    std::uint64_t seed = 0;
    double best_value = 0.0;
    std::vector<double> best_curve;  // best-so-far after each evaluation
    std::string trajectory_path;
};

namespace detail {

inline SessionResult run_one_session(const TuningBenchmark& bench, OptimizerKind kind,
                                     std::size_t budget, std::uint64_t seed,
                                     const std::filesystem::path& out_dir) {
    TuningSession session(bench.space, kind, bench.sense, budget, seed);
    for (std::size_t t = 0; t < budget; ++t) {
        const Configuration c = session.suggest();
        session.observe(c, bench_evaluate(bench, c), EvalStatus::ok);
    }

    SessionResult result;
    result.optimizer = kind;
    result.seed = seed;
    result.best_value = best_so_far(session.history()).second;
    std::optional<double> running;
    for (const auto& r : session.history().records) {
        if (!running || is_better(r.value, *running, bench.sense)) running = r.value;
        result.best_curve.push_back(*running);
    }

    const auto path = out_dir / (std::string(to_string(kind)) + "_seed" + std::to_string(seed) +
                                 ".csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    session.write_trajectory(out);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    result.trajectory_path = path.string();
    return result;
}

} // namespace detail

/// Run every (optimizer, seed) pair of the plan against the frozen surrogate.
/// Tasks are distributed over `jobs` worker threads via an atomic counter and
/// the results vector is indexed by task, so output is independent of
/// scheduling; reruns are byte-identical.
inline std::vector<SessionResult> run_experiment(const TuningBenchmark& bench,
                                                 const ExperimentPlan& plan,
                                                 std::size_t jobs = 1) {
    plan.validate();
    if (jobs < 1) throw ValidationError("run_experiment: jobs must be >= 1");
    const std::filesystem::path out_dir(plan.out_dir);
    std::filesystem::create_directories(out_dir);

    struct Task {
        OptimizerKind kind;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (auto kind : plan.optimizers)
        for (auto seed : plan.seeds) tasks.push_back({kind, seed});

    std::vector<SessionResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            try {
                results[i] = detail::run_one_session(bench, tasks[i].kind, plan.budget,
                                                     tasks[i].seed, out_dir);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const std::size_t n_workers = std::min(jobs, tasks.size());
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw IoError("run_experiment: " + first_error);
    return results;
}

// ---------------------------------------------------------------------------
// Comparison metrics

/// Percent improvement of the best found value over the default, oriented so
/// that better is positive: maximize (best-default)/default, minimize
/// (default-best)/default, both times 100.
inline double improvement_over_default(double best, double default_value, Sense sense) {
    if (default_value == 0.0)
        throw ValidationError("improvement_over_default: default value is zero");
    const double delta =
        sense == Sense::maximize ? best - default_value : default_value - best;
    return 100.0 * delta / default_value;
}

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// Linear-interpolation quantiles (the common "type 7" rule: index
/// h = (n-1)p, value = x[floor(h)] + frac(h) * (x[floor(h)+1] - x[floor(h)])).
inline Quartiles quartiles_of(std::vector<double> values) {
    if (values.empty()) throw ValidationError("quartiles_of: empty input");
    std::sort(values.begin(), values.end());
    auto at = [&](double p) {
        const double h = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(h);
        const double frac = h - static_cast<double>(lo);
        if (lo + 1 >= values.size()) return values[lo];
        return values[lo] + frac * (values[lo + 1] - values[lo]);
    };
    return {at(0.25), at(0.5), at(0.75)};
}

struct RankingTable {
    std::vector<std::string> optimizers;
    std::vector<double> mean_rank;                    // per optimizer
    std::vector<std::vector<double>> round_ranks;     // [round][optimizer]
    std::vector<Quartiles> quartiles;                 // of session bests, per optimizer
};

/// Average ranking across repetitions: each optimizer's session bests are
/// sorted best-to-worst, round r compares every optimizer's r-th entry and
/// assigns competition ranks with ties sharing the average (count of strictly
/// better values + (ties + 1) / 2).
inline RankingTable average_ranking(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& session_bests,
                                    Sense sense) {
    if (names.empty() || names.size() != session_bests.size())
        throw ValidationError("average_ranking: names and columns must match and be nonempty");
    const std::size_t rounds = session_bests[0].size();
    if (rounds == 0) throw ValidationError("average_ranking: no sessions");
    for (const auto& col : session_bests)
        if (col.size() != rounds)
            throw ValidationError("average_ranking: ragged session counts");

    std::vector<std::vector<double>> sorted = session_bests;
    for (auto& col : sorted)
        std::sort(col.begin(), col.end(), [&](double a, double b) {
            return is_better(a, b, sense);
        });

    RankingTable table;
    table.optimizers = names;
    table.mean_rank.assign(names.size(), 0.0);
    for (std::size_t r = 0; r < rounds; ++r) {
        std::vector<double> ranks(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            std::size_t better = 0, tied = 0;
            for (std::size_t j = 0; j < names.size(); ++j) {
                if (is_better(sorted[j][r], sorted[i][r], sense))
                    ++better;
                else if (sorted[j][r] == sorted[i][r])
                    ++tied;  // counts self
            }
            ranks[i] = static_cast<double>(better) + (static_cast<double>(tied) + 1.0) / 2.0;
            table.mean_rank[i] += ranks[i];
        }
        table.round_ranks.push_back(std::move(ranks));
    }
    for (auto& m : table.mean_rank) m /= static_cast<double>(rounds);
    for (const auto& col : session_bests) table.quartiles.push_back(quartiles_of(col));
    return table;
}

/// Write summary.json and curves.csv for a finished experiment. The summary
/// carries per-optimizer best values, improvements over the benchmark default,
/// mean ranks and quartiles; curves.csv has, per iteration, the q1/median/q3
/// of best-so-far across seeds for each optimizer.
inline void write_report(const TuningBenchmark& bench,
                         const std::vector<SessionResult>& results,
                         const std::filesystem::path& out_dir) {
    if (results.empty()) throw ValidationError("write_report: no results");
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> names;
    std::vector<std::vector<const SessionResult*>> groups;
    for (const auto& r : results) {
        const std::string name = to_string(r.optimizer);
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) {
            names.push_back(name);
            groups.emplace_back();
            it = names.end() - 1;
        }
        groups[static_cast<std::size_t>(it - names.begin())].push_back(&r);
    }

    std::vector<std::vector<double>> bests(names.size());
    std::size_t iterations = results[0].best_curve.size();
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (const auto* r : groups[g]) {
            bests[g].push_back(r->best_value);
            iterations = std::min(iterations, r->best_curve.size());
        }
    const auto ranking = average_ranking(names, bests, bench.sense);

    nlohmann::json summary;
    summary["sense"] = to_string(bench.sense);
    summary["default_value"] = bench.default_value;
    summary["provenance"] = bench.provenance;
    auto rows = nlohmann::json::array();
    for (std::size_t g = 0; g < names.size(); ++g) {
        double best = bests[g][0];
        for (double v : bests[g])
            if (is_better(v, best, bench.sense)) best = v;
        nlohmann::json row;
        row["optimizer"] = names[g];
        row["sessions"] = bests[g].size();
        row["best_value"] = best;
        row["median_best"] = ranking.quartiles[g].median;
        row["q1_best"] = ranking.quartiles[g].q1;
        row["q3_best"] = ranking.quartiles[g].q3;
        row["improvement_percent"] =
            bench.default_value == 0.0
                ? nlohmann::json()
                : nlohmann::json(improvement_over_default(best, bench.default_value, bench.sense));
        row["mean_rank"] = ranking.mean_rank[g];
        rows.push_back(std::move(row));
    }
    summary["optimizers"] = std::move(rows);
    {
        const auto path = out_dir / "summary.json";
        std::ofstream out(path);
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        out << summary.dump(2) << '\n';
        if (!out) throw IoError("write failed for '" + path.string() + "'");
    }

    CsvTable curves;
    curves.header.push_back("iteration");
    for (const auto& name : names) {
        curves.header.push_back(name + "_q1");
        curves.header.push_back(name + "_median");
        curves.header.push_back(name + "_q3");
    }
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<std::string> row;
        row.push_back(std::to_string(it));
        for (std::size_t g = 0; g < groups.size(); ++g) {
            std::vector<double> column;
            for (const auto* r : groups[g]) column.push_back(r->best_curve[it]);
            const auto q = quartiles_of(std::move(column));
            row.push_back(format_double(q.q1));
            row.push_back(format_double(q.median));
            row.push_back(format_double(q.q3));
        }
        curves.rows.push_back(std::move(row));
    }
    write_csv_file((out_dir / "curves.csv").string(), curves);
}

// ---------------------------------------------------------------------------
// External objectives

/// Shell command evaluated per configuration. The template must contain the
/// {config_path} placeholder; it is replaced with the path of a JSON file
/// holding the configuration, and the command's last non-empty stdout line is
/// parsed as the objective value.
struct ExternalCommand {
    std::string command_template;
    double timeout_seconds = 60.0;
};

struct ExternalResult {
    double value = 0.0;
    EvalStatus status = EvalStatus::ok;
    std::string diagnostic;
};

namespace detail {

inline std::filesystem::path temp_config_path() {
    static std::atomic<std::uint64_t> counter{0};
    return std::filesystem::temp_directory_path() /
           ("knobkit_cfg_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)) + ".json");
}

struct CommandOutcome {
    int exit_code = -1;
    bool timed_out = false;
    std::string stdout_text;
};

inline CommandOutcome run_with_timeout(const std::string& command, double timeout_seconds) {
    int fds[2];
    if (::pipe(fds) != 0) throw IoError("external objective: pipe failed");
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw IoError("external objective: fork failed");
    }
    if (pid == 0) {
        ::setpgid(0, 0);  // own process group, so a timeout kill reaches grandchildren
        ::dup2(fds[1], STDOUT_FILENO);
        ::close(fds[0]);
        ::close(fds[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    ::close(fds[1]);
    ::setpgid(pid, pid);  // mirror of the child's call; either side may win the race
    ::fcntl(fds[0], F_SETFL, O_NONBLOCK);

    CommandOutcome outcome;
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(timeout_seconds));
    char buf[4096];
    bool open = true;
    while (open) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            outcome.timed_out = true;
            ::kill(-pid, SIGKILL);
            break;
        }
        struct pollfd pfd{fds[0], POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(
                                              remaining.count(), 1000)));
        if (ready < 0) {
            if (errno == EINTR) continue;
            ::kill(-pid, SIGKILL);
            break;
        }
        if (ready == 0) continue;
        const ssize_t got = ::read(fds[0], buf, sizeof buf);
        if (got > 0)
            outcome.stdout_text.append(buf, static_cast<std::size_t>(got));
        else if (got == 0 || errno != EAGAIN)
            open = false;  // EOF or error: command side closed stdout
    }
    // Drain whatever arrived before a kill.
    for (;;) {
        const ssize_t got = ::read(fds[0], buf, sizeof buf);
        if (got <= 0) break;
        outcome.stdout_text.append(buf, static_cast<std::size_t>(got));
    }
    ::close(fds[0]);

    int wait_status = 0;
    ::waitpid(pid, &wait_status, 0);
    if (WIFEXITED(wait_status)) outcome.exit_code = WEXITSTATUS(wait_status);
    return outcome;
}

inline std::string last_nonempty_line(const std::string& text) {
    std::string line;
    std::istringstream in(text);
    std::string best;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) best = line;
    }
    return best;
}

} // namespace detail

/// Evaluate one configuration through a shell command. Never throws for a
/// misbehaving command: timeouts, nonzero exits and unparseable output all
/// come back as failed results with a diagnostic.
inline ExternalResult external_objective(const ExternalCommand& cmd, const ConfigSpace& space,
                                         const Configuration& config) {
    space.validate(config);
    const std::string placeholder = "{config_path}";
    const auto pos = cmd.command_template.find(placeholder);
    if (pos == std::string::npos)
        throw ValidationError("external objective: command template lacks {config_path}");

    const auto config_path = detail::temp_config_path();
    {
        std::ofstream out(config_path);
        if (!out) throw IoError("cannot write '" + config_path.string() + "'");
        out << config_to_json(config, space).dump(2) << '\n';
    }
    std::string command = cmd.command_template;
    for (auto at = command.find(placeholder); at != std::string::npos;
         at = command.find(placeholder))
        command.replace(at, placeholder.size(), config_path.string());

    ExternalResult result;
    try {
        const auto outcome = detail::run_with_timeout(command, cmd.timeout_seconds);
        std::error_code ec;
        std::filesystem::remove(config_path, ec);
        if (outcome.timed_out) {
            result.status = EvalStatus::failed;
            result.diagnostic = "timed out after " + format_double(cmd.timeout_seconds) + "s";
            return result;
        }
        if (outcome.exit_code != 0) {
            result.status = EvalStatus::failed;
            result.diagnostic = "exit code " + std::to_string(outcome.exit_code);
            return result;
        }
        const std::string line = detail::last_nonempty_line(outcome.stdout_text);
        if (line.empty()) {
            result.status = EvalStatus::failed;
            result.diagnostic = "no output";
            return result;
        }
        try {
            result.value = parse_double(line);
        } catch (const ValidationError&) {
            result.status = EvalStatus::failed;
            result.diagnostic = "unparseable output '" + line + "'";
        }
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(config_path, ec);
        throw;
    }
    return result;
}

} // namespace knobkit
