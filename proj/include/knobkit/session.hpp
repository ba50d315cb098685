#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "knobkit/acquisition.hpp"
#include "knobkit/csv.hpp"
#include "knobkit/error.hpp"
#include "knobkit/forest.hpp"
#include "knobkit/gp.hpp"
#include "knobkit/history.hpp"
#include "knobkit/parzen.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

enum class OptimizerKind {
    random_search,
    vanilla_bo,
    onehot_bo,
    mixed_bo,
    smac,
    tpe,
    turbo,
    ga,
};

inline const char* to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::random_search: return "random_search";
        case OptimizerKind::vanilla_bo: return "vanilla_bo";
        case OptimizerKind::onehot_bo: return "onehot_bo";
        case OptimizerKind::mixed_bo: return "mixed_bo";
        case OptimizerKind::smac: return "smac";
        case OptimizerKind::tpe: return "tpe";
        case OptimizerKind::turbo: return "turbo";
        case OptimizerKind::ga: return "ga";
    }
    return "?";
}

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
    for (auto k : {OptimizerKind::random_search, OptimizerKind::vanilla_bo,
                   OptimizerKind::onehot_bo, OptimizerKind::mixed_bo, OptimizerKind::smac,
                   OptimizerKind::tpe, OptimizerKind::turbo, OptimizerKind::ga})
        if (s == to_string(k)) return k;
    throw ValidationError("unknown optimizer '" + s + "'");
}

inline std::vector<OptimizerKind> all_optimizer_kinds() {
    return {OptimizerKind::random_search, OptimizerKind::vanilla_bo, OptimizerKind::onehot_bo,
            OptimizerKind::mixed_bo,      OptimizerKind::smac,       OptimizerKind::tpe,
            OptimizerKind::turbo,         OptimizerKind::ga};
}

struct TrustRegionState {
    std::vector<double> center;          // unit coordinates
    double length = 0.8;
    int success_count = 0;
    int failure_count = 0;
    std::size_t region_id = 0;
    std::vector<std::size_t> owned;      // observation indices this region suggested
    std::uint64_t restarts = 0;
};

/// One ask/tell tuning run: owns the space, the optimizer state and the
/// observation history. Single-owner mutable; distinct sessions are fully
/// independent given distinct seeds.
class TuningSession {
public:
    static constexpr std::size_t kGaPopulation = 20;
    static constexpr double kGaMutationProb = 0.1;
    static constexpr double kGaMutationStep = 0.1;
    static constexpr std::size_t kTurboRegions = 3;
    static constexpr double kTurboLengthInit = 0.8;
    static constexpr double kTurboLengthMin = 0.015625;  // 2^-6
    static constexpr double kTurboLengthMax = 1.6;
    static constexpr int kTurboSuccTol = 3;
    static constexpr int kTurboFailTol = 5;
    static constexpr double kTpeGamma = 0.25;
    static constexpr std::size_t kTpeCandidates = 24;

    TuningSession(ConfigSpace space, OptimizerKind kind, Sense sense, std::size_t budget,
                  std::uint64_t seed, std::size_t n_init = 10)
        : space_(std::move(space)), kind_(kind), seed_(seed), budget_(budget), n_init_(n_init) {
        if (n_init < 1) throw ValidationError("new_session: n_init must be >= 1");
        if (budget < n_init)
            throw ValidationError("new_session: budget " + std::to_string(budget) +
                                  " below the initial design size " + std::to_string(n_init));
        history_.sense = sense;
        const std::size_t design = kind == OptimizerKind::ga
                                       ? std::min(kGaPopulation, budget)
                                       : n_init;
        init_design_ = lhs_sample(space_, design, Rng::mix(seed, 0x1D));
        if (kind == OptimizerKind::ga) {
            population_ = init_design_;
            fitness_.assign(population_.size(), std::nullopt);
        }
    }

    const ConfigSpace& space() const { return space_; }
    OptimizerKind kind() const { return kind_; }
    Sense sense() const { return history_.sense; }
    std::size_t budget() const { return budget_; }
    std::size_t n_init() const { return n_init_; }
    const History& history() const { return history_; }
    const std::vector<Configuration>& init_design() const { return init_design_; }
    std::size_t fallback_count() const { return fallback_count_; }
    const std::vector<TrustRegionState>& trust_regions() const { return regions_; }
    double tpe_gamma() const { return tpe_gamma_; }

    void set_tpe_gamma(double gamma) {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw ValidationError("set_tpe_gamma: gamma must lie in (0, 1)");
        tpe_gamma_ = gamma;
    }

    Configuration suggest() {
        if (history_.size() >= budget_)
            throw ValidationError("suggest: budget of " + std::to_string(budget_) + " exhausted");
        Configuration c = dispatch();
        last_suggested_ = c;
        return c;
    }

    /// Record one evaluation. Failed evaluations are stored with the
    /// worst-successful-value substitution (sense sentinel before the first
    /// success); optimizer state sees only substituted values.
    void observe(const Configuration& config, double value, EvalStatus status) {
        space_.validate(config);
        Observation obs;
        obs.config = config;
        obs.status = status;
        obs.value = status == EvalStatus::ok ? value : handle_failure(history_, history_.sense);
        const std::size_t index = history_.size();
        history_.append(obs);

        if (kind_ == OptimizerKind::ga) ga_observe(config, history_.records.back().value);
        if (kind_ == OptimizerKind::turbo) turbo_observe(config, index);
        last_suggested_.reset();
    }

    /// CSV trajectory: iteration, one column per knob, value, status,
    /// best_so_far (repeats the stored value until the first success).
    void write_trajectory(std::ostream& out) const {
        CsvTable t;
        t.header.push_back("iteration");
        for (const auto& k : space_.knobs()) t.header.push_back(k.name);
        t.header.push_back("value");
        t.header.push_back("status");
        t.header.push_back("best_so_far");
        std::optional<double> best;
        for (const auto& r : history_.records) {
            std::vector<std::string> row;
            row.push_back(std::to_string(r.iteration));
            for (std::size_t d = 0; d < space_.size(); ++d) {
                const auto& v = r.config.values[d];
                if (std::holds_alternative<double>(v))
                    row.push_back(format_double(std::get<double>(v)));
                else if (std::holds_alternative<std::int64_t>(v))
                    row.push_back(std::to_string(std::get<std::int64_t>(v)));
                else
                    row.push_back(std::get<std::string>(v));
            }
            row.push_back(format_double(r.value));
            row.push_back(to_string(r.status));
            if (r.status == EvalStatus::ok && (!best || is_better(r.value, *best, history_.sense)))
                best = r.value;
            row.push_back(format_double(best ? *best : r.value));
            t.rows.push_back(std::move(row));
        }
        write_csv(out, t);
    }

private:
    std::size_t iteration() const { return history_.size(); }

    Configuration dispatch() {
        const std::size_t it = iteration();
        if (kind_ == OptimizerKind::ga) return ga_suggest();
        if (it < init_design_.size()) return init_design_[it];
        switch (kind_) {
            case OptimizerKind::random_search:
                return random_sample(space_, 1, Rng::mix(seed_, 0xA000 + it))[0];
            case OptimizerKind::vanilla_bo:
                return gp_bo_suggest(EncodingScheme::unit, vanilla_family());
            case OptimizerKind::onehot_bo:
                return gp_bo_suggest(EncodingScheme::unit_onehot, onehot_family());
            case OptimizerKind::mixed_bo:
                return gp_bo_suggest(EncodingScheme::unit_onehot, mixed_family());
            case OptimizerKind::smac:
                return smac_suggest();
            case OptimizerKind::tpe:
                return tpe_suggest();
            case OptimizerKind::turbo:
                return turbo_suggest();
            default:
                throw ValidationError("suggest: unhandled optimizer kind");
        }
    }

    // -- shared helpers ----------------------------------------------------

    double incumbent_or_sentinel() const {
        if (history_.ok_count() > 0) return best_so_far(history_).second;
        return handle_failure(history_, history_.sense);
    }

    std::vector<std::vector<double>> encode_all(EncodingScheme scheme,
                                                std::shared_ptr<const EncodingLayout> layout) const {
        std::vector<std::vector<double>> X;
        X.reserve(history_.size());
        for (const auto& r : history_.records)
            X.push_back(encode(r.config, space_, scheme, layout).coords);
        return X;
    }

    std::vector<double> values() const {
        std::vector<double> y;
        y.reserve(history_.size());
        for (const auto& r : history_.records) y.push_back(r.value);
        return y;
    }

    /// Hyperparameters are re-searched every iteration up to 100 points, then
    /// every 5th observation; between refits the cached kernel is reused.
    bool should_refit() const {
        const std::size_t n = history_.size();
        if (n <= 100) return true;
        return n % 5 == 0;
    }

    Configuration random_fallback() {
        ++fallback_count_;
        return random_sample(space_, 1, Rng::mix(seed_, 0xFA11 + iteration()))[0];
    }

    // -- kernel families ---------------------------------------------------

    Kernel vanilla_family() const {
        const auto layout = layout_for(space_, EncodingScheme::unit);
        return Kernel::rbf(std::vector<double>(layout.dim, 1.0));
    }

    Kernel onehot_family() const {
        const auto layout = layout_for(space_, EncodingScheme::unit_onehot);
        return Kernel::rbf(std::vector<double>(layout.dim, 1.0));
    }

    /// Matern 5/2 over numeric columns times a Hamming kernel over the one-hot
    /// categorical columns; either factor alone when the space is pure.
    Kernel mixed_family() const {
        const auto layout = layout_for(space_, EncodingScheme::unit_onehot);
        std::vector<std::size_t> numeric_cols, categorical_cols;
        for (std::size_t d = 0; d < space_.size(); ++d) {
            const auto& span = layout.spans[d];
            if (space_.knob(d).kind == KnobKind::categorical) {
                for (std::size_t j = 0; j < span.width; ++j)
                    categorical_cols.push_back(span.offset + j);
            } else {
                numeric_cols.push_back(span.offset);
            }
        }
        std::vector<Kernel> parts;
        if (!numeric_cols.empty())
            parts.push_back(Kernel::matern52(std::vector<double>(numeric_cols.size(), 1.0), 1.0,
                                             numeric_cols));
        if (!categorical_cols.empty())
            parts.push_back(Kernel::hamming(std::vector<double>(categorical_cols.size(), 1.0), 1.0,
                                            categorical_cols));
        if (parts.size() == 1) return parts[0];
        return Kernel::product(std::move(parts));
    }

    // -- GP-family suggestion ----------------------------------------------

    Configuration gp_bo_suggest(EncodingScheme scheme, const Kernel& family) {
        auto layout = std::make_shared<EncodingLayout>(layout_for(space_, scheme));
        const auto X = encode_all(scheme, layout);
        const auto y = values();
        try {
            if (!hypers_ || should_refit())
                hypers_ = gp_fit_hypers(X, y, family, Rng::mix(seed_, 0x45F + iteration()));
            GPModel gp = gp_fit(X, y, hypers_->kernel, hypers_->noise);
            const double best = incumbent_or_sentinel();
            const Sense sense = history_.sense;
            const auto score = [&](const Configuration& c) {
                const auto v = encode(c, space_, scheme, layout);
                const auto [mean, var] = gp.predict(v.coords);
                return expected_improvement(mean, std::sqrt(var), best, sense);
            };
            return maximize_acquisition(space_, score, history_,
                                        Rng::mix(seed_, 0xACC + iteration()));
        } catch (const ConditioningError&) {
            return random_fallback();
        }
    }

    // -- SMAC ---------------------------------------------------------------

    Configuration smac_suggest() {
        // Every 2nd post-init suggestion is uniform random.
        const std::size_t t = iteration() - init_design_.size();
        if (t % 2 == 1) return random_sample(space_, 1, Rng::mix(seed_, 0x5AC + iteration()))[0];

        auto layout = std::make_shared<EncodingLayout>(layout_for(space_, EncodingScheme::raw));
        const auto X = encode_all(EncodingScheme::raw, layout);
        const auto y = values();
        std::vector<ColumnKind> kinds;
        for (const auto& k : space_.knobs())
            kinds.push_back(k.kind == KnobKind::categorical ? ColumnKind::categorical
                                                            : ColumnKind::numeric);
        const auto forest = rf_fit(X, y, kinds, {}, Rng::mix(seed_, 0xF0E + iteration()));
        const double best = incumbent_or_sentinel();
        const Sense sense = history_.sense;
        const auto score = [&](const Configuration& c) {
            const auto v = encode(c, space_, EncodingScheme::raw, layout);
            const auto [mean, var] = forest.predict(v.coords);
            return expected_improvement(mean, std::sqrt(var), best, sense);
        };
        return maximize_acquisition(space_, score, history_, Rng::mix(seed_, 0xACC + iteration()));
    }

    // -- TPE -----------------------------------------------------------------

    Configuration tpe_suggest() {
        ParzenPair pair;
        try {
            pair = tpe_fit(space_, history_, tpe_gamma_);
        } catch (const ValidationError&) {
            return random_fallback();
        }
        Rng rng = Rng::derive(seed_, 0x79E + iteration());
        std::optional<Configuration> best;
        double best_score = -std::numeric_limits<double>::infinity();
        std::optional<Configuration> best_any;
        double best_any_score = -std::numeric_limits<double>::infinity();
        for (int batch = 0; batch < 3 && !best; ++batch) {
            for (std::size_t i = 0; i < kTpeCandidates; ++i) {
                auto c = tpe_sample_good(pair, rng);
                const double s = tpe_score(pair, c);
                if (s > best_any_score) {
                    best_any_score = s;
                    best_any = c;
                }
                bool evaluated = false;
                for (const auto& r : history_.records)
                    if (r.config == c) {
                        evaluated = true;
                        break;
                    }
                if (!evaluated && s > best_score) {
                    best_score = s;
                    best = std::move(c);
                }
            }
        }
        return best ? *best : *best_any;
    }

    // -- TuRBO ---------------------------------------------------------------

    std::shared_ptr<const EncodingLayout> unit_layout() {
        if (!unit_layout_)
            unit_layout_ = std::make_shared<EncodingLayout>(layout_for(space_, EncodingScheme::unit));
        return unit_layout_;
    }

    void turbo_init_regions() {
        // Centers: the best distinct observed configs, one per region.
        std::vector<const Observation*> ok;
        for (const auto& r : history_.records)
            if (r.status == EvalStatus::ok) ok.push_back(&r);
        std::stable_sort(ok.begin(), ok.end(), [&](const Observation* a, const Observation* b) {
            return is_better(a->value, b->value, history_.sense);
        });
        auto layout = unit_layout();
        regions_.clear();
        for (std::size_t r = 0; r < kTurboRegions; ++r) {
            TrustRegionState region;
            region.region_id = r;
            region.length = kTurboLengthInit;
            if (r < ok.size()) {
                region.center = encode(ok[r]->config, space_, EncodingScheme::unit, layout).coords;
            } else {
                auto c = lhs_sample(space_, 1, Rng::mix(seed_, 0x7B0 + r))[0];
                region.center = encode(c, space_, EncodingScheme::unit, layout).coords;
            }
            regions_.push_back(std::move(region));
        }
    }

    bool in_box(const TrustRegionState& region, const std::vector<double>& u) const {
        for (std::size_t i = 0; i < u.size(); ++i)
            if (std::abs(u[i] - region.center[i]) > region.length / 2.0 + 1e-12) return false;
        return true;
    }

    /// Observations visible to a region: the ones it suggested plus any
    /// point currently inside its box.
    void region_data(const TrustRegionState& region, std::vector<std::vector<double>>& X,
                     std::vector<double>& y) {
        auto layout = unit_layout();
        X.clear();
        y.clear();
        for (std::size_t i = 0; i < history_.size(); ++i) {
            const auto& r = history_.records[i];
            const auto u = encode(r.config, space_, EncodingScheme::unit, layout).coords;
            const bool owned = std::find(region.owned.begin(), region.owned.end(), i) !=
                               region.owned.end();
            if (owned || in_box(region, u)) {
                X.push_back(u);
                y.push_back(r.value);
            }
        }
    }

    Configuration turbo_suggest() {
        if (regions_.empty()) turbo_init_regions();
        auto layout = unit_layout();
        Rng rng = Rng::derive(seed_, 0x7B1 + iteration());
        const Sense sense = history_.sense;
        const bool minimize = sense == Sense::minimize;

        std::optional<Configuration> best_config;
        double best_draw = minimize ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
        std::size_t best_region = 0;

        for (auto& region : regions_) {
            std::vector<std::vector<double>> X;
            std::vector<double> y;
            region_data(region, X, y);

            // Candidates: uniform draws inside the box (clamped to [0,1]).
            constexpr std::size_t kCandidates = 300;
            std::vector<Configuration> candidates;
            candidates.reserve(kCandidates);
            for (std::size_t c = 0; c < kCandidates; ++c) {
                EncodedVector v;
                v.layout = layout;
                v.coords.resize(layout->dim);
                for (std::size_t d = 0; d < layout->dim; ++d) {
                    const double lo = std::max(0.0, region.center[d] - region.length / 2.0);
                    const double hi = std::min(1.0, region.center[d] + region.length / 2.0);
                    v.coords[d] = rng.uniform(lo, hi);
                }
                candidates.push_back(decode(v, space_));
            }

            GPModel gp;
            bool have_gp = false;
            if (X.size() >= 2 && should_refit_region()) {
                try {
                    auto fitted = gp_fit_hypers(X, y, Kernel::rbf(std::vector<double>(layout->dim, 1.0)),
                                                Rng::mix(seed_, 0x7B2 + region.region_id));
                    region_hypers_[region.region_id] = fitted;
                } catch (const ConditioningError&) {
                }
            }
            if (X.size() >= 2) {
                auto it = region_hypers_.find(region.region_id);
                const Kernel k = it != region_hypers_.end()
                                     ? it->second.kernel
                                     : Kernel::rbf(std::vector<double>(layout->dim, 0.5));
                const double noise = it != region_hypers_.end() ? it->second.noise : 1e-4;
                try {
                    gp = gp_fit(X, y, k, noise);
                    have_gp = true;
                } catch (const ConditioningError&) {
                }
            }

            // Thompson draw: sample a value per candidate, take the region's
            // sampled optimum; the overall winner supplies the suggestion.
            for (const auto& c : candidates) {
                bool evaluated = false;
                for (const auto& r : history_.records)
                    if (r.config == c) {
                        evaluated = true;
                        break;
                    }
                if (evaluated) continue;
                const auto u = encode(c, space_, EncodingScheme::unit, layout).coords;
                double draw;
                if (have_gp) {
                    const auto [mean, var] = gp.predict(u);
                    draw = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
                } else {
                    draw = rng.normal();  // prior draw before the region has data
                }
                if (!best_config || is_better(draw, best_draw, sense)) {
                    best_draw = draw;
                    best_config = c;
                    best_region = region.region_id;
                }
            }
        }

        if (!best_config) return random_fallback();
        pending_region_ = best_region;
        return *best_config;
    }

    bool should_refit_region() const {
        const std::size_t n = history_.size();
        if (n <= 60) return true;
        return n % 5 == 0;
    }

    void turbo_observe(const Configuration& config, std::size_t index) {
        if (regions_.empty() || !pending_region_ ||
            !last_suggested_ || !(config == *last_suggested_)) {
            pending_region_.reset();
            return;
        }
        TrustRegionState& region = regions_[*pending_region_];
        pending_region_.reset();
        region.owned.push_back(index);

        // Success = strictly better than everything the region saw before.
        double region_best = std::numeric_limits<double>::quiet_NaN();
        bool has_prev = false;
        for (std::size_t i = 0; i < history_.size(); ++i) {
            if (i == index) continue;
            if (std::find(region.owned.begin(), region.owned.end(), i) == region.owned.end())
                continue;
            const double v = history_.records[i].value;
            if (!has_prev || is_better(v, region_best, history_.sense)) {
                region_best = v;
                has_prev = true;
            }
        }
        const double value = history_.records[index].value;
        const bool improved = !has_prev || is_better(value, region_best, history_.sense);
        if (improved) {
            region.success_count++;
            region.failure_count = 0;
            if (region.success_count >= kTurboSuccTol) {
                region.length = std::min(2.0 * region.length, kTurboLengthMax);
                region.success_count = 0;
            }
        } else {
            region.failure_count++;
            region.success_count = 0;
            if (region.failure_count >= kTurboFailTol) {
                region.length /= 2.0;
                region.failure_count = 0;
            }
        }
        if (region.length < kTurboLengthMin) turbo_restart(region, index);
        if (improved) {
            // Recenter on the new incumbent.
            auto layout = unit_layout();
            region.center = encode(config, space_, EncodingScheme::unit, layout).coords;
        }
    }

    /// A collapsed region restarts from a fresh LHS draw: new center, initial
    /// length, cleared counters and ownership.
    void turbo_restart(TrustRegionState& region, std::size_t salt) {
        region.restarts++;
        auto layout = unit_layout();
        auto c = lhs_sample(space_, 1,
                            Rng::mix(seed_, 0x7B3 + 131 * region.region_id + salt))[0];
        region.center = encode(c, space_, EncodingScheme::unit, layout).coords;
        region.length = kTurboLengthInit;
        region.success_count = 0;
        region.failure_count = 0;
        region.owned.clear();
        region_hypers_.erase(region.region_id);
    }

    // -- GA ------------------------------------------------------------------

    Configuration ga_suggest() {
        for (std::size_t i = 0; i < population_.size(); ++i)
            if (!fitness_[i]) return population_[i];
        // Everyone evaluated: breed the next generation and emit its first member.
        ga_breed();
        return population_[0];
    }

    void ga_observe(const Configuration& config, double value) {
        for (std::size_t i = 0; i < population_.size(); ++i) {
            if (!fitness_[i] && population_[i] == config) {
                fitness_[i] = value;
                return;
            }
        }
        // Foreign observation (not a pending member): ignored by the GA state.
    }

    /// Rank-based fitness-proportional selection, uniform crossover, per-knob
    /// mutation with probability 0.1 (numeric: 0.1-unit Gaussian step;
    /// categorical: uniform resample).
    void ga_breed() {
        Rng rng = Rng::derive(seed_, 0x6A + generation_);
        const std::size_t p = population_.size();
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return is_better(*fitness_[a], *fitness_[b], history_.sense);
        });
        // Selection weight of the rank-r member (r=0 best): p - r.
        std::vector<double> cumulative(p);
        double acc = 0.0;
        for (std::size_t r = 0; r < p; ++r) {
            acc += static_cast<double>(p - r);
            cumulative[r] = acc;
        }
        const auto pick_parent = [&]() -> const Configuration& {
            const double u = rng.uniform(0.0, acc);
            for (std::size_t r = 0; r < p; ++r)
                if (u <= cumulative[r]) return population_[order[r]];
            return population_[order[p - 1]];
        };

        std::vector<Configuration> next;
        next.reserve(p);
        for (std::size_t child = 0; child < p; ++child) {
            const Configuration& a = pick_parent();
            const Configuration& b = pick_parent();
            Configuration c;
            c.values.reserve(space_.size());
            for (std::size_t d = 0; d < space_.size(); ++d)
                c.values.push_back(rng.uniform() < 0.5 ? a.values[d] : b.values[d]);
            for (std::size_t d = 0; d < space_.size(); ++d) {
                if (rng.uniform() >= kGaMutationProb) continue;
                const KnobSpec& k = space_.knob(d);
                if (k.kind == KnobKind::categorical) {
                    c.values[d] = k.categories[rng.index(k.num_categories())];
                } else {
                    const double u = detail::unit_of(k, c.values[d]);
                    const double nu = std::clamp(u + kGaMutationStep * rng.normal(), 0.0, 1.0);
                    c.values[d] = detail::value_from_unit(k, nu);
                }
            }
            next.push_back(std::move(c));
        }
        population_ = std::move(next);
        fitness_.assign(population_.size(), std::nullopt);
        ++generation_;
    }

    // -- state ---------------------------------------------------------------

    ConfigSpace space_;
    OptimizerKind kind_;
    std::uint64_t seed_;
    std::size_t budget_;
    std::size_t n_init_;
    History history_;
    std::vector<Configuration> init_design_;
    std::optional<Configuration> last_suggested_;
    std::size_t fallback_count_ = 0;
    double tpe_gamma_ = kTpeGamma;

    std::optional<HyperFitResult> hypers_;

    // TuRBO
    std::vector<TrustRegionState> regions_;
    std::map<std::size_t, HyperFitResult> region_hypers_;
    std::optional<std::size_t> pending_region_;
    std::shared_ptr<const EncodingLayout> unit_layout_;

    // GA
    std::vector<Configuration> population_;
    std::vector<std::optional<double>> fitness_;
    std::size_t generation_ = 0;
};

inline TuningSession new_session(ConfigSpace space, OptimizerKind kind, Sense sense,
                                 std::size_t budget, std::uint64_t seed, std::size_t n_init = 10) {
    return TuningSession(std::move(space), kind, sense, budget, seed, n_init);
}

} // namespace knobkit
