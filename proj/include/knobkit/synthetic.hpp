#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "knobkit/csv.hpp"
#include "knobkit/history.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/space.hpp"

namespace knobkit {

/// Seeded analytic tuning objective over an arbitrary space, built to behave
/// like a database knob response surface at desk scale:
///   f = base + sum_numeric c_d (u_d - m_d)^2 + sum_categorical offset_d[cat]
///            + beta (u_p - m_p)(u_q - m_q)
/// with u the unit coordinate of each knob. Categorical offsets are
/// independent draws, so they are not monotone in category index; the best
/// category of each knob has offset 0. The interaction couples the first two
/// continuous knobs with |beta| < 2 sqrt(c_p c_q), keeping the quadratic form
/// positive definite, so the analytic optimum takes every numeric knob at its
/// center m_d (integers at the nearest grid point; the problem stays
/// separable across integer knobs) and every categorical knob at its
/// zero-offset category. Lower is better.
class SyntheticObjective {
public:
    /// A fully pinned family member. coef/center cover every knob (entries for
    /// categorical knobs are ignored), offsets holds one vector per knob
    /// (empty for numeric knobs, per-category for categorical ones, minimum
    /// shifted to 0 so the optimum stays analytic). beta couples the two
    /// continuous knobs named by pair and must keep the quadratic form
    /// positive definite.
    SyntheticObjective(ConfigSpace space, std::vector<double> coef, std::vector<double> center,
                       std::vector<std::vector<double>> offsets,
                       std::pair<std::size_t, std::size_t> interaction, double beta, double base)
        : space_(std::move(space)),
          coef_(std::move(coef)),
          center_(std::move(center)),
          offsets_(std::move(offsets)),
          pair_(interaction),
          beta_(beta),
          base_(base) {
        if (coef_.size() != space_.size() || center_.size() != space_.size() ||
            offsets_.size() != space_.size())
            throw ValidationError("synthetic objective: parameter lengths must match the space");
        for (std::size_t d = 0; d < space_.size(); ++d) {
            const KnobSpec& k = space_.knob(d);
            if (k.kind == KnobKind::categorical) {
                if (offsets_[d].size() != k.num_categories())
                    throw ValidationError("synthetic objective: offset count mismatch on '" +
                                          k.name + "'");
                double lo = offsets_[d][0];
                for (double o : offsets_[d]) lo = std::min(lo, o);
                for (auto& o : offsets_[d]) o -= lo;
            } else {
                if (!offsets_[d].empty())
                    throw ValidationError("synthetic objective: offsets on numeric knob '" +
                                          k.name + "'");
                if (!(coef_[d] > 0.0) || !(center_[d] >= 0.0 && center_[d] <= 1.0))
                    throw ValidationError("synthetic objective: bad curvature on '" + k.name +
                                          "'");
            }
        }
        if (beta_ != 0.0) {
            const auto [p, q] = pair_;
            if (p == q || p >= space_.size() || q >= space_.size() ||
                space_.knob(p).kind != KnobKind::continuous ||
                space_.knob(q).kind != KnobKind::continuous)
                throw ValidationError("synthetic objective: interaction needs two distinct "
                                      "continuous knobs");
            if (beta_ * beta_ >= 4.0 * coef_[p] * coef_[q])
                throw ValidationError("synthetic objective: interaction breaks convexity");
        }
    }

    SyntheticObjective(ConfigSpace space, std::uint64_t seed)
        : space_(std::move(space)), seed_(seed) {
        coef_.resize(space_.size());
        center_.resize(space_.size());
        offsets_.resize(space_.size());
        std::vector<std::size_t> continuous;
        for (std::size_t d = 0; d < space_.size(); ++d) {
            Rng rng = Rng::derive(seed, 0x5E0000 + d);
            const KnobSpec& k = space_.knob(d);
            if (k.kind == KnobKind::categorical) {
                const std::size_t kc = k.num_categories();
                const double amplitude = std::exp(rng.uniform(std::log(0.2), std::log(3.0)));
                double min_offset = 0.0;
                offsets_[d].resize(kc);
                for (std::size_t c = 0; c < kc; ++c) {
                    offsets_[d][c] = amplitude * rng.uniform();
                    if (c == 0 || offsets_[d][c] < min_offset) min_offset = offsets_[d][c];
                }
                for (auto& o : offsets_[d]) o -= min_offset;
            } else {
                coef_[d] = std::exp(rng.uniform(std::log(0.3), std::log(6.0)));
                center_[d] = rng.uniform(0.1, 0.9);
                if (k.kind == KnobKind::continuous) continuous.push_back(d);
            }
        }
        Rng rng = Rng::derive(seed, 0x5E1000);
        base_ = rng.uniform(1.0, 3.0);
        if (continuous.size() >= 2) {
            pair_ = {continuous[0], continuous[1]};
            const double rho = rng.uniform(-0.6, 0.6);
            beta_ = rho * 2.0 * std::sqrt(coef_[pair_.first] * coef_[pair_.second]);
        }
    }

    const ConfigSpace& space() const { return space_; }
    Sense sense() const { return Sense::minimize; }
    std::uint64_t seed() const { return seed_; }

    double operator()(const Configuration& c) const {
        space_.validate(c);
        double f = base_;
        double dev_p = 0.0, dev_q = 0.0;
        for (std::size_t d = 0; d < space_.size(); ++d) {
            const KnobSpec& k = space_.knob(d);
            if (k.kind == KnobKind::categorical) {
                f += offsets_[d][k.category_index(std::get<std::string>(c.values[d]))];
            } else {
                const double dev = detail::unit_of(k, c.values[d]) - center_[d];
                f += coef_[d] * dev * dev;
                if (beta_ != 0.0 && d == pair_.first) dev_p = dev;
                if (beta_ != 0.0 && d == pair_.second) dev_q = dev;
            }
        }
        return f + beta_ * dev_p * dev_q;
    }

    /// Exact minimizer: numeric knobs at their centers (integers at the
    /// nearest representable grid point), categoricals at the zero-offset
    /// category.
    Configuration analytic_optimum() const {
        Configuration c;
        c.values.reserve(space_.size());
        for (std::size_t d = 0; d < space_.size(); ++d) {
            const KnobSpec& k = space_.knob(d);
            if (k.kind == KnobKind::categorical) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < offsets_[d].size(); ++j)
                    if (offsets_[d][j] < offsets_[d][best]) best = j;
                c.values.push_back(k.categories[best]);
            } else {
                c.values.push_back(detail::value_from_unit(k, center_[d]));
            }
        }
        return c;
    }

    double optimum_value() const { return (*this)(analytic_optimum()); }

private:
    ConfigSpace space_;
    std::uint64_t seed_ = 0;
    std::vector<double> coef_;
    std::vector<double> center_;
    std::vector<std::vector<double>> offsets_;
    std::pair<std::size_t, std::size_t> pair_{0, 0};
    double beta_ = 0.0;
    double base_ = 0.0;
};

/// The shipped 20-knob heterogeneous benchmark space: 8 continuous, 6
/// integer, 6 categorical knobs with database-flavored domains.
inline ConfigSpace benchmark_space_20() {
    return ConfigSpace(
        "db20",
        {KnobSpec::make_continuous("buffer_pool_gb", 0.25, 16.0, 1.0),
         KnobSpec::make_continuous("cache_hit_target", 0.5, 0.99, 0.9),
         KnobSpec::make_continuous("checkpoint_completion", 0.1, 0.9, 0.5),
         KnobSpec::make_continuous("dirty_page_ratio", 0.05, 0.9, 0.3),
         KnobSpec::make_continuous("io_capacity_scale", 0.1, 4.0, 1.0),
         KnobSpec::make_continuous("join_buffer_mb", 0.25, 64.0, 1.0),
         KnobSpec::make_continuous("sort_buffer_mb", 0.25, 64.0, 2.0),
         KnobSpec::make_continuous("wal_buffer_mb", 1.0, 128.0, 16.0),
         KnobSpec::make_integer("io_threads", 1, 64, 8),
         KnobSpec::make_integer("purge_threads", 1, 8, 4),
         KnobSpec::make_integer("flush_neighbors", 0, 2, 1),
         KnobSpec::make_integer("page_cleaners", 1, 16, 4),
         KnobSpec::make_integer("lru_scan_depth", 128, 8192, 1024),
         KnobSpec::make_integer("open_files_limit", 256, 16384, 4096),
         KnobSpec::make_categorical("flush_method", {"fsync", "o_direct", "o_dsync", "littlesync"},
                                    "fsync"),
         KnobSpec::make_categorical("compression", {"none", "lz4", "zlib", "zstd"}, "none"),
         KnobSpec::make_categorical("isolation",
                                    {"read_committed", "repeatable_read", "serializable"},
                                    "repeatable_read"),
         KnobSpec::make_categorical("checksum_algo", {"none", "crc32", "strict_crc32"}, "crc32"),
         KnobSpec::make_categorical("stats_mode", {"off", "sampled", "full"}, "sampled"),
         KnobSpec::make_categorical("log_compression", {"off", "lz4", "zstd"}, "off")});
}

/// Categorical-heavy space for encoding comparisons: the response depends
/// sharply on category choices, so treating category indices as ordinal
/// coordinates misleads a numeric kernel.
inline ConfigSpace heterogeneity_space() {
    return ConfigSpace(
        "hetero",
        {KnobSpec::make_continuous("scan_cost", 0.0, 1.0, 0.5),
         KnobSpec::make_continuous("random_page_cost", 0.0, 1.0, 0.5),
         KnobSpec::make_continuous("work_mem_scale", 0.0, 1.0, 0.5),
         KnobSpec::make_categorical("planner_mode", {"a", "b", "c", "d", "e"}, "a"),
         KnobSpec::make_categorical("storage_layout", {"row", "column", "hybrid", "packed"},
                                    "row"),
         KnobSpec::make_categorical("scheduler", {"fifo", "fair", "deadline", "batch", "idle"},
                                    "fifo"),
         KnobSpec::make_categorical("victim_policy", {"lru", "clock", "arc", "fifo"}, "lru")});
}

/// The two pinned objectives used to compare categorical encodings, both over
/// heterogeneity_space(). Category offsets dominate the numeric terms and
/// follow high-variation patterns in index order: adjacent categories land
/// far apart, so a kernel that reads category indices as positions on a line
/// has to model structure at the width of a single index step, while an
/// encoding that treats categories symmetrically sees plain per-level
/// effects. Best categories sit away from pattern endpoints.
inline std::array<SyntheticObjective, 2> heterogeneity_pair() {
    const ConfigSpace space = heterogeneity_space();
    auto scaled = [](double a, std::initializer_list<double> shape) {
        std::vector<double> out;
        for (double s : shape) out.push_back(a * s);
        return out;
    };
    SyntheticObjective first(space, {1.2, 0.8, 1.6, 0, 0, 0, 0}, {0.3, 0.7, 0.5, 0, 0, 0, 0},
                             {{},
                              {},
                              {},
                              scaled(2.6, {0.9, 0.1, 1.0, 0.0, 0.7}),
                              scaled(2.2, {0.0, 0.9, 0.25, 1.0}),
                              scaled(3.0, {0.55, 1.0, 0.0, 0.8, 0.3}),
                              scaled(2.4, {1.0, 0.15, 0.85, 0.0})},
                             {0, 1}, 0.78, 1.5);
    SyntheticObjective second(space, {0.9, 1.5, 1.1, 0, 0, 0, 0}, {0.6, 0.4, 0.25, 0, 0, 0, 0},
                              {{},
                               {},
                               {},
                               scaled(2.9, {0.3, 1.0, 0.0, 0.85, 0.45}),
                               scaled(2.5, {0.9, 0.0, 1.0, 0.4}),
                               scaled(2.1, {0.0, 0.75, 0.2, 1.0, 0.55}),
                               scaled(2.8, {0.6, 1.0, 0.0, 0.8})},
                              {0, 1}, -0.81, 2.0);
    return {std::move(first), std::move(second)};
}

/// Uniformly sampled dataset of one objective in the external CSV schema
/// (knob columns + value + status), for exercising the benchmark build
/// pipeline.
inline CsvTable synthetic_dataset(const SyntheticObjective& objective, std::size_t n,
                                  std::uint64_t seed) {
    const ConfigSpace& space = objective.space();
    CsvTable t;
    for (const auto& k : space.knobs()) t.header.push_back(k.name);
    t.header.push_back("value");
    t.header.push_back("status");
    const auto configs = random_sample(space, n, seed);
    for (const auto& c : configs) {
        std::vector<std::string> row;
        row.reserve(space.size() + 2);
        for (std::size_t d = 0; d < space.size(); ++d) {
            const KnobSpec& k = space.knob(d);
            switch (k.kind) {
                case KnobKind::continuous:
                    row.push_back(format_double(std::get<double>(c.values[d])));
                    break;
                case KnobKind::integer:
                    row.push_back(std::to_string(std::get<std::int64_t>(c.values[d])));
                    break;
                case KnobKind::categorical:
                    row.push_back(std::get<std::string>(c.values[d]));
                    break;
            }
        }
        row.push_back(format_double(objective(c)));
        row.push_back("ok");
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace knobkit
