#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "knobkit/error.hpp"
#include "knobkit/rng.hpp"

namespace knobkit {

enum class KnobKind { continuous, integer, categorical };

/// Value of a single knob. Continuous knobs hold doubles, integer knobs hold
/// 64-bit integers, categorical knobs hold a category label.
using KnobValue = std::variant<double, std::int64_t, std::string>;

inline const char* to_string(KnobKind k) {
    switch (k) {
        case KnobKind::continuous: return "continuous";
        case KnobKind::integer: return "integer";
        case KnobKind::categorical: return "categorical";
    }
    return "?";
}

/// One tunable knob: its kind, domain and default value.
struct KnobSpec {
    std::string name;
    KnobKind kind = KnobKind::continuous;
    double lower = 0.0;               // continuous / integer only
    double upper = 1.0;               // continuous / integer only
    std::vector<std::string> categories;  // categorical only
    KnobValue default_value;

    static KnobSpec make_continuous(std::string name, double lo, double hi, double def) {
        KnobSpec k;
        k.name = std::move(name);
        k.kind = KnobKind::continuous;
        k.lower = lo;
        k.upper = hi;
        k.default_value = def;
        return k;
    }

    static KnobSpec make_integer(std::string name, std::int64_t lo, std::int64_t hi, std::int64_t def) {
        KnobSpec k;
        k.name = std::move(name);
        k.kind = KnobKind::integer;
        k.lower = static_cast<double>(lo);
        k.upper = static_cast<double>(hi);
        k.default_value = def;
        return k;
    }

    static KnobSpec make_categorical(std::string name, std::vector<std::string> cats, std::string def) {
        KnobSpec k;
        k.name = std::move(name);
        k.kind = KnobKind::categorical;
        k.categories = std::move(cats);
        k.default_value = std::move(def);
        return k;
    }

    std::size_t num_categories() const { return categories.size(); }

    std::size_t category_index(const std::string& label) const {
        for (std::size_t i = 0; i < categories.size(); ++i) {
            if (categories[i] == label) return i;
        }
        throw ValidationError("knob '" + name + "': unknown category '" + label + "'");
    }

    bool contains(const KnobValue& v) const {
        switch (kind) {
            case KnobKind::continuous:
                if (!std::holds_alternative<double>(v)) return false;
                return std::get<double>(v) >= lower && std::get<double>(v) <= upper;
            case KnobKind::integer:
                if (!std::holds_alternative<std::int64_t>(v)) return false;
                return static_cast<double>(std::get<std::int64_t>(v)) >= lower &&
                       static_cast<double>(std::get<std::int64_t>(v)) <= upper;
            case KnobKind::categorical:
                if (!std::holds_alternative<std::string>(v)) return false;
                return std::find(categories.begin(), categories.end(), std::get<std::string>(v)) !=
                       categories.end();
        }
        return false;
    }

    void validate() const {
        if (name.empty()) throw ValidationError("knob with empty name");
        if (kind == KnobKind::categorical) {
            if (categories.empty())
                throw ValidationError("knob '" + name + "': categorical with no categories");
            for (std::size_t i = 0; i < categories.size(); ++i)
                for (std::size_t j = i + 1; j < categories.size(); ++j)
                    if (categories[i] == categories[j])
                        throw ValidationError("knob '" + name + "': duplicate category '" +
                                              categories[i] + "'");
        } else {
            if (!(lower < upper))
                throw ValidationError("knob '" + name + "': lower bound must be below upper bound");
            if (kind == KnobKind::integer &&
                (std::floor(lower) != lower || std::floor(upper) != upper))
                throw ValidationError("knob '" + name + "': integer bounds must be integral");
        }
        if (!contains(default_value))
            throw ValidationError("knob '" + name + "': default value outside the declared domain");
    }
};

/// A complete configuration: one value per knob, in space order.
struct Configuration {
    std::vector<KnobValue> values;

    bool operator==(const Configuration& other) const { return values == other.values; }
    bool operator!=(const Configuration& other) const { return !(*this == other); }
};

/// Ordered, immutable collection of knobs. The knob order defines the vector
/// layout used by every encoding.
class ConfigSpace {
public:
    ConfigSpace() = default;

    ConfigSpace(std::string name, std::vector<KnobSpec> knobs)
        : name_(std::move(name)), knobs_(std::move(knobs)) {
        for (const auto& k : knobs_) k.validate();
        for (std::size_t i = 0; i < knobs_.size(); ++i)
            for (std::size_t j = i + 1; j < knobs_.size(); ++j)
                if (knobs_[i].name == knobs_[j].name)
                    throw ValidationError("duplicate knob name '" + knobs_[i].name + "'");
    }

    const std::string& name() const { return name_; }
    const std::vector<KnobSpec>& knobs() const { return knobs_; }
    std::size_t size() const { return knobs_.size(); }
    const KnobSpec& knob(std::size_t i) const { return knobs_.at(i); }

    const KnobSpec& knob(const std::string& name) const { return knobs_[index_of(name)]; }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < knobs_.size(); ++i)
            if (knobs_[i].name == name) return i;
        throw ValidationError("unknown knob '" + name + "'");
    }

    bool has(const std::string& name) const {
        for (const auto& k : knobs_)
            if (k.name == name) return true;
        return false;
    }

    Configuration default_configuration() const {
        Configuration c;
        c.values.reserve(knobs_.size());
        for (const auto& k : knobs_) c.values.push_back(k.default_value);
        return c;
    }

    bool valid(const Configuration& c) const {
        if (c.values.size() != knobs_.size()) return false;
        for (std::size_t i = 0; i < knobs_.size(); ++i)
            if (!knobs_[i].contains(c.values[i])) return false;
        return true;
    }

    void validate(const Configuration& c) const {
        if (c.values.size() != knobs_.size())
            throw ValidationError("configuration has " + std::to_string(c.values.size()) +
                                  " values, space '" + name_ + "' has " +
                                  std::to_string(knobs_.size()) + " knobs");
        for (std::size_t i = 0; i < knobs_.size(); ++i)
            if (!knobs_[i].contains(c.values[i]))
                throw ValidationError("knob '" + knobs_[i].name + "': value outside domain");
    }

private:
    std::string name_;
    std::vector<KnobSpec> knobs_;
};

// ---------------------------------------------------------------------------
// Encodings

enum class EncodingScheme { unit, unit_onehot, raw };

inline const char* to_string(EncodingScheme s) {
    switch (s) {
        case EncodingScheme::unit: return "unit";
        case EncodingScheme::unit_onehot: return "unit_onehot";
        case EncodingScheme::raw: return "raw";
    }
    return "?";
}

/// Column layout of an encoding: which columns belong to which knob.
struct EncodingLayout {
    struct Span {
        std::size_t offset = 0;
        std::size_t width = 1;
    };
    EncodingScheme scheme = EncodingScheme::unit;
    std::vector<Span> spans;  // one per knob, in space order
    std::size_t dim = 0;
};

inline EncodingLayout layout_for(const ConfigSpace& space, EncodingScheme scheme) {
    EncodingLayout layout;
    layout.scheme = scheme;
    layout.spans.reserve(space.size());
    std::size_t offset = 0;
    for (const auto& k : space.knobs()) {
        std::size_t width = 1;
        if (scheme == EncodingScheme::unit_onehot && k.kind == KnobKind::categorical)
            width = k.num_categories();
        layout.spans.push_back({offset, width});
        offset += width;
    }
    layout.dim = offset;
    return layout;
}

/// Fixed-length numeric view of a configuration under some encoding scheme.
struct EncodedVector {
    std::vector<double> coords;
    std::shared_ptr<const EncodingLayout> layout;
};

namespace detail {

inline double unit_of(const KnobSpec& k, const KnobValue& v) {
    switch (k.kind) {
        case KnobKind::continuous:
            return (std::get<double>(v) - k.lower) / (k.upper - k.lower);
        case KnobKind::integer:
            return (static_cast<double>(std::get<std::int64_t>(v)) - k.lower) /
                   (k.upper - k.lower);
        case KnobKind::categorical: {
            const std::size_t n = k.num_categories();
            if (n <= 1) return 0.0;
            return static_cast<double>(k.category_index(std::get<std::string>(v))) /
                   static_cast<double>(n - 1);
        }
    }
    return 0.0;
}

inline KnobValue value_from_unit(const KnobSpec& k, double u) {
    switch (k.kind) {
        case KnobKind::continuous: {
            const double v = k.lower + u * (k.upper - k.lower);
            return std::clamp(v, k.lower, k.upper);
        }
        case KnobKind::integer: {
            const double target = k.lower + u * (k.upper - k.lower);
            const auto v = static_cast<std::int64_t>(std::llround(target));
            const auto lo = static_cast<std::int64_t>(k.lower);
            const auto hi = static_cast<std::int64_t>(k.upper);
            return std::clamp(v, lo, hi);
        }
        case KnobKind::categorical: {
            const auto n = static_cast<std::int64_t>(k.num_categories());
            if (n == 1) return k.categories[0];
            auto idx = static_cast<std::int64_t>(std::llround(u * static_cast<double>(n - 1)));
            idx = std::clamp<std::int64_t>(idx, 0, n - 1);
            return k.categories[static_cast<std::size_t>(idx)];
        }
    }
    return KnobValue{};
}

} // namespace detail

/// Encode a configuration under the given scheme. `unit` maps every knob to a
/// single coordinate in [0,1] (categories as index/(k-1)); `unit_onehot`
/// expands categoricals into one-hot blocks; `raw` passes numeric values
/// through and categoricals as indices.
inline EncodedVector encode(const Configuration& config, const ConfigSpace& space,
                            EncodingScheme scheme,
                            std::shared_ptr<const EncodingLayout> layout = nullptr) {
    space.validate(config);
    if (!layout || layout->scheme != scheme)
        layout = std::make_shared<EncodingLayout>(layout_for(space, scheme));
    EncodedVector vec;
    vec.layout = layout;
    vec.coords.assign(layout->dim, 0.0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const KnobSpec& k = space.knob(i);
        const auto& span = layout->spans[i];
        const KnobValue& v = config.values[i];
        switch (scheme) {
            case EncodingScheme::unit:
                vec.coords[span.offset] = detail::unit_of(k, v);
                break;
            case EncodingScheme::unit_onehot:
                if (k.kind == KnobKind::categorical) {
                    vec.coords[span.offset + k.category_index(std::get<std::string>(v))] = 1.0;
                } else {
                    vec.coords[span.offset] = detail::unit_of(k, v);
                }
                break;
            case EncodingScheme::raw:
                if (k.kind == KnobKind::continuous) {
                    vec.coords[span.offset] = std::get<double>(v);
                } else if (k.kind == KnobKind::integer) {
                    vec.coords[span.offset] =
                        static_cast<double>(std::get<std::int64_t>(v));
                } else {
                    vec.coords[span.offset] =
                        static_cast<double>(k.category_index(std::get<std::string>(v)));
                }
                break;
        }
    }
    return vec;
}

/// Inverse of encode. Integer coordinates round to the nearest integer and
/// clamp; one-hot blocks decode by argmax with lowest-index tie-break.
inline Configuration decode(const EncodedVector& vec, const ConfigSpace& space) {
    if (!vec.layout) throw ValidationError("encoded vector without layout");
    const EncodingLayout& layout = *vec.layout;
    if (vec.coords.size() != layout.dim || layout.spans.size() != space.size())
        throw ValidationError("encoded vector layout does not match space '" + space.name() + "'");
    Configuration config;
    config.values.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const KnobSpec& k = space.knob(i);
        const auto& span = layout.spans[i];
        switch (layout.scheme) {
            case EncodingScheme::unit:
                config.values.push_back(detail::value_from_unit(k, vec.coords[span.offset]));
                break;
            case EncodingScheme::unit_onehot:
                if (k.kind == KnobKind::categorical) {
                    std::size_t best = 0;
                    for (std::size_t j = 1; j < span.width; ++j)
                        if (vec.coords[span.offset + j] > vec.coords[span.offset + best]) best = j;
                    config.values.push_back(k.categories[best]);
                } else {
                    config.values.push_back(
                        detail::value_from_unit(k, vec.coords[span.offset]));
                }
                break;
            case EncodingScheme::raw: {
                const double x = vec.coords[span.offset];
                if (k.kind == KnobKind::continuous) {
                    config.values.push_back(std::clamp(x, k.lower, k.upper));
                } else if (k.kind == KnobKind::integer) {
                    const auto v = static_cast<std::int64_t>(std::llround(x));
                    config.values.push_back(std::clamp(
                        v, static_cast<std::int64_t>(k.lower), static_cast<std::int64_t>(k.upper)));
                } else {
                    auto idx = static_cast<std::int64_t>(std::llround(x));
                    idx = std::clamp<std::int64_t>(idx, 0,
                                                   static_cast<std::int64_t>(k.num_categories()) - 1);
                    config.values.push_back(k.categories[static_cast<std::size_t>(idx)]);
                }
                break;
            }
        }
    }
    return config;
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

// Integer knobs pick the in-stratum integer nearest the drawn target when the
// stratum holds one; narrow ranges fall back to plain rounding, which can
// merge strata.
inline KnobValue lhs_integer_value(const KnobSpec& k, double u, std::size_t stratum, std::size_t n) {
    const auto lo = static_cast<std::int64_t>(k.lower);
    const auto hi = static_cast<std::int64_t>(k.upper);
    const double width = k.upper - k.lower;
    const double target = k.lower + u * width;
    const double stratum_lo = k.lower + width * (static_cast<double>(stratum) / n);
    const double stratum_hi = k.lower + width * (static_cast<double>(stratum + 1) / n);
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    double best_dist = std::numeric_limits<double>::infinity();
    const auto from = std::max(lo, static_cast<std::int64_t>(std::floor(stratum_lo)) - 1);
    const auto to = std::min(hi, static_cast<std::int64_t>(std::ceil(stratum_hi)) + 1);
    for (std::int64_t v = from; v <= to; ++v) {
        const double unit = (static_cast<double>(v) - k.lower) / width;
        auto s = static_cast<std::size_t>(std::floor(unit * static_cast<double>(n)));
        if (s >= n) s = n - 1;  // unit == 1 belongs to the last stratum
        if (s != stratum) continue;
        const double d = std::abs(static_cast<double>(v) - target);
        if (d < best_dist) {
            best_dist = d;
            best = v;
        }
    }
    if (best != std::numeric_limits<std::int64_t>::min()) return best;
    return std::clamp(static_cast<std::int64_t>(std::llround(target)), lo, hi);
}

} // namespace detail

/// Latin hypercube sample of n configurations. Numeric knobs are stratified
/// into n equal-width bins of their unit range, one sample per bin.
/// Categorical knobs cycle a random permutation of the category indices so the
/// per-category counts differ by at most one.
inline std::vector<Configuration> lhs_sample(const ConfigSpace& space, std::size_t n,
                                             std::uint64_t seed) {
    if (n < 1) throw ValidationError("lhs_sample requires n >= 1");
    std::vector<Configuration> out(n);
    for (auto& c : out) c.values.resize(space.size());
    for (std::size_t d = 0; d < space.size(); ++d) {
        const KnobSpec& k = space.knob(d);
        Rng rng = Rng::derive(seed, 0x5A11 + d);
        if (k.kind == KnobKind::categorical) {
            const std::size_t kcats = k.num_categories();
            auto perm = rng.permutation(kcats);
            std::vector<std::size_t> assignment(n);
            for (std::size_t i = 0; i < n; ++i) assignment[i] = perm[i % kcats];
            rng.shuffle(assignment);
            for (std::size_t i = 0; i < n; ++i)
                out[i].values[d] = k.categories[assignment[i]];
        } else {
            auto strata = rng.permutation(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t s = strata[i];
                const double u = (static_cast<double>(s) + rng.uniform()) / static_cast<double>(n);
                if (k.kind == KnobKind::integer) {
                    out[i].values[d] = detail::lhs_integer_value(k, u, s, n);
                } else {
                    out[i].values[d] = detail::value_from_unit(k, u);
                }
            }
        }
    }
    return out;
}

/// n independent uniform draws over the space.
inline std::vector<Configuration> random_sample(const ConfigSpace& space, std::size_t n,
                                                std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0xAB1E);
    std::vector<Configuration> out(n);
    for (auto& c : out) {
        c.values.reserve(space.size());
        for (const auto& k : space.knobs()) {
            if (k.kind == KnobKind::categorical) {
                c.values.push_back(k.categories[rng.index(k.num_categories())]);
            } else if (k.kind == KnobKind::integer) {
                const auto lo = static_cast<std::int64_t>(k.lower);
                const auto hi = static_cast<std::int64_t>(k.upper);
                const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
                c.values.push_back(lo + static_cast<std::int64_t>(rng.index(span)));
            } else {
                c.values.push_back(rng.uniform(k.lower, k.upper));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subspaces

/// A reduced space over a subset of knobs, plus the rule that fills the
/// remaining knobs with their defaults when a full configuration is needed.
class Subspace {
public:
    Subspace(const ConfigSpace& parent, const std::vector<std::string>& selected)
        : parent_(parent) {
        if (selected.empty()) throw ValidationError("subspace selection must not be empty");
        std::vector<KnobSpec> knobs;
        knobs.reserve(selected.size());
        for (const auto& name : selected) {
            parent_indices_.push_back(parent.index_of(name));  // throws on unknown name
            knobs.push_back(parent.knob(parent_indices_.back()));
        }
        reduced_ = ConfigSpace(parent.name() + ":subspace", std::move(knobs));
    }

    const ConfigSpace& space() const { return reduced_; }
    const ConfigSpace& parent() const { return parent_; }

    /// Expand a reduced configuration to the parent space, defaults elsewhere.
    Configuration complete(const Configuration& reduced_config) const {
        reduced_.validate(reduced_config);
        Configuration full = parent_.default_configuration();
        for (std::size_t i = 0; i < parent_indices_.size(); ++i)
            full.values[parent_indices_[i]] = reduced_config.values[i];
        return full;
    }

private:
    ConfigSpace parent_;
    ConfigSpace reduced_;
    std::vector<std::size_t> parent_indices_;
};

inline Subspace subspace(const ConfigSpace& space, const std::vector<std::string>& selected) {
    return Subspace(space, selected);
}

// ---------------------------------------------------------------------------
// Space file parsing

/// Parse a JSON space document:
///   {"name": str, "knobs": [{"name", "type", "min"/"max" or "categories", "default"}]}
/// Knob order in the document is preserved.
inline ConfigSpace parse_space(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ValidationError("space document must be a JSON object");
    if (!doc.contains("knobs") || !doc["knobs"].is_array())
        throw ValidationError("space document missing 'knobs' array");
    const std::string space_name = doc.value("name", "space");
    std::vector<KnobSpec> knobs;
    for (const auto& jk : doc["knobs"]) {
        if (!jk.is_object() || !jk.contains("name") || !jk.contains("type"))
            throw ValidationError("knob entry missing 'name' or 'type'");
        const std::string name = jk["name"].get<std::string>();
        const std::string type = jk["type"].get<std::string>();
        try {
            if (type == "continuous") {
                knobs.push_back(KnobSpec::make_continuous(name, jk.at("min").get<double>(),
                                                          jk.at("max").get<double>(),
                                                          jk.at("default").get<double>()));
            } else if (type == "integer") {
                knobs.push_back(KnobSpec::make_integer(name, jk.at("min").get<std::int64_t>(),
                                                       jk.at("max").get<std::int64_t>(),
                                                       jk.at("default").get<std::int64_t>()));
            } else if (type == "categorical") {
                auto cats = jk.at("categories").get<std::vector<std::string>>();
                std::string def = jk.at("default").is_string()
                                      ? jk.at("default").get<std::string>()
                                      : throw ValidationError("knob '" + name +
                                                              "': categorical default must be a string");
                knobs.push_back(KnobSpec::make_categorical(name, std::move(cats), std::move(def)));
            } else {
                throw ValidationError("knob '" + name + "': unknown type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("knob '" + name + "': " + e.what());
        }
    }
    return ConfigSpace(space_name, std::move(knobs));
}

inline ConfigSpace parse_space_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ValidationError("space document is not valid JSON");
    return parse_space(doc);
}

inline nlohmann::json space_to_json(const ConfigSpace& space) {
    nlohmann::json doc;
    doc["name"] = space.name();
    doc["knobs"] = nlohmann::json::array();
    for (const auto& k : space.knobs()) {
        nlohmann::json jk;
        jk["name"] = k.name;
        jk["type"] = to_string(k.kind);
        if (k.kind == KnobKind::categorical) {
            jk["categories"] = k.categories;
            jk["default"] = std::get<std::string>(k.default_value);
        } else if (k.kind == KnobKind::integer) {
            jk["min"] = static_cast<std::int64_t>(k.lower);
            jk["max"] = static_cast<std::int64_t>(k.upper);
            jk["default"] = std::get<std::int64_t>(k.default_value);
        } else {
            jk["min"] = k.lower;
            jk["max"] = k.upper;
            jk["default"] = std::get<double>(k.default_value);
        }
        doc["knobs"].push_back(std::move(jk));
    }
    return doc;
}

inline nlohmann::json config_to_json(const Configuration& config, const ConfigSpace& space) {
    nlohmann::json out = nlohmann::json::object();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& k = space.knob(i);
        std::visit([&](const auto& v) { out[k.name] = v; }, config.values[i]);
    }
    return out;
}

inline Configuration config_from_json(const nlohmann::json& doc, const ConfigSpace& space) {
    Configuration c;
    c.values.reserve(space.size());
    for (const auto& k : space.knobs()) {
        if (!doc.contains(k.name))
            throw ValidationError("configuration missing knob '" + k.name + "'");
        const auto& jv = doc[k.name];
        switch (k.kind) {
            case KnobKind::continuous: c.values.push_back(jv.get<double>()); break;
            case KnobKind::integer: c.values.push_back(jv.get<std::int64_t>()); break;
            case KnobKind::categorical: c.values.push_back(jv.get<std::string>()); break;
        }
    }
    space.validate(c);
    return c;
}

} // namespace knobkit
