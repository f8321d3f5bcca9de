#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace sbtune {

struct ContinuousInterval {
    double lo = 0.0, hi = 1.0;
};
struct IntegerInterval {
    std::int64_t lo = 0, hi = 1;
};
struct Categorical {
    std::vector<std::string> options;
};

using ParamDomain = std::variant<ContinuousInterval, IntegerInterval, Categorical>;
using ParamValue = std::variant<double, std::int64_t, std::string>;

bool domain_contains(const ParamDomain& domain, const ParamValue& value);
std::string param_value_str(const ParamValue& value);

/// One typed hyperparameter: name, domain, and the discretisation used by
/// grid search. Values of irrelevant parameters (see ParamSpace) are kept
/// in configurations but ignored by the algorithms.
class Configuration;

struct ParamSpec {
    std::string name;
    ParamDomain domain;
    std::vector<ParamValue> grid_levels;
    // nullptr = always relevant
    std::function<bool(const Configuration&)> relevant;
};

/// A full assignment of values for one space. Immutable after construction.
class Configuration {
public:
    Configuration() = default;
    Configuration(std::string space_id, std::map<std::string, ParamValue> values)
        : space_id_(std::move(space_id)), values_(std::move(values)) {}

    const std::string& space_id() const { return space_id_; }
    const std::map<std::string, ParamValue>& values() const { return values_; }

    const ParamValue& at(const std::string& name) const;
    double real(const std::string& name) const;        // coerces integer -> double
    std::int64_t integer(const std::string& name) const;
    const std::string& tag(const std::string& name) const;

    bool operator==(const Configuration& other) const {
        return space_id_ == other.space_id_ && values_ == other.values_;
    }

private:
    std::string space_id_;
    std::map<std::string, ParamValue> values_;
};

/// Ordered list of ParamSpecs; the order defines the DE vector dimensions.
class ParamSpace {
public:
    ParamSpace(std::string id, std::vector<ParamSpec> specs);

    const std::string& id() const { return id_; }
    const std::vector<ParamSpec>& specs() const { return specs_; }
    std::size_t dimension() const { return specs_.size(); }
    const ParamSpec& spec(std::size_t i) const { return specs_.at(i); }
    std::size_t index_of(const std::string& name) const;  // throws on unknown name

    /// Throws std::invalid_argument if the configuration does not have
    /// exactly one in-domain value per spec (or belongs to another space).
    void validate(const Configuration& config) const;

    bool spec_relevant(std::size_t i, const Configuration& config) const;

    /// Equality ignoring parameters irrelevant in both configurations.
    bool equivalent(const Configuration& a, const Configuration& b) const;

    /// Pins every irrelevant parameter to its first grid level.
    Configuration canonical(const Configuration& config) const;

    /// Coerces integral JSON numbers to double for continuous specs.
    Configuration normalize(const Configuration& config) const;

private:
    std::string id_;
    std::vector<ParamSpec> specs_;
    std::map<std::string, std::size_t> index_;
};

struct DecodedVector {
    Configuration config;
    std::vector<std::string> warnings;  // one entry per clamped coordinate
};

/// The 7-dimensional DynaMOSA tuning space: length, mutations, population,
/// crossover rate, selection kind, rank bias, tournament size.
ParamSpace build_dynamosa_space();

/// The 6-dimensional MIO tuning space: length, phase switch, exploration
/// tests per target, exploration sampling probability, exploration
/// mutations, exploitation mutations. Exploitation keeps one test per
/// target with sampling probability 0; those are not dimensions.
ParamSpace build_mio_space();

/// Continuous coordinates pass through, integer coordinates are rounded
/// half-away-from-zero then clamped, categorical coordinates map via floor
/// to an option index. Out-of-bounds coordinates are clamped and flagged.
DecodedVector decode_vector(const ParamSpace& space, const std::vector<double>& v);

/// Inverse of decode up to rounding: categorical tags map to index + 0.5.
std::vector<double> encode_config(const ParamSpace& space, const Configuration& config);

/// Per-coordinate DE bounds [lo, hi]; categorical coordinates span
/// [0, option count).
std::pair<std::vector<double>, std::vector<double>> vector_bounds(const ParamSpace& space);

/// Lexicographic cartesian product over grid levels in spec order, with
/// configurations differing only in irrelevant parameters collapsed to a
/// single representative. grid_id is the 1-based position in the list.
std::vector<std::pair<std::uint64_t, Configuration>> grid_enumerate(const ParamSpace& space);

/// Named configurations (algorithm defaults and the tuned settings).
Configuration preset(const std::string& name);
std::vector<std::string> preset_names();

/// JSON form: {"space": <id>, "values": {name: value}}. Categorical values
/// serialise as strings, integers as integers, reals with full precision.
nlohmann::json config_to_json(const Configuration& config);
Configuration config_from_json(const nlohmann::json& j);

/// Stable 64-bit FNV-1a digest of the canonical JSON form.
std::uint64_t config_digest(const Configuration& config);

std::uint64_t fnv1a64(const std::string& bytes);

} // namespace sbtune
