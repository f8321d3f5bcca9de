#include "sbtune/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sbtune {

namespace {

const char* domain_kind(const ParamDomain& d) {
    if (std::holds_alternative<ContinuousInterval>(d)) return "continuous";
    if (std::holds_alternative<IntegerInterval>(d)) return "integer";
    return "categorical";
}

} // namespace

bool domain_contains(const ParamDomain& domain, const ParamValue& value) {
    if (const auto* c = std::get_if<ContinuousInterval>(&domain)) {
        double x;
        if (const auto* d = std::get_if<double>(&value))
            x = *d;
        else if (const auto* i = std::get_if<std::int64_t>(&value))
            x = static_cast<double>(*i);
        else
            return false;
        return x >= c->lo && x <= c->hi;
    }
    if (const auto* iv = std::get_if<IntegerInterval>(&domain)) {
        const auto* i = std::get_if<std::int64_t>(&value);
        return i && *i >= iv->lo && *i <= iv->hi;
    }
    const auto& cat = std::get<Categorical>(domain);
    const auto* s = std::get_if<std::string>(&value);
    return s && std::find(cat.options.begin(), cat.options.end(), *s) != cat.options.end();
}

std::string param_value_str(const ParamValue& value) {
    if (const auto* d = std::get_if<double>(&value)) {
        return nlohmann::json(*d).dump();
    }
    if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
    return std::get<std::string>(value);
}

const ParamValue& Configuration::at(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end())
        throw std::invalid_argument("configuration has no parameter '" + name + "'");
    return it->second;
}

double Configuration::real(const std::string& name) const {
    const ParamValue& v = at(name);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw std::invalid_argument("parameter '" + name + "' is not numeric");
}

std::int64_t Configuration::integer(const std::string& name) const {
    const ParamValue& v = at(name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    throw std::invalid_argument("parameter '" + name + "' is not an integer");
}

const std::string& Configuration::tag(const std::string& name) const {
    const ParamValue& v = at(name);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw std::invalid_argument("parameter '" + name + "' is not categorical");
}

ParamSpace::ParamSpace(std::string id, std::vector<ParamSpec> specs)
    : id_(std::move(id)), specs_(std::move(specs)) {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const ParamSpec& s = specs_[i];
        if (!index_.emplace(s.name, i).second)
            throw std::invalid_argument("duplicate parameter name '" + s.name + "'");
        if (const auto* c = std::get_if<ContinuousInterval>(&s.domain)) {
            if (!(c->lo < c->hi))
                throw std::invalid_argument("continuous domain of '" + s.name + "' needs lo < hi");
        } else if (const auto* iv = std::get_if<IntegerInterval>(&s.domain)) {
            if (!(iv->lo < iv->hi))
                throw std::invalid_argument("integer domain of '" + s.name + "' needs lo < hi");
        } else if (std::get<Categorical>(s.domain).options.size() < 2) {
            throw std::invalid_argument("categorical domain of '" + s.name + "' needs >= 2 options");
        }
        if (s.grid_levels.empty())
            throw std::invalid_argument("parameter '" + s.name + "' has no grid levels");
        std::set<std::string> seen;
        for (const ParamValue& level : s.grid_levels) {
            if (!domain_contains(s.domain, level))
                throw std::invalid_argument("grid level " + param_value_str(level) +
                                            " of '" + s.name + "' lies outside its domain");
            if (!seen.insert(param_value_str(level)).second)
                throw std::invalid_argument("duplicate grid level in '" + s.name + "'");
        }
    }
}

std::size_t ParamSpace::index_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end())
        throw std::invalid_argument("space '" + id_ + "' has no parameter '" + name + "'");
    return it->second;
}

void ParamSpace::validate(const Configuration& config) const {
    if (config.space_id() != id_)
        throw std::invalid_argument("configuration belongs to space '" + config.space_id() +
                                    "', expected '" + id_ + "'");
    if (config.values().size() != specs_.size())
        throw std::invalid_argument("configuration must assign exactly one value per parameter");
    for (const ParamSpec& s : specs_) {
        const ParamValue& v = config.at(s.name);
        if (!domain_contains(s.domain, v))
            throw std::invalid_argument("value " + param_value_str(v) + " of '" + s.name +
                                        "' lies outside its " + domain_kind(s.domain) + " domain");
    }
}

bool ParamSpace::spec_relevant(std::size_t i, const Configuration& config) const {
    const auto& pred = specs_.at(i).relevant;
    return !pred || pred(config);
}

bool ParamSpace::equivalent(const Configuration& a, const Configuration& b) const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (!spec_relevant(i, a) && !spec_relevant(i, b)) continue;
        if (!(a.at(specs_[i].name) == b.at(specs_[i].name))) return false;
    }
    return true;
}

Configuration ParamSpace::canonical(const Configuration& config) const {
    std::map<std::string, ParamValue> values = config.values();
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (!spec_relevant(i, config)) values[specs_[i].name] = specs_[i].grid_levels.front();
    }
    return Configuration(id_, std::move(values));
}

Configuration ParamSpace::normalize(const Configuration& config) const {
    std::map<std::string, ParamValue> values = config.values();
    for (const ParamSpec& s : specs_) {
        const auto it = values.find(s.name);
        if (it == values.end()) continue;
        if (std::holds_alternative<ContinuousInterval>(s.domain)) {
            if (const auto* i = std::get_if<std::int64_t>(&it->second))
                it->second = static_cast<double>(*i);
        }
    }
    return Configuration(config.space_id(), std::move(values));
}

namespace {

bool selection_is(const Configuration& c, const char* kind) {
    return c.tag("selection") == kind;
}

} // namespace

ParamSpace build_dynamosa_space() {
    std::vector<ParamSpec> specs;
    specs.push_back({"length", IntegerInterval{5, 100},
                     {std::int64_t{5}, std::int64_t{10}, std::int64_t{25}, std::int64_t{50},
                      std::int64_t{100}},
                     nullptr});
    specs.push_back({"mutations", IntegerInterval{0, 25},
                     {std::int64_t{0}, std::int64_t{1}, std::int64_t{5}, std::int64_t{10},
                      std::int64_t{25}},
                     nullptr});
    specs.push_back({"population", IntegerInterval{4, 200},
                     {std::int64_t{4}, std::int64_t{10}, std::int64_t{50}, std::int64_t{100},
                      std::int64_t{200}},
                     nullptr});
    specs.push_back({"crossover_rate", ContinuousInterval{0.0, 1.0},
                     {0.0, 0.25, 0.5, 0.75, 1.0}, nullptr});
    specs.push_back({"selection", Categorical{{"rank", "tournament"}},
                     {std::string("rank"), std::string("tournament")}, nullptr});
    specs.push_back({"rank_bias", ContinuousInterval{1.01, 1.99},
                     {1.2, 1.7},
                     [](const Configuration& c) { return selection_is(c, "rank"); }});
    specs.push_back({"tournament_size", IntegerInterval{1, 20},
                     {std::int64_t{2}, std::int64_t{7}},
                     [](const Configuration& c) { return selection_is(c, "tournament"); }});
    return ParamSpace("dynamosa", std::move(specs));
}

ParamSpace build_mio_space() {
    std::vector<ParamSpec> specs;
    specs.push_back({"length", IntegerInterval{10, 50},
                     {std::int64_t{10}, std::int64_t{25}, std::int64_t{50}}, nullptr});
    specs.push_back({"phase_switch", ContinuousInterval{0.0, 1.0},
                     {0.0, 0.25, 0.5, 0.75, 1.0}, nullptr});
    specs.push_back({"explore_tests_per_target", IntegerInterval{1, 25},
                     {std::int64_t{1}, std::int64_t{10}, std::int64_t{25}}, nullptr});
    specs.push_back({"explore_sampling_prob", ContinuousInterval{0.0, 1.0},
                     {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, nullptr});
    specs.push_back({"explore_mutations", IntegerInterval{1, 25},
                     {std::int64_t{1}, std::int64_t{10}, std::int64_t{25}}, nullptr});
    specs.push_back({"exploit_mutations", IntegerInterval{1, 25},
                     {std::int64_t{1}, std::int64_t{10}, std::int64_t{25}}, nullptr});
    return ParamSpace("mio", std::move(specs));
}

DecodedVector decode_vector(const ParamSpace& space, const std::vector<double>& v) {
    if (v.size() != space.dimension()) {
        std::ostringstream msg;
        msg << "vector has " << v.size() << " coordinates, space '" << space.id() << "' needs "
            << space.dimension();
        throw std::invalid_argument(msg.str());
    }
    std::map<std::string, ParamValue> values;
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const ParamSpec& s = space.spec(i);
        const double x = v[i];
        if (const auto* c = std::get_if<ContinuousInterval>(&s.domain)) {
            double y = x;
            if (x < c->lo || x > c->hi) {
                y = std::clamp(x, c->lo, c->hi);
                warnings.push_back("'" + s.name + "' clamped to bounds");
            }
            values[s.name] = y;
        } else if (const auto* iv = std::get_if<IntegerInterval>(&s.domain)) {
            // half-away-from-zero, then clamp
            const auto rounded = static_cast<std::int64_t>(std::llround(x));
            if (x < static_cast<double>(iv->lo) || x > static_cast<double>(iv->hi))
                warnings.push_back("'" + s.name + "' clamped to bounds");
            values[s.name] = std::clamp(rounded, iv->lo, iv->hi);
        } else {
            const auto& cat = std::get<Categorical>(s.domain);
            const auto count = static_cast<std::int64_t>(cat.options.size());
            auto idx = static_cast<std::int64_t>(std::floor(x));
            if (x < 0.0 || x >= static_cast<double>(count))
                warnings.push_back("'" + s.name + "' clamped to a valid option");
            idx = std::clamp<std::int64_t>(idx, 0, count - 1);
            values[s.name] = cat.options[static_cast<std::size_t>(idx)];
        }
    }
    return DecodedVector{Configuration(space.id(), std::move(values)), std::move(warnings)};
}

std::vector<double> encode_config(const ParamSpace& space, const Configuration& config) {
    space.validate(config);
    std::vector<double> v(space.dimension());
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const ParamSpec& s = space.spec(i);
        const ParamValue& value = config.at(s.name);
        if (std::holds_alternative<ContinuousInterval>(s.domain)) {
            v[i] = config.real(s.name);
        } else if (std::holds_alternative<IntegerInterval>(s.domain)) {
            v[i] = static_cast<double>(std::get<std::int64_t>(value));
        } else {
            const auto& cat = std::get<Categorical>(s.domain);
            const auto it =
                std::find(cat.options.begin(), cat.options.end(), std::get<std::string>(value));
            v[i] = static_cast<double>(it - cat.options.begin()) + 0.5;
        }
    }
    return v;
}

std::pair<std::vector<double>, std::vector<double>> vector_bounds(const ParamSpace& space) {
    std::vector<double> lo(space.dimension()), hi(space.dimension());
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        const ParamSpec& s = space.spec(i);
        if (const auto* c = std::get_if<ContinuousInterval>(&s.domain)) {
            lo[i] = c->lo;
            hi[i] = c->hi;
        } else if (const auto* iv = std::get_if<IntegerInterval>(&s.domain)) {
            lo[i] = static_cast<double>(iv->lo);
            hi[i] = static_cast<double>(iv->hi);
        } else {
            lo[i] = 0.0;
            hi[i] = static_cast<double>(std::get<Categorical>(s.domain).options.size());
        }
    }
    return {std::move(lo), std::move(hi)};
}

std::vector<std::pair<std::uint64_t, Configuration>> grid_enumerate(const ParamSpace& space) {
    std::vector<std::pair<std::uint64_t, Configuration>> out;
    std::set<std::string> seen;
    std::vector<std::size_t> odometer(space.dimension(), 0);
    for (;;) {
        std::map<std::string, ParamValue> values;
        for (std::size_t i = 0; i < space.dimension(); ++i)
            values[space.spec(i).name] = space.spec(i).grid_levels[odometer[i]];
        Configuration raw(space.id(), std::move(values));
        Configuration rep = space.canonical(raw);
        if (seen.insert(config_to_json(rep).dump()).second)
            out.emplace_back(static_cast<std::uint64_t>(out.size()) + 1, std::move(rep));

        // lexicographic advance, last dimension fastest
        std::size_t i = space.dimension();
        while (i > 0) {
            --i;
            if (++odometer[i] < space.spec(i).grid_levels.size()) break;
            odometer[i] = 0;
            if (i == 0) return out;
        }
    }
}

namespace {

Configuration dynamosa_config(std::int64_t length, double crossover, std::int64_t mutations,
                              std::int64_t population, double bias, const char* selection,
                              std::int64_t tournament) {
    return Configuration("dynamosa", {{"length", length},
                                      {"mutations", mutations},
                                      {"population", population},
                                      {"crossover_rate", crossover},
                                      {"selection", std::string(selection)},
                                      {"rank_bias", bias},
                                      {"tournament_size", tournament}});
}

Configuration mio_config(std::int64_t length, double phase_switch, std::int64_t tests_per_target,
                         double sampling_prob, std::int64_t explore_mut, std::int64_t exploit_mut) {
    return Configuration("mio", {{"length", length},
                                 {"phase_switch", phase_switch},
                                 {"explore_tests_per_target", tests_per_target},
                                 {"explore_sampling_prob", sampling_prob},
                                 {"explore_mutations", explore_mut},
                                 {"exploit_mutations", exploit_mut}});
}

const std::map<std::string, Configuration>& preset_registry() {
    static const std::map<std::string, Configuration> registry = {
        {"dynamosa-default", dynamosa_config(40, 0.75, 1, 50, 1.7, "tournament", 5)},
        {"dynamosa-gs", dynamosa_config(100, 0.75, 1, 4, 1.2, "rank", 5)},
        {"dynamosa-de-1+1", dynamosa_config(53, 0.7371902799042689, 3, 18,
                                            1.3880136909602547, "rank", 4)},
        {"dynamosa-de-1+10", dynamosa_config(39, 0.6761984293507988, 2, 18,
                                             1.340019211181281, "rank", 12)},
        {"dynamosa-de-1+0", dynamosa_config(48, 0.6480085675338735, 3, 10,
                                            1.681839842637804, "rank", 4)},
        {"dynamosa-de-10+1", dynamosa_config(45, 0.5725919133789719, 4, 8,
                                             1.4399447184211887, "rank", 12)},
        {"dynamosa-de-0+1", dynamosa_config(46, 0.5485404465990583, 3, 10,
                                            1.3417410413300472, "rank", 3)},
        {"mio-default", mio_config(40, 0.5, 10, 0.5, 1, 10)},
        {"mio-gs-114", mio_config(10, 0.0, 10, 0.666666666666666, 1, 10)},
        {"mio-gs-325", mio_config(10, 0.25, 1, 0.333333333333333, 1, 1)},
        {"mio-de-1+1", mio_config(48, 0.761911379260028, 24, 0.6725632331222376, 1, 5)},
        {"mio-de-1+10", mio_config(12, 0.09257220676705963, 16, 0.7281693389867376, 6, 1)},
        {"mio-de-1+0", mio_config(28, 0.09293011967714027, 1, 0.02319032555223932, 6, 2)},
        {"mio-de-10+1", mio_config(17, 0.2952122304290511, 24, 0.31171486653710284, 7, 4)},
        {"mio-de-0+1", mio_config(35, 0.07844694968476967, 16, 0.3325342365940621, 1, 13)},
    };
    return registry;
}

} // namespace

Configuration preset(const std::string& name) {
    const auto& registry = preset_registry();
    const auto it = registry.find(name);
    if (it == registry.end()) {
        std::string msg = "unknown preset '" + name + "'; available:";
        for (const auto& [key, value] : registry) msg += " " + key;
        throw std::invalid_argument(msg);
    }
    // any tabulated value outside its tuning bound is rejected here
    const Configuration& config = it->second;
    if (config.space_id() == "dynamosa") {
        static const ParamSpace space = build_dynamosa_space();
        space.validate(config);
    } else {
        static const ParamSpace space = build_mio_space();
        space.validate(config);
    }
    return config;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [key, value] : preset_registry()) names.push_back(key);
    return names;
}

nlohmann::json config_to_json(const Configuration& config) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [name, value] : config.values()) {
        std::visit([&](const auto& x) { values[name] = x; }, value);
    }
    return nlohmann::json{{"space", config.space_id()}, {"values", std::move(values)}};
}

Configuration config_from_json(const nlohmann::json& j) {
    std::map<std::string, ParamValue> values;
    for (const auto& [name, v] : j.at("values").items()) {
        if (v.is_number_float())
            values[name] = v.get<double>();
        else if (v.is_number_integer() || v.is_number_unsigned())
            values[name] = v.get<std::int64_t>();
        else if (v.is_string())
            values[name] = v.get<std::string>();
        else
            throw std::invalid_argument("parameter '" + name + "' has unsupported JSON type");
    }
    return Configuration(j.at("space").get<std::string>(), std::move(values));
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_digest(const Configuration& config) {
    return fnv1a64(config_to_json(config).dump());
}

} // namespace sbtune
