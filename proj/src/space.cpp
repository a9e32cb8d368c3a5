#include "metashap/space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "metashap/error.hpp"
#include "metashap/random.hpp"

namespace metashap {

const char* to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::kContinuous: return "continuous";
    case ParamKind::kInteger: return "integer";
    case ParamKind::kCategorical: return "categorical";
    }
    return "unknown";
}

ParamKind param_kind_from_string(const std::string& text) {
    if (text == "continuous") return ParamKind::kContinuous;
    if (text == "integer") return ParamKind::kInteger;
    if (text == "categorical") return ParamKind::kCategorical;
    throw ValidationError("unknown parameter kind '" + text + "'");
}

std::string to_string(const RawValue& value) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    std::ostringstream out;
    out.precision(17);
    out << std::get<double>(value);
    return out.str();
}

ParamSpec ParamSpec::continuous(std::string name, double lo, double hi, double default_value,
                                bool log_scale) {
    ParamSpec spec;
    spec.name = std::move(name);
    spec.kind = ParamKind::kContinuous;
    spec.lo = lo;
    spec.hi = hi;
    spec.default_value = default_value;
    spec.log_scale = log_scale;
    spec.validate();
    return spec;
}

ParamSpec ParamSpec::integer(std::string name, double lo, double hi, double default_value) {
    ParamSpec spec;
    spec.name = std::move(name);
    spec.kind = ParamKind::kInteger;
    spec.lo = lo;
    spec.hi = hi;
    spec.default_value = default_value;
    spec.validate();
    return spec;
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<std::string> categories,
                                 std::string default_value) {
    ParamSpec spec;
    spec.name = std::move(name);
    spec.kind = ParamKind::kCategorical;
    spec.lo = 0.0;
    spec.hi = 0.0;
    spec.categories = std::move(categories);
    spec.default_value = std::move(default_value);
    spec.validate();
    return spec;
}

void ParamSpec::validate() const {
    if (name.empty()) throw ValidationError("parameter with empty name");
    if (kind == ParamKind::kCategorical) {
        if (categories.size() < 2) {
            throw ValidationError("categorical parameter '" + name + "' needs >= 2 categories");
        }
        std::set<std::string> unique(categories.begin(), categories.end());
        if (unique.size() != categories.size()) {
            throw ValidationError("categorical parameter '" + name + "' has duplicate labels");
        }
        if (log_scale) throw ValidationError("categorical parameter '" + name + "' cannot be log-scaled");
    } else {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
            throw ValidationError("parameter '" + name + "' requires finite lo < hi");
        }
        if (log_scale && !(lo > 0.0)) {
            throw ValidationError("log-scaled parameter '" + name + "' requires lo > 0");
        }
        if (kind == ParamKind::kInteger) {
            if (log_scale) throw ValidationError("integer parameter '" + name + "' cannot be log-scaled");
            if (std::floor(lo) != lo || std::floor(hi) != hi) {
                throw ValidationError("integer parameter '" + name + "' requires integral bounds");
            }
        }
    }
    check_value(default_value);
}

double ParamSpec::encoded_lo() const {
    if (kind == ParamKind::kCategorical) return 0.0;
    return log_scale ? std::log10(lo) : lo;
}

double ParamSpec::encoded_hi() const {
    if (kind == ParamKind::kCategorical) return static_cast<double>(categories.size() - 1);
    return log_scale ? std::log10(hi) : hi;
}

void ParamSpec::check_value(const RawValue& value) const {
    if (kind == ParamKind::kCategorical) {
        const auto* label = std::get_if<std::string>(&value);
        if (label == nullptr) {
            throw ValidationError("parameter '" + name + "' expects a category label");
        }
        if (std::find(categories.begin(), categories.end(), *label) == categories.end()) {
            throw ValidationError("parameter '" + name + "': unknown category '" + *label + "'");
        }
        return;
    }
    const auto* number = std::get_if<double>(&value);
    if (number == nullptr) {
        throw ValidationError("parameter '" + name + "' expects a number");
    }
    if (!std::isfinite(*number) || *number < lo || *number > hi) {
        throw ValidationError("parameter '" + name + "': value " + to_string(value) +
                              " outside bounds [" + to_string(RawValue{lo}) + ", " +
                              to_string(RawValue{hi}) + "]");
    }
    if (kind == ParamKind::kInteger && std::floor(*number) != *number) {
        throw ValidationError("parameter '" + name + "': value " + to_string(value) +
                              " is not an integer");
    }
}

HyperparameterSpace::HyperparameterSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
    if (params_.empty()) throw ValidationError("hyperparameter space must have at least one parameter");
    std::set<std::string> seen;
    for (const auto& p : params_) {
        p.validate();
        if (!seen.insert(p.name).second) {
            throw ValidationError("duplicate parameter name '" + p.name + "'");
        }
    }
}

std::optional<std::size_t> HyperparameterSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    return std::nullopt;
}

std::vector<std::string> HyperparameterSpace::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.name);
    return out;
}

Config HyperparameterSpace::default_config() const {
    Config config;
    for (const auto& p : params_) config[p.name] = p.default_value;
    return config;
}

void HyperparameterSpace::check_config(const Config& config) const {
    for (const auto& [key, _] : config) {
        if (!index_of(key)) throw ValidationError("config has unknown parameter '" + key + "'");
    }
    for (const auto& p : params_) {
        auto it = config.find(p.name);
        if (it == config.end()) throw ValidationError("config is missing parameter '" + p.name + "'");
        p.check_value(it->second);
    }
}

std::uint64_t HyperparameterSpace::hash() const {
    nlohmann::json j = *this;
    return stream_id(j.dump());
}

double encode_value(const ParamSpec& spec, const RawValue& value) {
    spec.check_value(value);
    switch (spec.kind) {
    case ParamKind::kContinuous: {
        const double v = std::get<double>(value);
        return spec.log_scale ? std::log10(v) : v;
    }
    case ParamKind::kInteger:
        return std::get<double>(value);
    case ParamKind::kCategorical: {
        const auto& label = std::get<std::string>(value);
        auto it = std::find(spec.categories.begin(), spec.categories.end(), label);
        return static_cast<double>(it - spec.categories.begin());
    }
    }
    return 0.0;
}

RawValue decode_value(const ParamSpec& spec, double encoded) {
    switch (spec.kind) {
    case ParamKind::kContinuous: {
        if (!spec.log_scale) return std::clamp(encoded, spec.lo, spec.hi);
        // pow and log10 disagree by a few ulps; among nearby doubles that encode back exactly,
        // take the one with the shortest decimal form
        double v = std::pow(10.0, encoded);
        for (int step = 0; step < 4; ++step) v = std::nextafter(v, 0.0);
        double best = std::pow(10.0, encoded);
        std::size_t best_len = std::numeric_limits<std::size_t>::max();
        for (int step = 0; step <= 8; ++step, v = std::nextafter(v, std::numeric_limits<double>::infinity())) {
            if (std::log10(v) != encoded) continue;
            char buf[32];
            const auto len = static_cast<std::size_t>(std::to_chars(buf, buf + sizeof buf, v).ptr - buf);
            if (len < best_len) best = v, best_len = len;
        }
        return std::clamp(best, spec.lo, spec.hi);
    }
    case ParamKind::kInteger:
        return std::clamp(std::round(encoded), spec.lo, spec.hi);
    case ParamKind::kCategorical: {
        const double last = static_cast<double>(spec.categories.size() - 1);
        const auto idx = static_cast<std::size_t>(std::clamp(std::round(encoded), 0.0, last));
        return spec.categories[idx];
    }
    }
    return 0.0;
}

std::vector<double> encode(const Config& config, const HyperparameterSpace& space) {
    for (const auto& [key, _] : config) {
        if (!space.index_of(key)) throw ValidationError("config has unknown parameter '" + key + "'");
    }
    std::vector<double> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto it = config.find(space[i].name);
        if (it == config.end()) {
            throw ValidationError("config is missing parameter '" + space[i].name + "'");
        }
        out[i] = encode_value(space[i], it->second);
    }
    return out;
}

Config decode(std::span<const double> encoded, const HyperparameterSpace& space) {
    if (encoded.size() != space.size()) {
        throw ValidationError("encoded vector has length " + std::to_string(encoded.size()) +
                              ", space has " + std::to_string(space.size()) + " parameters");
    }
    Config config;
    for (std::size_t i = 0; i < space.size(); ++i) config[space[i].name] = decode_value(space[i], encoded[i]);
    return config;
}

void to_json(nlohmann::json& j, const ParamSpec& spec) {
    j = nlohmann::json{{"name", spec.name}, {"kind", to_string(spec.kind)}, {"default", spec.default_value}};
    if (spec.kind == ParamKind::kCategorical) {
        j["categories"] = spec.categories;
    } else {
        j["lo"] = spec.lo;
        j["hi"] = spec.hi;
        j["log_scale"] = spec.log_scale;
    }
}

void from_json(const nlohmann::json& j, ParamSpec& spec) {
    try {
        spec = ParamSpec{};
        spec.name = j.at("name").get<std::string>();
        spec.kind = param_kind_from_string(j.at("kind").get<std::string>());
        if (spec.kind == ParamKind::kCategorical) {
            spec.categories = j.at("categories").get<std::vector<std::string>>();
            spec.lo = 0.0;
            spec.hi = 0.0;
        } else {
            spec.lo = j.at("lo").get<double>();
            spec.hi = j.at("hi").get<double>();
            spec.log_scale = j.value("log_scale", false);
        }
        spec.default_value = j.at("default").get<RawValue>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed parameter spec: ") + e.what());
    }
    spec.validate();
}

void to_json(nlohmann::json& j, const HyperparameterSpace& space) {
    j = nlohmann::json::array();
    for (const auto& p : space.params()) j.push_back(p);
}

void from_json(const nlohmann::json& j, HyperparameterSpace& space) {
    if (!j.is_array()) throw ValidationError("hyperparameter space must be a JSON array");
    std::vector<ParamSpec> params;
    for (const auto& item : j) params.push_back(item.get<ParamSpec>());
    space = HyperparameterSpace(std::move(params));
}

nlohmann::json config_to_json(const Config& config) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : config) j[k] = v;
    return j;
}

Config config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    Config config;
    for (const auto& [k, v] : j.items()) config[k] = v.get<RawValue>();
    return config;
}

} // namespace metashap

namespace nlohmann {

void adl_serializer<metashap::RawValue>::to_json(json& j, const metashap::RawValue& value) {
    if (const auto* s = std::get_if<std::string>(&value)) {
        j = *s;
    } else {
        j = std::get<double>(value);
    }
}

void adl_serializer<metashap::RawValue>::from_json(const json& j, metashap::RawValue& value) {
    if (j.is_string()) {
        value = j.get<std::string>();
    } else if (j.is_number()) {
        value = j.get<double>();
    } else {
        throw metashap::ValidationError("hyperparameter value must be a number or a string, got " + j.dump());
    }
}

} // namespace nlohmann
