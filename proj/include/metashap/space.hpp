#pragma once

/**
 * Hyperparameter search spaces and the numeric encoding used by the
 * surrogate, the attribution code and the optimizer.
 *
 * Encoding: continuous -> value (log10 when log_scale), integer -> value,
 * categorical -> ordinal index of the label. One encoded dimension per
 * parameter, in declaration order.
 */

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace metashap {

// A raw hyperparameter value: numeric or a category label.
using RawValue = std::variant<double, std::string>;

// Raw configuration keyed by parameter name.
using Config = std::map<std::string, RawValue>;

enum class ParamKind { kContinuous, kInteger, kCategorical };

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& text);

std::string to_string(const RawValue& value);

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::kContinuous;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::string> categories;
    RawValue default_value = 0.0;
    bool log_scale = false;

    static ParamSpec continuous(std::string name, double lo, double hi, double default_value,
                                bool log_scale = false);
    static ParamSpec integer(std::string name, double lo, double hi, double default_value);
    static ParamSpec categorical(std::string name, std::vector<std::string> categories,
                                 std::string default_value);

    // Throws ValidationError when the spec itself is malformed.
    void validate() const;

    bool is_numeric() const { return kind != ParamKind::kCategorical; }

    // Bounds of the encoded coordinate.
    double encoded_lo() const;
    double encoded_hi() const;

    // Throws ValidationError for wrong type, out-of-bounds value or unknown label.
    void check_value(const RawValue& value) const;

    bool operator==(const ParamSpec&) const = default;
};

class HyperparameterSpace {
public:
    HyperparameterSpace() = default;
    explicit HyperparameterSpace(std::vector<ParamSpec> params);

    std::size_t size() const { return params_.size(); }
    const ParamSpec& operator[](std::size_t i) const { return params_[i]; }
    const std::vector<ParamSpec>& params() const { return params_; }

    std::optional<std::size_t> index_of(const std::string& name) const;
    std::vector<std::string> names() const;

    Config default_config() const;

    // Keys match exactly and every value is valid.
    void check_config(const Config& config) const;

    // Stable 64-bit digest of the canonical JSON form.
    std::uint64_t hash() const;

    bool operator==(const HyperparameterSpace&) const = default;

private:
    std::vector<ParamSpec> params_;
};

double encode_value(const ParamSpec& spec, const RawValue& value);
RawValue decode_value(const ParamSpec& spec, double encoded);

std::vector<double> encode(const Config& config, const HyperparameterSpace& space);
Config decode(std::span<const double> encoded, const HyperparameterSpace& space);

void to_json(nlohmann::json& j, const ParamSpec& spec);
void from_json(const nlohmann::json& j, ParamSpec& spec);
void to_json(nlohmann::json& j, const HyperparameterSpace& space);
void from_json(const nlohmann::json& j, HyperparameterSpace& space);

nlohmann::json config_to_json(const Config& config);
Config config_from_json(const nlohmann::json& j);

} // namespace metashap

namespace nlohmann {
template <>
struct adl_serializer<metashap::RawValue> {
    static void to_json(json& j, const metashap::RawValue& value);
    static void from_json(const json& j, metashap::RawValue& value);
};
} // namespace nlohmann
