#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metashap/attribution.hpp"
#include "metashap/space.hpp"

namespace metashap {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Interval&) const = default;
};

struct TuningRange {
    std::string param_name;
    std::vector<Interval> intervals;      // raw units; numeric params
    std::vector<std::string> categories;  // categorical params
    double peak_smoothed_shap = 0.0;
    int support = 0;
    bool full_bounds_fallback = false;

    bool operator==(const TuningRange&) const = default;
};

struct RangeOptions {
    double window_fraction = 0.05;
    double tau = 0.5;
};

// Width of the centered moving average: max(5, ceil(window_fraction * n)).
std::size_t smoothing_window(std::size_t n, double window_fraction);

// Centered moving average; the window shrinks at both ends.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/**
 * Tuning intervals for one parameter from per-sample encoded values and SHAP
 * values. Interval ends sit halfway between the last sample inside and the
 * first sample outside (in encoded units), or at the parameter bound.
 */
TuningRange extract_ranges(const ParamSpec& spec, std::span<const double> encoded_values, std::span<const double> phi,
                           const RangeOptions& options = {});

// Identity-encoded continuous parameter bounded by the sample range.
TuningRange extract_ranges(std::span<const double> values, std::span<const double> phi,
                           const RangeOptions& options = {});

struct RangePlotData {
    std::vector<double> value; // raw units, ascending
    std::vector<double> phi;
    std::vector<double> smoothed_phi;
};

RangePlotData range_plot_data(const ParamSpec& spec, std::span<const double> encoded_values,
                              std::span<const double> phi, double window_fraction);

struct RankedParam {
    std::string name;
    double importance = 0.0;

    bool operator==(const RankedParam&) const = default;
};

struct InteractionHighlight {
    std::string first;
    std::string second;
    double value = 0.0;

    bool operator==(const InteractionHighlight&) const = default;
};

struct TuningReport {
    std::string algorithm;
    std::string dataset;
    std::vector<RankedParam> ranking;
    std::vector<std::string> selected;
    std::vector<TuningRange> ranges; // one per selected param, same order
    Config fixed;
    std::vector<InteractionHighlight> interactions;
    double surrogate_r2 = 0.0;
    std::optional<Config> warm_start; // best neighbor configuration
    nlohmann::json provenance = nlohmann::json::object();

    const TuningRange* range_for(const std::string& name) const;
    bool operator==(const TuningReport&) const = default;
};

struct ReportOptions {
    int top_m = 3;
    RangeOptions ranges;
    double interaction_fraction = 0.25;  // of the largest off-diagonal magnitude
    double interaction_floor = 1e-3;     // absolute minimum magnitude
    double interaction_importance_fraction = 0.05; // of the largest global importance
};

TuningReport build_report(const AttributionResult& attr, const InteractionMatrix& inter,
                          const HyperparameterSpace& space, const ReportOptions& options = {});

void to_json(nlohmann::json& j, const TuningRange& range);
void from_json(const nlohmann::json& j, TuningRange& range);
void to_json(nlohmann::json& j, const TuningReport& report);
void from_json(const nlohmann::json& j, TuningReport& report);

} // namespace metashap
