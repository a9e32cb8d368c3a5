#include "metashap/insights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "metashap/error.hpp"

namespace metashap {

namespace {

constexpr std::size_t kMinRangeSamples = 20;

struct SortedSamples {
    std::vector<double> value;
    std::vector<double> phi;
};

SortedSamples sort_samples(std::span<const double> values, std::span<const double> phi) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    SortedSamples out;
    for (auto i : order) {
        out.value.push_back(values[i]);
        out.phi.push_back(phi[i]);
    }
    return out;
}

double to_raw(const ParamSpec& spec, double encoded) {
    return spec.log_scale ? std::clamp(std::pow(10.0, encoded), spec.lo, spec.hi)
                          : std::clamp(encoded, spec.lo, spec.hi);
}

TuningRange categorical_range(const ParamSpec& spec, std::span<const double> encoded_values,
                              std::span<const double> phi, const RangeOptions& options) {
    TuningRange range;
    range.param_name = spec.name;
    std::map<long, std::pair<double, int>> per_category;
    for (std::size_t i = 0; i < encoded_values.size(); ++i) {
        auto& [sum, count] = per_category[std::lround(encoded_values[i])];
        sum += phi[i];
        ++count;
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& [_, sc] : per_category) peak = std::max(peak, sc.first / sc.second);
    range.peak_smoothed_shap = peak;
    if (!(peak > 0.0)) return range;
    for (const auto& [idx, sc] : per_category) {
        const double mean = sc.first / sc.second;
        if (mean >= options.tau * peak && mean > 0.0 && idx >= 0 &&
            static_cast<std::size_t>(idx) < spec.categories.size()) {
            range.categories.push_back(spec.categories[static_cast<std::size_t>(idx)]);
            range.support += sc.second;
        }
    }
    return range;
}

} // namespace

std::size_t smoothing_window(std::size_t n, double window_fraction) {
    const auto scaled = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n)));
    return std::max<std::size_t>(5, scaled);
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    const std::size_t n = values.size();
    const std::size_t before = (window - 1) / 2;
    const std::size_t after = window - 1 - before;
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + values[i];
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= before ? i - before : 0;
        const std::size_t hi = std::min(n - 1, i + after);
        out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

TuningRange extract_ranges(const ParamSpec& spec, std::span<const double> encoded_values, std::span<const double> phi,
                           const RangeOptions& options) {
    if (encoded_values.size() != phi.size()) throw ValidationError("extract_ranges: values and phi differ in length");
    if (encoded_values.size() < kMinRangeSamples) {
        throw ValidationError("extract_ranges needs at least 20 samples, got " + std::to_string(encoded_values.size()));
    }
    if (!(options.window_fraction > 0.0 && options.window_fraction <= 1.0)) {
        throw ValidationError("window_fraction must be in (0, 1]");
    }
    if (!(options.tau > 0.0 && options.tau <= 1.0)) throw ValidationError("tau must be in (0, 1]");
    if (spec.kind == ParamKind::kCategorical) return categorical_range(spec, encoded_values, phi, options);

    TuningRange range;
    range.param_name = spec.name;
    const auto samples = sort_samples(encoded_values, phi);
    const std::size_t n = samples.value.size();
    const std::size_t window = smoothing_window(n, options.window_fraction);
    const auto smoothed = moving_average(samples.phi, window);
    const double peak = *std::max_element(smoothed.begin(), smoothed.end());
    range.peak_smoothed_shap = peak;
    if (!(peak > 0.0)) return range;

    struct Run {
        std::size_t first, last;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(smoothed[i] >= options.tau * peak && smoothed[i] > 0.0)) continue;
        if (!runs.empty() && runs.back().last + 1 == i) {
            runs.back().last = i;
        } else if (!runs.empty() && i - runs.back().last - 1 < window) {
            runs.back().last = i;
        } else {
            runs.push_back({i, i});
        }
    }

    const double enc_lo = spec.encoded_lo(), enc_hi = spec.encoded_hi();
    for (const auto& run : runs) {
        const double lo = run.first == 0 ? enc_lo : 0.5 * (samples.value[run.first - 1] + samples.value[run.first]);
        const double hi =
            run.last + 1 == n ? enc_hi : 0.5 * (samples.value[run.last] + samples.value[run.last + 1]);
        const Interval raw{to_raw(spec, std::max(lo, enc_lo)), to_raw(spec, std::min(hi, enc_hi))};
        if (!(raw.lo < raw.hi)) continue;
        range.intervals.push_back(raw);
        for (std::size_t i = run.first; i <= run.last; ++i) ++range.support;
    }
    return range;
}

TuningRange extract_ranges(std::span<const double> values, std::span<const double> phi, const RangeOptions& options) {
    if (values.empty()) throw ValidationError("extract_ranges needs at least 20 samples, got 0");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    ParamSpec spec;
    spec.name = "value";
    spec.kind = ParamKind::kContinuous;
    spec.lo = *lo;
    spec.hi = *hi > *lo ? *hi : *lo + 1.0;
    spec.default_value = *lo;
    return extract_ranges(spec, values, phi, options);
}

RangePlotData range_plot_data(const ParamSpec& spec, std::span<const double> encoded_values,
                              std::span<const double> phi, double window_fraction) {
    const auto samples = sort_samples(encoded_values, phi);
    RangePlotData out;
    out.smoothed_phi = moving_average(samples.phi, smoothing_window(samples.value.size(), window_fraction));
    out.phi = samples.phi;
    for (double v : samples.value) {
        out.value.push_back(spec.kind == ParamKind::kCategorical ? v : to_raw(spec, v));
    }
    return out;
}

const TuningRange* TuningReport::range_for(const std::string& name) const {
    for (const auto& r : ranges) {
        if (r.param_name == name) return &r;
    }
    return nullptr;
}

TuningReport build_report(const AttributionResult& attr, const InteractionMatrix& inter,
                          const HyperparameterSpace& space, const ReportOptions& options) {
    const std::size_t k = space.size();
    if (options.top_m < 1) throw ValidationError("top_m must be >= 1");
    if (attr.global_importance.size() != k || static_cast<std::size_t>(attr.per_sample_phi.cols()) != k) {
        throw ValidationError("attribution players do not match the search space");
    }

    TuningReport report;
    for (std::size_t d = 0; d < k; ++d) report.ranking.push_back({space[d].name, attr.global_importance[d]});
    std::sort(report.ranking.begin(), report.ranking.end(), [](const RankedParam& a, const RankedParam& b) {
        return a.importance > b.importance || (a.importance == b.importance && a.name < b.name);
    });
    const auto m = std::min(static_cast<std::size_t>(options.top_m), k);
    for (std::size_t r = 0; r < m; ++r) report.selected.push_back(report.ranking[r].name);

    for (const auto& name : report.selected) {
        const auto d = *space.index_of(name);
        const auto& spec = space[d];
        const auto col = static_cast<Eigen::Index>(d);
        std::vector<double> values(attr.explained.col(col).begin(), attr.explained.col(col).end());
        std::vector<double> phi(attr.per_sample_phi.col(col).begin(), attr.per_sample_phi.col(col).end());
        auto range = extract_ranges(spec, values, phi, options.ranges);
        if (spec.kind == ParamKind::kCategorical && range.categories.empty()) {
            range.categories = spec.categories;
            range.full_bounds_fallback = true;
        } else if (spec.kind != ParamKind::kCategorical && range.intervals.empty()) {
            range.intervals = {{spec.lo, spec.hi}};
            range.full_bounds_fallback = true;
        }
        report.ranges.push_back(std::move(range));
    }
    for (const auto& spec : space.params()) {
        if (std::find(report.selected.begin(), report.selected.end(), spec.name) == report.selected.end()) {
            report.fixed[spec.name] = spec.default_value;
        }
    }

    if (inter.values.rows() == static_cast<Eigen::Index>(k) && k > 1) {
        double max_off = 0.0;
        for (Eigen::Index i = 0; i < inter.values.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < inter.values.cols(); ++j) {
                max_off = std::max(max_off, std::abs(inter.values(i, j)));
            }
        }
        const double max_importance =
            *std::max_element(attr.global_importance.begin(), attr.global_importance.end());
        const double threshold = std::max({options.interaction_fraction * max_off, options.interaction_floor,
                                           options.interaction_importance_fraction * max_importance});
        for (Eigen::Index i = 0; i < inter.values.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < inter.values.cols(); ++j) {
                const double v = inter.values(i, j);
                if (std::abs(v) >= threshold) {
                    report.interactions.push_back(
                        {space[static_cast<std::size_t>(i)].name, space[static_cast<std::size_t>(j)].name, v});
                }
            }
        }
        std::stable_sort(report.interactions.begin(), report.interactions.end(),
                         [](const InteractionHighlight& a, const InteractionHighlight& b) {
                             return std::abs(a.value) > std::abs(b.value);
                         });
    }
    return report;
}

void to_json(nlohmann::json& j, const TuningRange& range) {
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : range.intervals) intervals.push_back({iv.lo, iv.hi});
    j = {{"param", range.param_name},
         {"intervals", std::move(intervals)},
         {"categories", range.categories},
         {"peak", range.peak_smoothed_shap},
         {"support", range.support},
         {"full_bounds_fallback", range.full_bounds_fallback}};
}

void from_json(const nlohmann::json& j, TuningRange& range) {
    range = {};
    range.param_name = j.at("param").get<std::string>();
    for (const auto& iv : j.at("intervals")) range.intervals.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    range.categories = j.value("categories", std::vector<std::string>{});
    range.peak_smoothed_shap = j.at("peak").get<double>();
    range.support = j.value("support", 0);
    range.full_bounds_fallback = j.value("full_bounds_fallback", false);
}

void to_json(nlohmann::json& j, const TuningReport& report) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& r : report.ranking) ranking.push_back({{"param", r.name}, {"importance", r.importance}});
    nlohmann::json interactions = nlohmann::json::array();
    for (const auto& h : report.interactions) {
        interactions.push_back({{"pair", {h.first, h.second}}, {"value", h.value}});
    }
    j = {{"algorithm", report.algorithm},
         {"dataset", report.dataset},
         {"ranking", std::move(ranking)},
         {"selected", report.selected},
         {"ranges", report.ranges},
         {"fixed", config_to_json(report.fixed)},
         {"interactions", std::move(interactions)},
         {"surrogate_r2", report.surrogate_r2},
         {"warm_start", report.warm_start ? config_to_json(*report.warm_start) : nlohmann::json()},
         {"provenance", report.provenance}};
}

void from_json(const nlohmann::json& j, TuningReport& report) {
    try {
        report = {};
        report.algorithm = j.at("algorithm").get<std::string>();
        report.dataset = j.at("dataset").get<std::string>();
        for (const auto& r : j.at("ranking")) {
            report.ranking.push_back({r.at("param").get<std::string>(), r.at("importance").get<double>()});
        }
        report.selected = j.at("selected").get<std::vector<std::string>>();
        report.ranges = j.at("ranges").get<std::vector<TuningRange>>();
        report.fixed = config_from_json(j.at("fixed"));
        for (const auto& h : j.at("interactions")) {
            report.interactions.push_back(
                {h.at("pair").at(0).get<std::string>(), h.at("pair").at(1).get<std::string>(), h.at("value").get<double>()});
        }
        report.surrogate_r2 = j.at("surrogate_r2").get<double>();
        if (j.contains("warm_start") && !j.at("warm_start").is_null()) {
            report.warm_start = config_from_json(j.at("warm_start"));
        }
        report.provenance = j.value("provenance", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tuning report: ") + e.what());
    }
}

} // namespace metashap
