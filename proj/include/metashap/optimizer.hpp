#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metashap/gp.hpp"
#include "metashap/insights.hpp"
#include "metashap/space.hpp"

namespace metashap {

// Counts every evaluation of the wrapped function.
class Objective {
public:
    using Function = std::function<double(const Config&)>;

    explicit Objective(Function fn) : fn_(std::move(fn)) {}

    double operator()(const Config& config) {
        ++evaluations_;
        return fn_(config);
    }

    std::size_t evaluations() const { return evaluations_; }

private:
    Function fn_;
    std::size_t evaluations_ = 0;
};

struct TraceRow {
    Config config;
    double observed = 0.0;
    double best_so_far = 0.0;
};

struct BOTrace {
    std::vector<TraceRow> iterations;
    std::string mode = "vanilla";
    int budget = 0;
    std::vector<std::string> warnings;
};

/**
 * Maps points of the unit cube onto configurations. Integer and categorical
 * coordinates are cut into equal cells; `to_unit` returns cell centers.
 */
class SearchDomain {
public:
    virtual ~SearchDomain() = default;
    virtual std::size_t dims() const = 0;
    virtual Config to_config(std::span<const double> u) const = 0;
    virtual std::vector<double> to_unit(const Config& config) const = 0;
};

class FullDomain : public SearchDomain {
public:
    explicit FullDomain(HyperparameterSpace space);

    std::size_t dims() const override { return space_.size(); }
    Config to_config(std::span<const double> u) const override;
    std::vector<double> to_unit(const Config& config) const override;

private:
    HyperparameterSpace space_;
};

/**
 * Selected parameters restricted to their tuning intervals, every other
 * parameter pinned. A parameter with several intervals gets one latent
 * coordinate spread over the intervals in proportion to their encoded width.
 */
class RestrictedDomain : public SearchDomain {
public:
    RestrictedDomain(HyperparameterSpace space, const TuningReport& report);

    std::size_t dims() const override { return axes_.size(); }
    Config to_config(std::span<const double> u) const override;
    std::vector<double> to_unit(const Config& config) const override;

    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    struct Axis {
        std::size_t param = 0;
        std::vector<Interval> encoded; // continuous: intervals in encoded units
        std::vector<Interval> raw;     // the same intervals in raw units
        std::vector<double> levels;    // integer values or category indices
        double total_width = 0.0;
    };

    HyperparameterSpace space_;
    std::vector<Axis> axes_;
    Config pinned_;
    std::vector<std::string> warnings_;
};

struct BOOptions {
    int budget = 30;
    int init = 5;
    std::uint64_t seed = 42;
    int n_candidates = 2048;
    int n_local = 256;
    double local_sigma = 0.1;
    std::string mode = "vanilla";
};

// Warm start (optional) first, then a Latin hypercube design, then EI steps.
BOTrace bo_run(Objective& objective, const SearchDomain& domain, const BOOptions& options,
               const std::optional<Config>& warm_start = std::nullopt);

BOTrace bo_run(Objective& objective, const HyperparameterSpace& space, int budget = 30, int init = 5,
               std::uint64_t seed = 42);

BOTrace guided_bo_run(Objective& objective, const HyperparameterSpace& space, const TuningReport& report,
                      int budget = 30, std::uint64_t seed = 42, int init = 3);

// First 1-based iteration with best_so_far >= optimum - epsilon; budget + 1 if never.
int iterations_to_within(const BOTrace& trace, double optimum, double epsilon = 0.02);

// median(vanilla) / median(guided); 1.0 when both medians are equal.
double speedup_ratio(std::span<const int> vanilla, std::span<const int> guided);

double median(std::vector<double> values);

} // namespace metashap
