#pragma once

/**
 * Synthetic performance surfaces with known importances, and a desk-scale
 * knowledge base built from them.
 *
 * A surface is a sum of one-dimensional shape terms on each parameter's unit
 * coordinate plus optional pairwise product terms, rescaled into [0, 1].
 */

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metashap/dataset.hpp"
#include "metashap/insights.hpp"
#include "metashap/kb.hpp"
#include "metashap/random.hpp"
#include "metashap/space.hpp"

namespace metashap {

enum class ShapeKind { kNone, kBump, kRamp, kStep };

const char* to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& text);

struct ShapeTerm {
    ShapeKind kind = ShapeKind::kNone;
    double weight = 0.0;
    double center = 0.5;
    double width = 0.3;      // bump half-width
    double steepness = 10.0; // ramp slope; the sign picks the direction
    bool ascending = true;   // step direction

    double operator()(double u) const;
    bool operator==(const ShapeTerm&) const = default;
};

struct PairTerm {
    std::size_t first = 0;
    std::size_t second = 0;
    double weight = 0.0;

    bool operator==(const PairTerm&) const = default;
};

struct SyntheticSurface {
    HyperparameterSpace space;
    std::vector<ShapeTerm> terms; // one per parameter
    std::vector<PairTerm> pairs;
    double noise_sigma = 0.0;
    double raw_min = 0.0;
    double raw_max = 1.0;

    // Unit coordinate of a raw value: encoded position for continuous
    // parameters, (v - lo) / (hi - lo) for integers, index / (n - 1) for categories.
    double unit(std::size_t param, const RawValue& value) const;
    std::vector<double> unit(const Config& config) const;
    Config config_at(std::span<const double> unit_point) const;

    double raw(std::span<const double> unit_point) const;
    double evaluate(const Config& config) const; // in [0, 1]
    double evaluate_noisy(const Config& config, Rng& rng) const;

    bool operator==(const SyntheticSurface&) const = default;
};

struct GoodRegion {
    std::string param;
    std::vector<Interval> unit;
    std::vector<Interval> raw;
    std::vector<std::string> categories; // categorical parameters only

    bool operator==(const GoodRegion&) const = default;
};

struct GroundTruth {
    std::vector<double> variance;     // per parameter, in output units
    std::vector<std::size_t> relevant; // parameters with a shape term, by decreasing weight
    Config optimum;
    double optimum_value = 1.0;
    std::vector<GoodRegion> good_regions; // relevant parameters, same order as `relevant`

    bool operator==(const GroundTruth&) const = default;
};

// Search space used by the generator; names follow a gradient-boosting model.
HyperparameterSpace benchmark_space(std::size_t k);

struct SurfaceOptions {
    std::size_t k = 8;
    std::size_t n_relevant = 3;
    std::size_t interaction_pairs = 0;
    double noise_sigma = 0.01;
    std::vector<ShapeKind> shapes = {ShapeKind::kBump, ShapeKind::kRamp, ShapeKind::kStep};
};

std::pair<SyntheticSurface, GroundTruth> make_surface(const SurfaceOptions& options, std::uint64_t seed);
std::pair<SyntheticSurface, GroundTruth> make_surface(std::size_t k, std::size_t n_relevant,
                                                      std::size_t interaction_pairs, double noise_sigma,
                                                      std::uint64_t seed);

// Recomputes the output range and the ground truth after editing terms.
GroundTruth finalize_surface(SyntheticSurface& surface);

// Variance of w * bump(u) for u ~ U(0, 1).
double bump_variance(const ShapeTerm& term);
// Monte-Carlo variance of a shape term under u ~ U(0, 1).
double monte_carlo_variance(const ShapeTerm& term, std::size_t n_samples, std::uint64_t seed);

// Jaccard index of two unions of disjoint intervals.
double interval_jaccard(std::span<const Interval> a, std::span<const Interval> b);

struct BenchmarkOptions {
    std::size_t n_datasets = 10;
    std::size_t configs_per_dataset = 400;
    std::size_t clusters = 2;
    double weight_jitter = 0.15;
    SurfaceOptions surface;
    std::string algorithm_id = "xgboost";
    std::uint64_t seed = 42;
    std::uint64_t metafeature_seed = 42;
};

struct BenchmarkDataset {
    std::string id;
    std::size_t cluster = 0;
    SyntheticSurface surface;
    GroundTruth truth;
    TabularDataset data;
};

struct Benchmark {
    KnowledgeBase kb;
    std::vector<BenchmarkDataset> datasets;
    BenchmarkOptions options;

    const BenchmarkDataset& dataset(const std::string& id) const;
};

Benchmark generate_kb(const BenchmarkOptions& options);

// KB bundle, ground_truth.json and datasets/<id>.csv.
void write_benchmark(const Benchmark& bench, const std::filesystem::path& dir);

nlohmann::json surface_to_json(const SyntheticSurface& surface);
SyntheticSurface surface_from_json(const nlohmann::json& j);
nlohmann::json truth_to_json(const GroundTruth& truth, const HyperparameterSpace& space);

// Reads the surface of one dataset back from ground_truth.json.
SyntheticSurface load_surface(const std::filesystem::path& ground_truth_file, const std::string& dataset_id);
GroundTruth load_truth(const std::filesystem::path& ground_truth_file, const std::string& dataset_id);

} // namespace metashap
