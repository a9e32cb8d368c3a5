#pragma once

/**
 * End-to-end recommendation: retrieve similar datasets, pool their records,
 * fit the surrogate, attribute, and summarize into a tuning report. Also the
 * paired vanilla/guided optimizer comparison.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "metashap/attribution.hpp"
#include "metashap/insights.hpp"
#include "metashap/kb.hpp"
#include "metashap/optimizer.hpp"
#include "metashap/retrieval.hpp"
#include "metashap/surrogate.hpp"

namespace metashap {

struct PipelineOptions {
    int k_neighbors = 5;
    int top_m = 3;
    int n_trees = 100;
    RangeOptions ranges;
    int n_permutations = 2000;
    std::size_t max_background = 256;
    std::size_t max_explain = 512;
    std::size_t max_explain_sampled = 64; // explain rows when k exceeds the exact limit
    std::uint64_t seed = 42;
};

struct Recommendation {
    Neighborhood neighborhood;
    MetaDataset meta;
    SurrogateModel model;
    AttributionResult attribution;
    InteractionMatrix interactions;
    TuningReport report;
};

// Up to `max_rows` rows chosen uniformly without replacement, kept in original order.
RowMatrix subsample_rows(const RowMatrix& rows, std::size_t max_rows, std::uint64_t seed);

// Best-performing record among the given datasets; first in KB order on ties.
std::optional<Config> best_config(const KnowledgeBase& kb, const std::string& algorithm_id,
                                  const std::set<std::string>& dataset_ids);

// Called with the name of each step before it runs.
using StageHook = std::function<void(const std::string&)>;

Recommendation recommend(const KnowledgeBase& kb, const MetaFeatureVector& query, const std::string& algorithm_id,
                         const PipelineOptions& options = {},
                         const std::optional<std::string>& exclude_id = std::nullopt,
                         const std::string& dataset_label = "query", const StageHook& on_stage = {});

struct CompareOptions {
    int budget = 30;
    int init = 5;
    int guided_init = 3;
    int n_seeds = 1;
    double epsilon = 0.02;
    std::uint64_t seed = 42;
};

struct CompareResult {
    std::vector<std::uint64_t> seeds;
    std::vector<BOTrace> vanilla;
    std::vector<BOTrace> guided;
    std::vector<int> vanilla_iterations;
    std::vector<int> guided_iterations;
    double optimum = 1.0;
    double speedup = 1.0;
};

// Run i uses seed derive_seed(options.seed, i) for both modes.
CompareResult compare(const Objective::Function& objective, const HyperparameterSpace& space,
                      const TuningReport& report, double optimum, const CompareOptions& options = {});

} // namespace metashap
