#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metashap/kb.hpp"
#include "metashap/matrix.hpp"

namespace metashap {

using MetaRegistry = std::map<std::string, MetaFeatureVector>;

struct NormalizationStats {
    std::array<double, kMetaFeatureCount> mean{};
    std::array<double, kMetaFeatureCount> stddev{}; // population std; 0 marks a degenerate dimension

    MetaFeatureVector apply(const MetaFeatureVector& v) const;
};

struct NormalizedRegistry {
    MetaRegistry vectors;
    NormalizationStats stats;
};

// Z-scores every dimension over the registry; zero-variance dimensions map to 0.
NormalizedRegistry normalize(const MetaRegistry& registry);

struct Neighbor {
    std::string dataset_id;
    double distance = 0.0;

    bool operator==(const Neighbor&) const = default;
};

struct Neighborhood {
    std::vector<Neighbor> entries; // ascending distance, ties by id
    MetaFeatureVector query;
    int k_neighbors = 5;

    std::set<std::string> ids() const;
};

// Euclidean k nearest neighbors in normalized space. `registry` is the raw
// registry that produced `stats`. `exclude_id` is dropped before ranking.
Neighborhood knn(const MetaFeatureVector& query, const MetaRegistry& registry, const NormalizationStats& stats,
                 int k_neighbors, const std::optional<std::string>& exclude_id = std::nullopt);

struct MetaDataset {
    RowMatrix X;                 // encoded configs, one per row
    std::vector<double> y;       // performances
    HyperparameterSpace space;
    std::set<std::string> source_dataset_ids;

    std::size_t n_rows() const { return y.size(); }
};

// Pools every record of `algorithm_id` from the neighbor datasets, in KB order.
MetaDataset build_meta_dataset(const KnowledgeBase& kb, const Neighborhood& nbhd, const std::string& algorithm_id);

} // namespace metashap
