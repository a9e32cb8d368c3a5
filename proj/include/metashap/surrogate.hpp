#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "metashap/matrix.hpp"
#include "metashap/retrieval.hpp"

namespace metashap {

struct TreeNode {
    int feature = -1;       // -1 for leaves
    double threshold = 0.0; // left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;     // mean target of the node's training rows

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double predict(std::span<const double> x) const;
    bool operator==(const RegressionTree&) const = default;
};

struct ForestOptions {
    int n_trees = 100;
    int min_leaf = 3;
    bool bootstrap = true;
    double holdout_fraction = 0.2;
    std::optional<int> features_per_split; // default ceil(k / 3)
};

struct TrainingFingerprint {
    std::size_t n_rows = 0;
    std::uint64_t space_hash = 0;
    std::uint64_t seed = 0;

    bool operator==(const TrainingFingerprint&) const = default;
};

/**
 * Regression forest. Predictions are offset + mean over trees of
 * (leaf value - offset); with the offset equal to some leaf value a constant
 * target is reproduced exactly.
 */
class SurrogateModel {
public:
    SurrogateModel() = default;
    SurrogateModel(std::vector<RegressionTree> trees, std::size_t n_features, double y_min, double y_max);

    double predict(std::span<const double> x) const;
    std::vector<double> predict(const RowMatrix& X) const;

    std::size_t n_features() const { return n_features_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    double offset() const { return offset_; }
    double y_min() const { return y_min_; }
    double y_max() const { return y_max_; }

    // Encoded dimensions referenced by at least one split.
    std::vector<bool> used_features() const;

    // Forest whose prediction is the average of two equal-size forests.
    static SurrogateModel average(const SurrogateModel& a, const SurrogateModel& b);

    double holdout_r2 = 0.0;
    TrainingFingerprint fingerprint;

private:
    std::vector<RegressionTree> trees_;
    std::size_t n_features_ = 0;
    double offset_ = 0.0;
    double y_min_ = 0.0;
    double y_max_ = 0.0;
};

SurrogateModel fit_forest(const RowMatrix& X, std::span<const double> y, std::uint64_t seed,
                          const ForestOptions& options = {});

// Requires >= 10 rows.
SurrogateModel fit(const MetaDataset& T, std::uint64_t seed, int n_trees = 100);

// Debug dump; not a stable format.
nlohmann::json dump_model(const SurrogateModel& model);

double r_squared(std::span<const double> truth, std::span<const double> predicted);

} // namespace metashap
