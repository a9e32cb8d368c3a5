#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "metashap/dataset.hpp"

namespace metashap {

inline constexpr std::size_t kMetaFeatureCount = 18;
inline constexpr std::string_view kMetaFeatureSchemaVersion = "metashap-mf/1";

inline constexpr std::array<std::string_view, kMetaFeatureCount> kMetaFeatureNames = {
    "n_instances",
    "n_features",
    "n_classes",
    "log_instances_per_feature",
    "class_entropy",
    "class_imbalance_ratio",
    "mean_of_feature_means",
    "mean_of_feature_stds",
    "mean_feature_skewness",
    "mean_feature_kurtosis",
    "mean_feature_entropy",
    "mean_mutual_information_with_target",
    "max_mutual_information_with_target",
    "fraction_categorical",
    "fraction_missing",
    "landmark_1nn_accuracy",
    "landmark_stump_accuracy",
    "landmark_majority_accuracy",
};

enum class MetaFeature : std::size_t {
    kInstances = 0,
    kFeatures,
    kClasses,
    kLogInstancesPerFeature,
    kClassEntropy,
    kClassImbalanceRatio,
    kMeanOfFeatureMeans,
    kMeanOfFeatureStds,
    kMeanSkewness,
    kMeanKurtosis,
    kMeanFeatureEntropy,
    kMeanMutualInformation,
    kMaxMutualInformation,
    kFractionCategorical,
    kFractionMissing,
    kLandmark1nn,
    kLandmarkStump,
    kLandmarkMajority,
};

struct MetaFeatureVector {
    std::array<double, kMetaFeatureCount> values{};

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](MetaFeature f) { return values[static_cast<std::size_t>(f)]; }
    double operator[](MetaFeature f) const { return values[static_cast<std::size_t>(f)]; }

    bool operator==(const MetaFeatureVector&) const = default;
};

// Stratified fold ids (0..n_folds-1) per row, shuffled within each class by seed.
std::vector<int> stratified_folds(std::span<const int> labels, int n_folds, std::uint64_t seed);

// Number of folds used by the landmarkers: min(5, n).
int landmark_fold_count(const TabularDataset& ds);

// Median-imputes NaN cells column-wise (all-NaN columns become 0).
Eigen::MatrixXd impute_median(const Eigen::MatrixXd& features);

// Landmarkers over an explicit fold assignment. Features must be NaN-free.
double landmark_1nn(const TabularDataset& ds, std::span<const int> folds);
double landmark_stump(const TabularDataset& ds, std::span<const int> folds);
double landmark_majority(const TabularDataset& ds, std::span<const int> folds);

// Seeded variants (stratified 5-fold CV); they impute missing values first.
double landmark_1nn(const TabularDataset& ds, std::uint64_t seed);
double landmark_stump(const TabularDataset& ds, std::uint64_t seed);

// Index of the nearest training row (Euclidean, lowest index on ties).
std::size_t nearest_neighbor(const Eigen::MatrixXd& points, std::span<const std::size_t> train_rows,
                             std::size_t query_row);

struct DecisionStump {
    int feature = -1;            // -1: no split, predict `left_label`
    double threshold = 0.0;      // go left when x <= threshold
    int left_label = 0;
    int right_label = 0;
    double information_gain = 0.0;

    int predict(std::span<const double> row) const;
};

// Best information-gain stump on the given rows.
DecisionStump fit_stump(const Eigen::MatrixXd& features, std::span<const int> labels, int n_classes,
                        std::span<const std::size_t> rows);

// Entropy (nats) of a discrete distribution given by counts.
double entropy_from_counts(std::span<const double> counts);

// Equal-width 10-bin discretization for numeric columns, code identity for
// categorical ones.
std::vector<int> discretize_column(const Eigen::VectorXd& column, bool categorical, int n_bins = 10);

double mutual_information(std::span<const int> x, std::span<const int> y);

MetaFeatureVector extract(const TabularDataset& ds, std::uint64_t seed);

} // namespace metashap
