#include "metashap/metafeatures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "metashap/error.hpp"
#include "metashap/random.hpp"

namespace metashap {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int majority_label(std::span<const int> labels, std::span<const std::size_t> rows, int n_classes) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (auto r : rows) ++counts[static_cast<std::size_t>(labels[r])];
    // max_element returns the first maximum, i.e. the lowest label on ties.
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

std::vector<FoldSplit> make_splits(std::span<const int> folds) {
    int n_folds = 0;
    for (int f : folds) n_folds = std::max(n_folds, f + 1);
    std::vector<FoldSplit> splits(static_cast<std::size_t>(n_folds));
    for (std::size_t i = 0; i < folds.size(); ++i) {
        for (int f = 0; f < n_folds; ++f) {
            auto& split = splits[static_cast<std::size_t>(f)];
            (folds[i] == f ? split.test : split.train).push_back(i);
        }
    }
    std::erase_if(splits, [](const FoldSplit& s) { return s.test.empty() || s.train.empty(); });
    return splits;
}

template <typename Predict>
double cross_validated_accuracy(const TabularDataset& ds, std::span<const int> folds, Predict&& predict_fold) {
    if (folds.size() != ds.n_rows()) throw ValidationError("fold assignment length does not match dataset");
    const auto splits = make_splits(folds);
    if (splits.empty()) throw ValidationError("fold assignment yields no usable train/test split");
    double total = 0.0;
    for (const auto& split : splits) {
        std::size_t correct = 0;
        predict_fold(split, [&](std::size_t row, int predicted) {
            if (predicted == ds.target[row]) ++correct;
        });
        total += static_cast<double>(correct) / static_cast<double>(split.test.size());
    }
    return total / static_cast<double>(splits.size());
}

RowMajor zscore(const Eigen::MatrixXd& x) {
    RowMajor z = x;
    const auto n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).sum() / n;
        const double var = (x.col(j).array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            z.col(j).setZero();
        } else {
            z.col(j) = (x.col(j).array() - mean) / sd;
        }
    }
    return z;
}

std::size_t nearest_row(const RowMajor& z, std::span<const std::size_t> train_rows, std::size_t query) {
    const auto p = z.cols();
    const double* q = z.data() + static_cast<Eigen::Index>(query) * p;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_row = train_rows.front();
    for (auto r : train_rows) {
        const double* t = z.data() + static_cast<Eigen::Index>(r) * p;
        double d = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double diff = q[j] - t[j];
            d += diff * diff;
        }
        // Rows are visited in ascending order; strict comparison keeps the lowest index on ties.
        if (d < best) {
            best = d;
            best_row = r;
        }
    }
    return best_row;
}

struct ColumnMoments {
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
};

ColumnMoments moments(const Eigen::VectorXd& col) {
    ColumnMoments m;
    const auto n = static_cast<double>(col.size());
    m.mean = col.sum() / n;
    const Eigen::ArrayXd centered = col.array() - m.mean;
    const double m2 = centered.square().sum() / n;
    const double m3 = centered.cube().sum() / n;
    const double m4 = centered.square().square().sum() / n;
    m.sd = std::sqrt(m2);
    if (m.sd > 1e-12 * std::max(1.0, std::abs(m.mean))) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

} // namespace

std::vector<int> stratified_folds(std::span<const int> labels, int n_folds, std::uint64_t seed) {
    if (n_folds < 1) throw ValidationError("n_folds must be >= 1");
    int n_classes = 0;
    for (int l : labels) n_classes = std::max(n_classes, l + 1);
    Rng rng(derive_seed(seed, "stratified-folds"));
    std::vector<int> folds(labels.size(), 0);
    std::size_t counter = 0;
    for (int c = 0; c < n_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (auto i : members) folds[i] = static_cast<int>(counter++ % static_cast<std::size_t>(n_folds));
    }
    return folds;
}

int landmark_fold_count(const TabularDataset& ds) {
    return static_cast<int>(std::min<std::size_t>(5, ds.n_rows()));
}

Eigen::MatrixXd impute_median(const Eigen::MatrixXd& features) {
    Eigen::MatrixXd out = features;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        std::vector<double> present;
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            if (!std::isnan(out(i, j))) present.push_back(out(i, j));
        }
        double median = 0.0;
        if (!present.empty()) {
            std::sort(present.begin(), present.end());
            const auto mid = present.size() / 2;
            median = present.size() % 2 == 1 ? present[mid] : 0.5 * (present[mid - 1] + present[mid]);
        }
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            if (std::isnan(out(i, j))) out(i, j) = median;
        }
    }
    return out;
}

std::size_t nearest_neighbor(const Eigen::MatrixXd& points, std::span<const std::size_t> train_rows,
                             std::size_t query_row) {
    if (train_rows.empty()) throw ValidationError("nearest_neighbor needs at least one training row");
    RowMajor z = points;
    return nearest_row(z, train_rows, query_row);
}

double landmark_1nn(const TabularDataset& ds, std::span<const int> folds) {
    const RowMajor z = zscore(ds.features);
    return cross_validated_accuracy(ds, folds, [&](const FoldSplit& split, auto&& record) {
        for (auto row : split.test) record(row, ds.target[nearest_row(z, split.train, row)]);
    });
}

int DecisionStump::predict(std::span<const double> row) const {
    if (feature < 0) return left_label;
    return row[static_cast<std::size_t>(feature)] <= threshold ? left_label : right_label;
}

double entropy_from_counts(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

DecisionStump fit_stump(const Eigen::MatrixXd& features, std::span<const int> labels, int n_classes,
                        std::span<const std::size_t> rows) {
    DecisionStump best;
    best.left_label = majority_label(labels, rows, n_classes);
    best.right_label = best.left_label;
    if (rows.size() < 2) return best;

    const auto c = static_cast<std::size_t>(n_classes);
    std::vector<double> total(c, 0.0);
    for (auto r : rows) total[static_cast<std::size_t>(labels[r])] += 1.0;
    const double parent = entropy_from_counts(total);
    const auto n = static_cast<double>(rows.size());

    std::vector<std::size_t> order(rows.begin(), rows.end());
    std::vector<double> left(c), right(c);
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = features(static_cast<Eigen::Index>(a), j);
            const double vb = features(static_cast<Eigen::Index>(b), j);
            return va < vb || (va == vb && a < b);
        });
        std::fill(left.begin(), left.end(), 0.0);
        right = total;
        for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
            const auto label = static_cast<std::size_t>(labels[order[pos]]);
            left[label] += 1.0;
            right[label] -= 1.0;
            const double here = features(static_cast<Eigen::Index>(order[pos]), j);
            const double next = features(static_cast<Eigen::Index>(order[pos + 1]), j);
            if (!(here < next)) continue;
            const double n_left = static_cast<double>(pos + 1);
            const double gain = parent - (n_left / n) * entropy_from_counts(left) -
                                ((n - n_left) / n) * entropy_from_counts(right);
            if (gain > best.information_gain + 1e-12) {
                best.information_gain = gain;
                best.feature = static_cast<int>(j);
                double threshold = 0.5 * (here + next);
                if (!(threshold < next)) threshold = here;
                best.threshold = threshold;
                best.left_label = static_cast<int>(std::max_element(left.begin(), left.end()) - left.begin());
                best.right_label = static_cast<int>(std::max_element(right.begin(), right.end()) - right.begin());
            }
        }
    }
    return best;
}

double landmark_stump(const TabularDataset& ds, std::span<const int> folds) {
    const int c = ds.n_classes();
    return cross_validated_accuracy(ds, folds, [&](const FoldSplit& split, auto&& record) {
        const auto stump = fit_stump(ds.features, ds.target, c, split.train);
        std::vector<double> row(ds.n_features());
        for (auto r : split.test) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] = ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
            }
            record(r, stump.predict(row));
        }
    });
}

double landmark_majority(const TabularDataset& ds, std::span<const int> folds) {
    const int c = ds.n_classes();
    return cross_validated_accuracy(ds, folds, [&](const FoldSplit& split, auto&& record) {
        const int label = majority_label(ds.target, split.train, c);
        for (auto r : split.test) record(r, label);
    });
}

double landmark_1nn(const TabularDataset& ds, std::uint64_t seed) {
    ds.validate();
    TabularDataset imputed = ds;
    imputed.features = impute_median(ds.features);
    const auto folds = stratified_folds(ds.target, landmark_fold_count(ds), seed);
    return landmark_1nn(imputed, folds);
}

double landmark_stump(const TabularDataset& ds, std::uint64_t seed) {
    ds.validate();
    TabularDataset imputed = ds;
    imputed.features = impute_median(ds.features);
    const auto folds = stratified_folds(ds.target, landmark_fold_count(ds), seed);
    return landmark_stump(imputed, folds);
}

std::vector<int> discretize_column(const Eigen::VectorXd& column, bool categorical, int n_bins) {
    std::vector<int> out(static_cast<std::size_t>(column.size()));
    if (categorical) {
        for (Eigen::Index i = 0; i < column.size(); ++i) {
            out[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(column(i)));
        }
        return out;
    }
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    const double width = hi - lo;
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        int bin = 0;
        if (width > 0.0) {
            bin = static_cast<int>(std::floor((column(i) - lo) / width * n_bins));
            bin = std::clamp(bin, 0, n_bins - 1);
        }
        out[static_cast<std::size_t>(i)] = bin;
    }
    return out;
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size()) throw ValidationError("mutual_information: length mismatch");
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
    const int xmin = *xmin_it, ymin = *ymin_it;
    const auto nx = static_cast<std::size_t>(*xmax_it - xmin + 1);
    const auto ny = static_cast<std::size_t>(*ymax_it - ymin + 1);
    std::vector<double> cx(nx, 0.0), cy(ny, 0.0), cxy(nx * ny, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto a = static_cast<std::size_t>(x[i] - xmin);
        const auto b = static_cast<std::size_t>(y[i] - ymin);
        cx[a] += 1.0;
        cy[b] += 1.0;
        cxy[a * ny + b] += 1.0;
    }
    const double mi = entropy_from_counts(cx) + entropy_from_counts(cy) - entropy_from_counts(cxy);
    return std::max(0.0, mi);
}

MetaFeatureVector extract(const TabularDataset& ds, std::uint64_t seed) {
    ds.validate();
    const auto n = ds.n_rows();
    const auto p = ds.n_features();
    const int c = ds.n_classes();

    std::size_t missing = 0;
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) missing += std::isnan(ds.features(i, j)) ? 1 : 0;
    }
    TabularDataset imputed = ds;
    imputed.features = impute_median(ds.features);

    MetaFeatureVector mf;
    mf[MetaFeature::kInstances] = static_cast<double>(n);
    mf[MetaFeature::kFeatures] = static_cast<double>(p);
    mf[MetaFeature::kClasses] = static_cast<double>(c);
    mf[MetaFeature::kLogInstancesPerFeature] = std::log(static_cast<double>(n) / static_cast<double>(p));

    std::vector<double> class_counts(static_cast<std::size_t>(c), 0.0);
    for (int label : ds.target) class_counts[static_cast<std::size_t>(label)] += 1.0;
    mf[MetaFeature::kClassEntropy] = entropy_from_counts(class_counts);
    mf[MetaFeature::kClassImbalanceRatio] = *std::max_element(class_counts.begin(), class_counts.end()) /
                                            *std::min_element(class_counts.begin(), class_counts.end());

    std::size_t n_numeric = 0;
    double sum_mean = 0.0, sum_sd = 0.0, sum_skew = 0.0, sum_kurt = 0.0;
    double sum_entropy = 0.0, sum_mi = 0.0, max_mi = 0.0;
    std::size_t n_categorical = 0;
    for (std::size_t j = 0; j < p; ++j) {
        const Eigen::VectorXd col = imputed.features.col(static_cast<Eigen::Index>(j));
        const bool categorical = ds.categorical_mask[j];
        if (categorical) {
            ++n_categorical;
        } else {
            const auto m = moments(col);
            sum_mean += m.mean;
            sum_sd += m.sd;
            sum_skew += m.skewness;
            sum_kurt += m.kurtosis;
            ++n_numeric;
        }
        const auto bins = discretize_column(col, categorical);
        std::vector<int> lo_shifted = bins;
        const int lo = *std::min_element(bins.begin(), bins.end());
        const int hi = *std::max_element(bins.begin(), bins.end());
        std::vector<double> counts(static_cast<std::size_t>(hi - lo + 1), 0.0);
        for (int b : bins) counts[static_cast<std::size_t>(b - lo)] += 1.0;
        sum_entropy += entropy_from_counts(counts);
        const double mi = mutual_information(bins, ds.target);
        sum_mi += mi;
        max_mi = std::max(max_mi, mi);
    }
    if (n_numeric > 0) {
        const auto k = static_cast<double>(n_numeric);
        mf[MetaFeature::kMeanOfFeatureMeans] = sum_mean / k;
        mf[MetaFeature::kMeanOfFeatureStds] = sum_sd / k;
        mf[MetaFeature::kMeanSkewness] = sum_skew / k;
        mf[MetaFeature::kMeanKurtosis] = sum_kurt / k;
    }
    mf[MetaFeature::kMeanFeatureEntropy] = sum_entropy / static_cast<double>(p);
    mf[MetaFeature::kMeanMutualInformation] = sum_mi / static_cast<double>(p);
    mf[MetaFeature::kMaxMutualInformation] = max_mi;
    mf[MetaFeature::kFractionCategorical] = static_cast<double>(n_categorical) / static_cast<double>(p);
    mf[MetaFeature::kFractionMissing] = static_cast<double>(missing) / static_cast<double>(n * p);

    const auto folds = stratified_folds(ds.target, landmark_fold_count(ds), seed);
    mf[MetaFeature::kLandmark1nn] = landmark_1nn(imputed, folds);
    mf[MetaFeature::kLandmarkStump] = landmark_stump(imputed, folds);
    mf[MetaFeature::kLandmarkMajority] = landmark_majority(imputed, folds);
    return mf;
}

} // namespace metashap
