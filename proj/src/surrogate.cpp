#include "metashap/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metashap/error.hpp"
#include "metashap/random.hpp"

namespace metashap {

namespace {

double stable_mean(std::span<const double> y, std::span<const std::size_t> rows) {
    const double first = y[rows.front()];
    double acc = 0.0;
    for (auto r : rows) acc += y[r] - first;
    return first + acc / static_cast<double>(rows.size());
}

class TreeBuilder {
public:
    TreeBuilder(const RowMatrix& X, std::span<const double> y, int min_leaf, int mtry, Rng& rng)
        : X_(X), y_(y), min_leaf_(static_cast<std::size_t>(min_leaf)), mtry_(mtry), rng_(rng),
          features_(static_cast<std::size_t>(X.cols())) {
        std::iota(features_.begin(), features_.end(), 0);
    }

    RegressionTree build(std::vector<std::size_t> rows) {
        rows_ = std::move(rows);
        tree_ = {};
        grow(0, rows_.size());
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    int grow(std::size_t begin, std::size_t end) {
        const std::span<const std::size_t> rows(rows_.data() + begin, end - begin);
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes.back().value = stable_mean(y_, rows);

        const auto split = best_split(rows, tree_.nodes.back().value);
        if (split.feature < 0) return id;

        const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::size_t r) {
                                                   return X_(static_cast<Eigen::Index>(r), split.feature) <=
                                                          split.threshold;
                                               });
        const auto mid_pos = static_cast<std::size_t>(mid - rows_.begin());
        const int left = grow(begin, mid_pos);
        const int right = grow(mid_pos, end);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    Split best_split(std::span<const std::size_t> rows, double mean) {
        Split best;
        const std::size_t n = rows.size();
        if (n < 2 * min_leaf_) return best;
        double sst = 0.0;
        for (auto r : rows) sst += (y_[r] - mean) * (y_[r] - mean);
        if (!(sst > 0.0)) return best;

        // Partial Fisher-Yates: the first mtry entries are the candidates.
        for (int i = 0; i < mtry_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), features_.size() - 1);
            std::swap(features_[static_cast<std::size_t>(i)], features_[pick(rng_)]);
        }
        for (int c = 0; c < mtry_; ++c) {
            const int f = features_[static_cast<std::size_t>(c)];
            sorted_.clear();
            for (auto r : rows) sorted_.push_back({X_(static_cast<Eigen::Index>(r), f), y_[r] - mean});
            std::sort(sorted_.begin(), sorted_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double total = 0.0;
            for (const auto& [_, v] : sorted_) total += v;
            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += sorted_[i].second;
                const std::size_t n_left = i + 1;
                if (n_left < min_leaf_) continue;
                if (n - n_left < min_leaf_) break;
                if (!(sorted_[i].first < sorted_[i + 1].first)) continue;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n - n_left) -
                                    total * total / static_cast<double>(n);
                if (gain > best.gain && gain > 1e-12 * sst) {
                    best.gain = gain;
                    best.feature = f;
                    double threshold = 0.5 * (sorted_[i].first + sorted_[i + 1].first);
                    if (!(threshold < sorted_[i + 1].first)) threshold = sorted_[i].first;
                    best.threshold = threshold;
                }
            }
        }
        return best;
    }

    const RowMatrix& X_;
    std::span<const double> y_;
    std::size_t min_leaf_;
    int mtry_;
    Rng& rng_;
    std::vector<int> features_;
    std::vector<std::size_t> rows_;
    std::vector<std::pair<double, double>> sorted_;
    RegressionTree tree_;
};

} // namespace

double RegressionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& node = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                 : node.right);
    }
    return nodes[i].value;
}

SurrogateModel::SurrogateModel(std::vector<RegressionTree> trees, std::size_t n_features, double y_min,
                               double y_max)
    : trees_(std::move(trees)), n_features_(n_features), y_min_(y_min), y_max_(y_max) {
    if (trees_.empty()) throw ValidationError("a forest needs at least one tree");
    for (const auto& tree : trees_) {
        if (tree.nodes.empty()) throw ValidationError("tree without nodes");
        for (const auto& node : tree.nodes) {
            if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= n_features_) {
                throw ValidationError("tree splits on a dimension outside the encoded space");
            }
        }
    }
    offset_ = trees_.front().nodes.front().value;
}

double SurrogateModel::predict(std::span<const double> x) const {
    if (x.size() != n_features_) {
        throw ValidationError("predict: expected " + std::to_string(n_features_) + " dimensions, got " +
                              std::to_string(x.size()));
    }
    if (trees_.size() == 1) return std::clamp(trees_.front().predict(x), y_min_, y_max_);
    double acc = 0.0;
    for (const auto& tree : trees_) acc += tree.predict(x) - offset_;
    return std::clamp(offset_ + acc / static_cast<double>(trees_.size()), y_min_, y_max_);
}

std::vector<double> SurrogateModel::predict(const RowMatrix& X) const {
    std::vector<double> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(row_span(X, i));
    return out;
}

std::vector<bool> SurrogateModel::used_features() const {
    std::vector<bool> used(n_features_, false);
    for (const auto& tree : trees_) {
        for (const auto& node : tree.nodes) {
            if (!node.is_leaf()) used[static_cast<std::size_t>(node.feature)] = true;
        }
    }
    return used;
}

SurrogateModel SurrogateModel::average(const SurrogateModel& a, const SurrogateModel& b) {
    if (a.n_features_ != b.n_features_ || a.trees_.size() != b.trees_.size()) {
        throw ValidationError("can only average forests of equal size over the same space");
    }
    auto trees = a.trees_;
    trees.insert(trees.end(), b.trees_.begin(), b.trees_.end());
    SurrogateModel out(std::move(trees), a.n_features_, std::min(a.y_min_, b.y_min_),
                       std::max(a.y_max_, b.y_max_));
    return out;
}

double r_squared(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size() || truth.empty()) throw ValidationError("r_squared: size mismatch");
    if (std::all_of(truth.begin(), truth.end(), [&](double v) { return v == truth.front(); })) return 0.0;
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    double sst = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sst += (truth[i] - mean) * (truth[i] - mean);
        sse += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    }
    if (!(sst > 0.0)) return 0.0;
    return 1.0 - sse / sst;
}

SurrogateModel fit_forest(const RowMatrix& X, std::span<const double> y, std::uint64_t seed,
                          const ForestOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto k = static_cast<int>(X.cols());
    if (n != y.size()) throw ValidationError("fit: X and y row counts differ");
    if (n < 2 || k < 1) throw ValidationError("fit: need at least 2 rows and 1 dimension");
    if (options.n_trees < 1) throw ValidationError("fit: n_trees must be >= 1");
    if (options.min_leaf < 1) throw ValidationError("fit: min_leaf must be >= 1");
    if (!(options.holdout_fraction >= 0.0 && options.holdout_fraction < 1.0)) {
        throw ValidationError("fit: holdout_fraction must be in [0, 1)");
    }
    const int mtry = std::clamp(options.features_per_split.value_or((k + 2) / 3), 1, k);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t n_holdout = static_cast<std::size_t>(std::llround(options.holdout_fraction * static_cast<double>(n)));
    n_holdout = std::min(n_holdout, n - 1);
    std::vector<std::size_t> train, holdout;
    if (n_holdout > 0) {
        Rng rng(derive_seed(seed, "holdout"));
        std::shuffle(order.begin(), order.end(), rng);
        holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_holdout));
        train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_holdout), order.end());
        std::sort(holdout.begin(), holdout.end());
        std::sort(train.begin(), train.end());
    } else {
        train = order;
    }

    double y_min = y[train.front()], y_max = y_min;
    for (auto r : train) {
        y_min = std::min(y_min, y[r]);
        y_max = std::max(y_max, y[r]);
    }

    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(options.n_trees));
    for (int t = 0; t < options.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows;
        if (options.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
            rows.reserve(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) rows.push_back(train[pick(rng)]);
        } else {
            rows = train;
        }
        TreeBuilder builder(X, y, options.min_leaf, mtry, rng);
        trees.push_back(builder.build(std::move(rows)));
    }

    SurrogateModel model(std::move(trees), static_cast<std::size_t>(k), y_min, y_max);
    if (!holdout.empty()) {
        std::vector<double> truth, predicted;
        for (auto r : holdout) {
            truth.push_back(y[r]);
            predicted.push_back(model.predict(row_span(X, static_cast<Eigen::Index>(r))));
        }
        model.holdout_r2 = r_squared(truth, predicted);
    }
    model.fingerprint = {n, 0, seed};
    return model;
}

SurrogateModel fit(const MetaDataset& T, std::uint64_t seed, int n_trees) {
    if (T.n_rows() < 10) {
        throw ValidationError("surrogate needs at least 10 rows, meta-dataset has " + std::to_string(T.n_rows()));
    }
    ForestOptions options;
    options.n_trees = n_trees;
    auto model = fit_forest(T.X, T.y, seed, options);
    model.fingerprint.space_hash = T.space.hash();
    return model;
}

nlohmann::json dump_model(const SurrogateModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) {
                nodes.push_back({{"value", node.value}});
            } else {
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right},
                                 {"value", node.value}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    return {{"n_features", model.n_features()},
            {"offset", model.offset()},
            {"holdout_r2", model.holdout_r2},
            {"fingerprint",
             {{"n_rows", model.fingerprint.n_rows},
              {"space_hash", model.fingerprint.space_hash},
              {"seed", model.fingerprint.seed}}},
            {"trees", std::move(trees)}};
}

} // namespace metashap
