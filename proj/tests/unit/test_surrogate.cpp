#include <doctest.h>

#include <algorithm>

#include "common/oracles.hpp"
#include "metashap/benchgen.hpp"
#include "metashap/error.hpp"
#include "metashap/optimizer.hpp"
#include "metashap/sampling.hpp"
#include "metashap/stats.hpp"
#include "metashap/surrogate.hpp"

using namespace metashap;

namespace {

struct Sample {
    RowMatrix X;
    std::vector<double> y;
    std::vector<double> truth;
};

Sample sample_surface(const SyntheticSurface& s, std::size_t n, std::uint64_t seed, bool noisy) {
    Rng rng(seed);
    const RowMatrix U = latin_hypercube(n, s.space.size(), rng);
    FullDomain domain(s.space);
    Sample out;
    out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.space.size()));
    for (std::size_t i = 0; i < n; ++i) {
        const Config c = domain.to_config(row_span(U, static_cast<Eigen::Index>(i)));
        const auto e = encode(c, s.space);
        for (std::size_t d = 0; d < e.size(); ++d) out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = e[d];
        out.truth.push_back(s.evaluate(c));
        out.y.push_back(noisy ? s.evaluate_noisy(c, rng) : out.truth.back());
    }
    return out;
}

std::pair<SyntheticSurface, GroundTruth> bump_surface(std::uint64_t seed) {
    SurfaceOptions opts;
    opts.shapes = {ShapeKind::kBump};
    return make_surface(opts, seed);
}

} // namespace

TEST_CASE("constant target") {
    Rng rng(1);
    const RowMatrix X = oracle::uniform_rows(rng, 50, 3);
    const std::vector<double> y(50, 0.7);
    const auto model = fit_forest(X, y, 42);
    CHECK(model.holdout_r2 == 0.0);
    for (int t = 0; t < 20; ++t) {
        const auto x = oracle::uniform_rows(rng, 1, 3, -5.0, 5.0);
        CHECK(model.predict(row_span(x, 0)) == 0.7);
    }
}

TEST_CASE("single-split step function") {
    // a holdout row inside the gap around the threshold is misfit by any learner, so score the median draw
    std::vector<double> r2;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        const RowMatrix X = oracle::uniform_rows(rng, 200, 4);
        std::vector<double> y(200);
        for (int i = 0; i < 200; ++i) y[i] = X(i, 2) > 0.4 ? 0.9 : 0.3;
        r2.push_back(fit_forest(X, y, 42).holdout_r2);
    }
    CHECK(median(r2) >= 0.95);
}

TEST_CASE("benchgen bump surface: holdout R2 and fresh-sample error") {
    const auto [surface, truth] = bump_surface(11);
    const auto train = sample_surface(surface, 2000, 1, true);
    const auto model = fit_forest(train.X, train.y, 42);
    CHECK(model.holdout_r2 >= 0.8);
    const auto fresh = sample_surface(surface, 500, 99, false);
    double mae = 0.0;
    for (Eigen::Index i = 0; i < fresh.X.rows(); ++i) mae += std::abs(model.predict(row_span(fresh.X, i)) - fresh.truth[i]);
    CHECK(mae / 500.0 <= 0.05);
}

TEST_CASE("degenerate debug fit interpolates training points") {
    Rng rng(3);
    const RowMatrix X = oracle::uniform_rows(rng, 40, 3);
    std::vector<double> y(40);
    for (int i = 0; i < 40; ++i) y[i] = X(i, 0) * X(i, 1) + X(i, 2);
    ForestOptions opts;
    opts.n_trees = 1;
    opts.min_leaf = 1;
    opts.bootstrap = false;
    opts.holdout_fraction = 0.0;
    opts.features_per_split = 3;
    const auto model = fit_forest(X, y, 42, opts);
    for (int i = 0; i < 40; ++i) CHECK(model.predict(row_span(X, i)) == y[i]);
}

TEST_CASE("fit and predict errors") {
    Rng rng(4);
    const RowMatrix X = oracle::uniform_rows(rng, 9, 2);
    MetaDataset T;
    T.X = X;
    T.y.assign(9, 0.5);
    T.space = HyperparameterSpace({ParamSpec::continuous("a", 0, 1, 0.5), ParamSpec::continuous("b", 0, 1, 0.5)});
    CHECK_THROWS_AS(fit(T, 42), ValidationError);
    T.X = oracle::uniform_rows(rng, 10, 2);
    T.y.assign(10, 0.5);
    const auto model = fit(T, 42, 5);
    const std::vector<double> short_x = {0.1};
    CHECK_THROWS_AS(model.predict(short_x), ValidationError);
}

TEST_CASE("properties on random forests") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const std::size_t k = 3 + seed % 4;
        const RowMatrix X = oracle::uniform_rows(rng, 120, k);
        std::vector<double> y(120);
        for (int i = 0; i < 120; ++i) y[i] = std::sin(3.0 * X(i, 0)) + X(i, 1) * X(i, 1);
        ForestOptions opts;
        opts.n_trees = 20;
        const auto model = fit_forest(X, y, seed, opts);
        const auto again = fit_forest(X, y, seed, opts);
        const double lo = *std::min_element(y.begin(), y.end());
        const double hi = *std::max_element(y.begin(), y.end());
        const RowMatrix probe = oracle::uniform_rows(rng, 200, k, -1.0, 2.0);
        const auto used = model.used_features();
        for (Eigen::Index i = 0; i < probe.rows(); ++i) {
            const double p = model.predict(row_span(probe, i));
            CHECK(p >= lo);
            CHECK(p <= hi);
            CHECK(again.predict(row_span(probe, i)) == p);
            std::vector<double> moved(probe.row(i).data(), probe.row(i).data() + k);
            for (std::size_t d = 0; d < k; ++d) {
                if (used[d]) continue;
                moved[d] += 17.0;
            }
            CHECK(model.predict(moved) == p);
        }
    }
}

TEST_CASE("unused dimension has zero influence") {
    Rng rng(5);
    const auto model = oracle::random_forest(rng, 5, 2);
    const auto used = model.used_features();
    CHECK_FALSE(used[3]);
    CHECK_FALSE(used[4]);
}

TEST_CASE("monotone surface keeps its ordering") {
    Rng rng(6);
    const RowMatrix X = oracle::uniform_rows(rng, 600, 4);
    std::vector<double> y(600);
    for (int i = 0; i < 600; ++i) y[i] = 0.6 * X(i, 1) + 0.1 * X(i, 3);
    const auto model = fit_forest(X, y, 42);
    std::vector<double> grid, pred;
    for (int t = 0; t <= 50; ++t) {
        const double v = t / 50.0;
        const std::vector<double> x = {0.5, v, 0.5, 0.5};
        grid.push_back(v);
        pred.push_back(model.predict(x));
    }
    CHECK(spearman(grid, pred) >= 0.9);
}

TEST_CASE("fingerprint and dump") {
    Rng rng(7);
    MetaDataset T;
    T.X = oracle::uniform_rows(rng, 30, 2);
    T.y.assign(30, 0.0);
    for (int i = 0; i < 30; ++i) T.y[i] = T.X(i, 0);
    T.space = HyperparameterSpace({ParamSpec::continuous("a", 0, 1, 0.5), ParamSpec::continuous("b", 0, 1, 0.5)});
    const auto model = fit(T, 9, 4);
    CHECK(model.trees().size() == 4);
    CHECK(model.fingerprint.seed == 9);
    CHECK(model.fingerprint.n_rows == 30);
    CHECK(model.fingerprint.space_hash == T.space.hash());
    CHECK(dump_model(model)["trees"].size() == 4);
}
