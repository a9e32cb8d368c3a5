#include <doctest.h>

#include <cmath>
#include <numeric>

#include "common/oracles.hpp"
#include "metashap/attribution.hpp"
#include "metashap/benchgen.hpp"
#include "metashap/error.hpp"

using namespace metashap;

namespace {

std::vector<double> row_vec(const RowMatrix& m, Eigen::Index i) {
    const auto s = row_span(m, i);
    return {s.begin(), s.end()};
}

oracle::Game table_game(const std::vector<double>& table) {
    return [table](std::uint64_t S) { return table[S]; };
}

// Product x0 * x1 on {0, 1}^2 as a single depth-2 tree.
SurrogateModel product_model() {
    RegressionTree t;
    t.nodes = {
        {0, 0.5, 1, 2, 0.25},  {1, 0.5, 3, 4, 0.0},   {1, 0.5, 5, 6, 0.5},
        {-1, 0.0, -1, -1, 0.0}, {-1, 0.0, -1, -1, 0.0}, {-1, 0.0, -1, -1, 0.0}, {-1, 0.0, -1, -1, 1.0},
    };
    return SurrogateModel({t}, 2, -10.0, 10.0);
}

// Forest symmetric under swapping dims i and j: every tree appears with both labelings.
SurrogateModel symmetrize(const SurrogateModel& m, int i, int j) {
    auto trees = m.trees();
    for (auto t : m.trees()) {
        for (auto& n : t.nodes) {
            if (n.feature == i) n.feature = j;
            else if (n.feature == j) n.feature = i;
        }
        trees.push_back(t);
    }
    return SurrogateModel(trees, m.n_features(), m.y_min(), m.y_max());
}

} // namespace

TEST_CASE("coalition value endpoints") {
    Rng rng(1);
    const auto model = oracle::random_forest(rng, 4, 4);
    CoalitionGame game{&model, oracle::uniform_rows(rng, 20, 4), row_vec(oracle::uniform_rows(rng, 1, 4), 0)};
    double mean = 0.0;
    for (const double p : model.predict(game.background)) mean += p / 20.0;
    CHECK(coalition_value(game, 0) == doctest::Approx(mean).epsilon(1e-14));
    CHECK(coalition_value(game, 0b1111) == doctest::Approx(model.predict(game.target)).epsilon(1e-14));
}

TEST_CASE("additive stump forest") {
    const auto model = SurrogateModel({oracle::stump(0, 0.3, 0.1, 0.9), oracle::stump(1, 0.6, 0.4, -0.2)}, 2, -10, 10);
    Rng rng(2);
    CoalitionGame game{&model, oracle::uniform_rows(rng, 50, 2), {0.7, 0.2}};
    auto g1 = [](double x) { return 0.5 * (x <= 0.3 ? 0.1 : 0.9); };
    double mean_g1 = 0.0;
    for (Eigen::Index b = 0; b < 50; ++b) mean_g1 += g1(game.background(b, 0)) / 50.0;
    CHECK(std::abs(coalition_value(game, 0b01) - coalition_value(game, 0) - (g1(0.7) - mean_g1)) <= 1e-10);
    CHECK(std::abs(interaction_exact(game, 0, 1)) <= 1e-10);
}

TEST_CASE("shapley_from_table matches the direct subset formula") {
    SUBCASE("hand-tabulated k=3 game") {
        const std::vector<double> table = {0.0, 1.0, 2.0, 4.0, 3.0, 5.0, 6.0, 10.0};
        const auto phi = shapley_from_table(table, 3);
        const auto ref = oracle::shapley(table_game(table), 3);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(phi[i] - ref[i]) <= 1e-12);
        // v({0,1,2}) - v({}) = 10 is fully distributed
        CHECK(std::abs(phi[0] + phi[1] + phi[2] - 10.0) <= 1e-12);
        CHECK(std::abs(phi[0] - (2.0 * 1.0 + 2.0 + 2.0 + 2.0 * 4.0) / 6.0) <= 1e-12);
    }
    SUBCASE("random tables up to k=6") {
        Rng rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t k = 1; k <= 6; ++k) {
            for (int rep = 0; rep < 10; ++rep) {
                std::vector<double> table(std::size_t{1} << k);
                for (auto& v : table) v = u(rng);
                const auto phi = shapley_from_table(table, k);
                const auto ref = oracle::shapley(table_game(table), k);
                for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(phi[i] - ref[i]) <= 1e-12);
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < k; ++j) {
                        if (i == j) continue;
                        CHECK(std::abs(interaction_from_table(table, k, i, j) -
                                       oracle::interaction(table_game(table), k, i, j)) <= 1e-12);
                    }
            }
        }
    }
}

TEST_CASE("product game interaction by 4-subset enumeration") {
    const auto model = product_model();
    RowMatrix bg(4, 2);
    bg << 0, 0, 0, 1, 1, 0, 1, 1;
    CoalitionGame game{&model, bg, {1.0, 1.0}};
    const double v0 = 0.25, v1 = 0.5, v2 = 0.5, v12 = 1.0;
    CHECK(coalition_value(game, 0) == v0);
    CHECK(coalition_value(game, 1) == v1);
    CHECK(coalition_value(game, 2) == v2);
    CHECK(coalition_value(game, 3) == v12);
    const double hand = 0.5 * (v12 - v1 - v2 + v0);
    CHECK(interaction_exact(game, 0, 1) == doctest::Approx(hand).epsilon(1e-15));
    CHECK(interaction_exact(game, 1, 0) == interaction_exact(game, 0, 1));
    CHECK(hand == 0.125);
}

TEST_CASE("single player and dummy players") {
    const auto model = SurrogateModel({oracle::stump(0, 0.5, 0.2, 0.8)}, 1, 0, 1);
    Rng rng(4);
    CoalitionGame game{&model, oracle::uniform_rows(rng, 30, 1), {0.9}};
    CHECK(std::abs(shapley_exact(game)[0] - (coalition_value(game, 1) - coalition_value(game, 0))) <= 1e-12);

    const auto forest = oracle::random_forest(rng, 6, 3);
    CoalitionGame g6{&forest, oracle::uniform_rows(rng, 16, 6), row_vec(oracle::uniform_rows(rng, 1, 6), 0)};
    const auto phi = shapley_exact(g6);
    for (int d = 3; d < 6; ++d) CHECK(phi[d] == 0.0);
    const auto sampled = shapley_sampled(g6, 200, 7);
    for (int d = 3; d < 6; ++d) CHECK(sampled.phi[d] == 0.0);
}

TEST_CASE("engine tables match brute-force coalition values") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Rng rng(seed);
        const std::size_t k = 2 + seed % 7;
        const auto model = oracle::random_forest(rng, k, std::max<std::size_t>(1, k - 1), 6);
        const RowMatrix bg = oracle::uniform_rows(rng, 12, k);
        const RowMatrix targets = oracle::uniform_rows(rng, 4, k);
        ForestCoalitionEngine engine(model, bg);
        const RowMatrix rows = engine.shapley_rows(targets);
        for (Eigen::Index t = 0; t < targets.rows(); ++t) {
            CoalitionGame game{&model, bg, row_vec(targets, t)};
            const auto brute = brute_force_table(game);
            const auto fast = coalition_table(game);
            const auto pats = engine.patterns(game.target);
            const auto from_patterns = engine.table(pats);
            REQUIRE(brute.size() == fast.size());
            for (std::size_t S = 0; S < brute.size(); ++S) {
                CHECK(std::abs(brute[S] - fast[S]) <= 1e-12);
                CHECK(std::abs(brute[S] - from_patterns[S]) <= 1e-12);
                CHECK(std::abs(brute[S] - oracle::coalition_value(model, bg, game.target, S)) <= 1e-12);
            }
            const auto ref = oracle::shapley(table_game(brute), k);
            const auto at = engine.shapley_at(game.target);
            const auto via_patterns = engine.shapley(pats);
            for (std::size_t d = 0; d < k; ++d) {
                CHECK(std::abs(at[d] - ref[d]) <= 1e-12);
                CHECK(std::abs(via_patterns[d] - ref[d]) <= 1e-12);
                CHECK(std::abs(rows(t, static_cast<Eigen::Index>(d)) - ref[d]) <= 1e-12);
            }
            CHECK(std::abs(engine.empty_value() - brute[0]) <= 1e-12);
        }
    }
}

TEST_CASE("axioms on random games") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        Rng rng(seed);
        const std::size_t k = 2 + seed % 9;
        const std::size_t active = 1 + seed % k;
        const auto model = oracle::random_forest(rng, k, active);
        const RowMatrix bg = oracle::uniform_rows(rng, 10, k);
        CoalitionGame game{&model, bg, row_vec(oracle::uniform_rows(rng, 1, k), 0)};
        const auto phi = shapley_exact(game);
        const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
        CHECK(std::abs(total - (model.predict(game.target) - coalition_value(game, 0))) <= 1e-8);
        for (std::size_t d = active; d < k; ++d) CHECK(phi[d] == 0.0);
    }
}

TEST_CASE("symmetry and linearity") {
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
        Rng rng(seed);
        const std::size_t k = 3 + seed % 5;
        const auto base = oracle::random_forest(rng, k, k);
        const auto sym = symmetrize(base, 0, 1);
        RowMatrix bg = oracle::uniform_rows(rng, 8, k);
        RowMatrix bg2(16, static_cast<Eigen::Index>(k));
        for (Eigen::Index r = 0; r < 8; ++r) {
            bg2.row(2 * r) = bg.row(r);
            bg2.row(2 * r + 1) = bg.row(r);
            std::swap(bg2(2 * r + 1, 0), bg2(2 * r + 1, 1));
        }
        auto target = row_vec(oracle::uniform_rows(rng, 1, k), 0);
        target[1] = target[0];
        CoalitionGame game{&sym, bg2, target};
        const auto phi = shapley_exact(game);
        CHECK(std::abs(phi[0] - phi[1]) <= 1e-10);

        const auto other = oracle::random_forest(rng, k, k);
        const auto avg = SurrogateModel::average(base, other);
        CoalitionGame ga{&base, bg, target}, gb{&other, bg, target}, gavg{&avg, bg, target};
        const auto pa = shapley_exact(ga), pb = shapley_exact(gb), pavg = shapley_exact(gavg);
        for (std::size_t d = 0; d < k; ++d) CHECK(std::abs(pavg[d] - 0.5 * (pa[d] + pb[d])) <= 1e-10);
    }
}

TEST_CASE("sampled estimator") {
    const auto [surface, truth] = make_surface(4, 3, 1, 0.01, 5);
    Rng rng(6);
    RowMatrix X(400, 4);
    std::vector<double> y(400);
    const RowMatrix U = oracle::uniform_rows(rng, 400, 4);
    for (Eigen::Index i = 0; i < 400; ++i) {
        const auto c = surface.config_at(row_span(U, i));
        const auto e = encode(c, surface.space);
        for (int d = 0; d < 4; ++d) X(i, d) = e[d];
        y[i] = surface.evaluate(c);
    }
    ForestOptions opts;
    opts.n_trees = 30;
    const auto model = fit_forest(X, y, 42, opts);
    RowMatrix bg = X.topRows(64);
    CoalitionGame game{&model, bg, row_vec(X, 200)};
    const auto exact = shapley_exact(game);

    const auto est = shapley_sampled(game, 2000, 11);
    for (int d = 0; d < 4; ++d) CHECK(std::abs(est.phi[d] - exact[d]) <= 3.0 * est.standard_error[d] + 1e-12);
    CHECK(est.n_permutations == 2000);

    const auto again = shapley_sampled(game, 2000, 11);
    CHECK(again.phi == est.phi);

    double ratio = 0.0;
    int n_ratio = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto a = shapley_sampled(game, 500, 50 + s);
        const auto b = shapley_sampled(game, 1000, 50 + s);
        for (int d = 0; d < 4; ++d) {
            if (a.standard_error[d] <= 0.0) continue;
            ratio += b.standard_error[d] / a.standard_error[d];
            ++n_ratio;
        }
    }
    REQUIRE(n_ratio > 0);
    const double mean_ratio = ratio / n_ratio;
    CHECK(mean_ratio >= (1.0 / std::sqrt(2.0)) * 0.8);
    CHECK(mean_ratio <= (1.0 / std::sqrt(2.0)) * 1.2);

    CHECK_THROWS_AS(shapley_sampled(game, 99, 1), ValidationError);
}

TEST_CASE("argument errors") {
    Rng rng(8);
    const auto model = oracle::random_forest(rng, 16, 2, 2);
    CoalitionGame big{&model, oracle::uniform_rows(rng, 4, 16), std::vector<double>(16, 0.5)};
    CHECK_THROWS_AS(shapley_exact(big), ValidationError);
    CHECK_THROWS_AS(interaction_exact(big, 0, 1), ValidationError);
    const auto small = oracle::random_forest(rng, 3, 2, 2);
    CoalitionGame g{&small, oracle::uniform_rows(rng, 4, 3), std::vector<double>(3, 0.5)};
    CHECK_THROWS_AS(interaction_exact(g, 1, 1), ValidationError);
    CoalitionGame empty{&small, RowMatrix(0, 3), std::vector<double>(3, 0.5)};
    CHECK_THROWS_AS(shapley_exact(empty), ValidationError);
}

TEST_CASE("global attribution") {
    SUBCASE("constant surrogate") {
        RegressionTree leaf;
        leaf.nodes = {{-1, 0.0, -1, -1, 0.7}};
        const SurrogateModel model({leaf}, 3, 0.7, 0.7);
        Rng rng(9);
        const RowMatrix bg = oracle::uniform_rows(rng, 20, 3);
        const auto [attr, inter] = global_attribution(model, bg, bg);
        CHECK(attr.base_value == 0.7);
        CHECK(attr.per_sample_phi.cwiseAbs().maxCoeff() == 0.0);
        for (double g : attr.global_importance) CHECK(g == 0.0);
    }
    SUBCASE("efficiency, completeness, symmetry of the matrix") {
        Rng rng(10);
        const auto model = oracle::random_forest(rng, 6, 4, 10);
        const RowMatrix bg = oracle::uniform_rows(rng, 30, 6);
        const RowMatrix explain = oracle::uniform_rows(rng, 25, 6);
        const auto [attr, inter] = global_attribution(model, bg, explain);
        CHECK(attr.method == "exact");
        for (Eigen::Index s = 0; s < explain.rows(); ++s) {
            CHECK(std::abs(attr.per_sample_phi.row(s).sum() - (model.predict(row_span(explain, s)) - attr.base_value)) <=
                  1e-8);
        }
        for (std::size_t d = 0; d < 6; ++d) {
            CHECK(attr.global_importance[d] >= 0.0);
            CHECK(attr.global_importance[d] ==
                  doctest::Approx(attr.per_sample_phi.col(static_cast<Eigen::Index>(d)).cwiseAbs().mean()));
        }
        CHECK(inter.sample_index == medoid_index(explain));
        const auto& M = inter.values;
        CHECK(M == M.transpose());
        const double full = model.predict(row_span(explain, static_cast<Eigen::Index>(inter.sample_index)));
        CHECK(std::abs(M.sum() - (full - attr.base_value)) <= 1e-6);
        CoalitionGame game{&model, bg, row_vec(explain, static_cast<Eigen::Index>(inter.sample_index))};
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (i != j) CHECK(std::abs(M(i, j) - interaction_exact(game, i, j)) <= 1e-12);
    }
    SUBCASE("additive surrogate has no interactions") {
        const auto model = SurrogateModel(
            {oracle::stump(0, 0.3, 0.1, 0.9), oracle::stump(1, 0.6, 0.4, -0.2), oracle::stump(2, 0.5, 0.0, 0.3)}, 3,
            -10, 10);
        Rng rng(11);
        const RowMatrix bg = oracle::uniform_rows(rng, 40, 3);
        const auto [attr, inter] = global_attribution(model, bg, bg);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) CHECK(std::abs(inter.values(i, j)) <= 1e-10);
    }
    SUBCASE("sampled mode above fifteen players") {
        Rng rng(12);
        const auto model = oracle::random_forest(rng, 17, 3, 4);
        const RowMatrix bg = oracle::uniform_rows(rng, 10, 17);
        const RowMatrix explain = oracle::uniform_rows(rng, 3, 17);
        AttributionOptions opts;
        opts.n_permutations = 200;
        const auto [attr, inter] = global_attribution(model, bg, explain, opts);
        CHECK(attr.method == "sampled");
        CHECK(attr.n_permutations == 200);
        CHECK(inter.values.size() == 0);
        for (Eigen::Index s = 0; s < 3; ++s)
            for (int d = 3; d < 17; ++d) CHECK(attr.per_sample_phi(s, d) == 0.0);
    }
}

TEST_CASE("medoid") {
    RowMatrix pts(4, 1);
    pts << 0.0, 1.0, 1.1, 5.0;
    CHECK(medoid_index(pts) == 1);
}
