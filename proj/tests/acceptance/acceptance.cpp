// One pass/fail line per acceptance criterion. Every tolerance lives in the
// constants below; the process exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "common/oracles.hpp"
#include "metashap/attribution.hpp"
#include "metashap/benchgen.hpp"
#include "metashap/cli.hpp"
#include "metashap/gp.hpp"
#include "metashap/optimizer.hpp"
#include "metashap/pipeline.hpp"
#include "metashap/retrieval.hpp"
#include "metashap/sampling.hpp"
#include "metashap/stats.hpp"

using namespace metashap;

namespace {

// 1
constexpr int kAxiomGames = 60;
constexpr std::size_t kAxiomMaxPlayers = 10;
constexpr double kEfficiencyTol = 1e-8;
constexpr double kSymmetryTol = 1e-10;
constexpr double kLinearityTol = 1e-10;
constexpr double kAxiomSeconds = 60;
// 2
constexpr double kOracleTol = 1e-12;
constexpr std::size_t kOracleMaxPlayers = 6;
constexpr double kOracleSeconds = 60;
// 3
constexpr int kPermutations = 2000;
constexpr double kSigmaMultiple = 3.0;
constexpr double kSigmaSlack = 1e-12;
constexpr int kSweepLow = 500;
constexpr int kSweepHigh = 2000; // 4x
constexpr double kSweepExpected = 0.5;
constexpr double kSweepRelTol = 0.2;
constexpr int kSweepSeeds = 10;
constexpr double kSamplingSeconds = 120;
// 4, 5
constexpr int kRecoverySeeds = 20;
constexpr double kSpearmanMin = 0.9;
constexpr double kJaccardMin = 0.5;
constexpr double kRankingSeconds = 300;
constexpr double kRangeSeconds = 180;
// 6
constexpr int kBoSeeds = 20;
constexpr int kBoBudget = 30;
constexpr double kBoEpsilon = 0.02;
constexpr double kSpeedupMaxFraction = 0.5;
constexpr double kFirstIterationTol = 0.05;
constexpr double kBoSeconds = 600;
// 7
constexpr std::size_t kExpectedSelected = 3;
constexpr double kMinReduction = 0.6;
constexpr double kReductionSeconds = 60;
// 8
constexpr double kForestR2Min = 0.8;
constexpr double kGpInterpTol = 1e-3;
constexpr double kEiTol = 1e-6;
constexpr int kEiProbes = 20;
constexpr double kSanitySeconds = 120;
// 9
constexpr double kDeterminismSeconds = 300;
// 10
constexpr double kRetrievalSeconds = 60;

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs < limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %s  %s: %s [%.1f s of %.0f s]\n", id, pass ? "PASS" : "FAIL", name.c_str(),
                o.detail.c_str(), secs, limit_s);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<double> row_vec(const RowMatrix& m, Eigen::Index i) {
    const auto s = row_span(m, i);
    return {s.begin(), s.end()};
}

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

RowMatrix with_swapped_copies(const RowMatrix& bg, int i, int j) {
    RowMatrix out(2 * bg.rows(), bg.cols());
    for (Eigen::Index r = 0; r < bg.rows(); ++r) {
        out.row(2 * r) = bg.row(r);
        out.row(2 * r + 1) = bg.row(r);
        std::swap(out(2 * r + 1, i), out(2 * r + 1, j));
    }
    return out;
}

Outcome axioms() {
    double worst_eff = 0.0, worst_sym = 0.0, worst_lin = 0.0;
    bool dummy_ok = true;
    for (int g = 0; g < kAxiomGames; ++g) {
        Rng rng(1000 + g);
        const std::size_t k = 2 + static_cast<std::size_t>(g) % (kAxiomMaxPlayers - 1);
        const std::size_t active = 1 + static_cast<std::size_t>(g * 7) % k;
        const auto model = oracle::random_forest(rng, k, active);
        const RowMatrix bg = oracle::uniform_rows(rng, 12, k);
        auto target = row_vec(oracle::uniform_rows(rng, 1, k), 0);

        CoalitionGame game{&model, bg, target};
        const auto phi = shapley_exact(game);
        const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
        worst_eff = std::max(worst_eff, std::abs(sum - (coalition_value(game, (Coalition{1} << k) - 1) -
                                                         coalition_value(game, 0))));
        for (std::size_t d = active; d < k; ++d) dummy_ok = dummy_ok && phi[d] == 0.0;

        const auto sym = symmetrize(model, 0, static_cast<int>(k - 1));
        auto sym_target = target;
        sym_target[k - 1] = sym_target[0];
        CoalitionGame sgame{&sym, with_swapped_copies(bg, 0, static_cast<int>(k - 1)), sym_target};
        const auto sphi = shapley_exact(sgame);
        worst_sym = std::max(worst_sym, std::abs(sphi[0] - sphi[k - 1]));

        const auto other = oracle::random_forest(rng, k, k);
        const auto avg = SurrogateModel::average(model, other);
        CoalitionGame ga{&other, bg, target}, gavg{&avg, bg, target};
        const auto pb = shapley_exact(ga), pavg = shapley_exact(gavg);
        for (std::size_t d = 0; d < k; ++d) worst_lin = std::max(worst_lin, std::abs(pavg[d] - 0.5 * (phi[d] + pb[d])));
    }
    std::ostringstream s;
    s << kAxiomGames << " games, k<=" << kAxiomMaxPlayers << "; efficiency " << worst_eff << ", dummy "
      << (dummy_ok ? "exact" : "NONZERO") << ", symmetry " << worst_sym << ", linearity " << worst_lin;
    return {worst_eff <= kEfficiencyTol && dummy_ok && worst_sym <= kSymmetryTol && worst_lin <= kLinearityTol,
            s.str()};
}

Outcome oracle_equivalence() {
    double worst = 0.0;
    int games = 0;
    for (std::size_t k = 1; k <= kOracleMaxPlayers; ++k) {
        for (int rep = 0; rep < 5; ++rep) {
            Rng rng(2000 + 10 * k + rep);
            const auto model = oracle::random_forest(rng, k, k);
            const RowMatrix bg = oracle::uniform_rows(rng, 10, k);
            CoalitionGame game{&model, bg, row_vec(oracle::uniform_rows(rng, 1, k), 0)};
            // tabulate every subset value by direct background averaging
            std::vector<double> table(std::size_t{1} << k);
            for (std::uint64_t S = 0; S < table.size(); ++S) table[S] = oracle::coalition_value(model, bg, game.target, S);
            const auto ref = oracle::shapley([&](std::uint64_t S) { return table[S]; }, k);
            const auto phi = shapley_exact(game);
            for (std::size_t d = 0; d < k; ++d) worst = std::max(worst, std::abs(phi[d] - ref[d]));
            ++games;
        }
    }
    // x0 * x1 on {0,1}^2, uniform background, target (1,1)
    RegressionTree t;
    t.nodes = {{0, 0.5, 1, 2, 0.25},    {1, 0.5, 3, 4, 0.0},    {1, 0.5, 5, 6, 0.5},    {-1, 0.0, -1, -1, 0.0},
               {-1, 0.0, -1, -1, 0.0}, {-1, 0.0, -1, -1, 0.0}, {-1, 0.0, -1, -1, 1.0}};
    const SurrogateModel product({t}, 2, -1.0, 2.0);
    RowMatrix bg(4, 2);
    bg << 0, 0, 0, 1, 1, 0, 1, 1;
    CoalitionGame pg{&product, bg, {1.0, 1.0}};
    const double v0 = (0 + 0 + 0 + 1) / 4.0, v1 = (0 + 1) / 2.0, v2 = (0 + 1) / 2.0, v12 = 1.0;
    const double hand = 0.5 * (v12 - v1 - v2 + v0);
    const double got = interaction_exact(pg, 0, 1);
    std::ostringstream s;
    s << games << " forest games k<=" << kOracleMaxPlayers << ", max |phi - direct formula| " << worst
      << "; k=2 product interaction " << got << " vs hand " << hand;
    return {worst <= kOracleTol && std::abs(got - hand) <= kOracleTol, s.str()};
}

std::pair<SurrogateModel, RowMatrix> benchgen_game_model(std::size_t k, std::uint64_t seed) {
    const auto [surface, truth] = make_surface(k, std::min<std::size_t>(3, k), 0, 0.01, seed);
    Rng rng(seed);
    const RowMatrix U = latin_hypercube(400, k, rng);
    RowMatrix X(400, static_cast<Eigen::Index>(k));
    std::vector<double> y(400);
    for (Eigen::Index i = 0; i < 400; ++i) {
        const auto c = surface.config_at(row_span(U, i));
        const auto e = encode(c, surface.space);
        for (std::size_t d = 0; d < k; ++d) X(i, static_cast<Eigen::Index>(d)) = e[d];
        y[static_cast<std::size_t>(i)] = surface.evaluate_noisy(c, rng);
    }
    ForestOptions opts;
    opts.n_trees = 30;
    return {fit_forest(X, y, seed, opts), X};
}

Outcome sampling() {
    int checked = 0, within = 0;
    double worst_z = 0.0;
    for (std::size_t k = 3; k <= 6; ++k) {
        const auto [model, X] = benchgen_game_model(k, 3000 + k);
        CoalitionGame game{&model, X.topRows(64), row_vec(X, 300)};
        const auto exact = shapley_exact(game);
        const auto est = shapley_sampled(game, kPermutations, 17 + k);
        for (std::size_t d = 0; d < k; ++d) {
            ++checked;
            const double err = std::abs(est.phi[d] - exact[d]);
            if (err <= kSigmaMultiple * est.standard_error[d] + kSigmaSlack) ++within;
            if (est.standard_error[d] > 0) worst_z = std::max(worst_z, err / est.standard_error[d]);
        }
    }
    const auto [model, X] = benchgen_game_model(4, 3100);
    CoalitionGame game{&model, X.topRows(64), row_vec(X, 123)};
    double ratio = 0.0;
    int n = 0;
    for (int s = 0; s < kSweepSeeds; ++s) {
        const auto lo = shapley_sampled(game, kSweepLow, 500 + s);
        const auto hi = shapley_sampled(game, kSweepHigh, 500 + s);
        for (std::size_t d = 0; d < 4; ++d) {
            if (lo.standard_error[d] <= 0.0) continue;
            ratio += hi.standard_error[d] / lo.standard_error[d];
            ++n;
        }
    }
    const double mean_ratio = n ? ratio / n : 0.0;
    std::ostringstream s;
    s << within << "/" << checked << " players within " << kSigmaMultiple << " SE (worst " << fmt("%.2f", worst_z)
      << " SE); SE ratio " << kSweepLow << "->" << kSweepHigh << " perms " << fmt("%.4f", mean_ratio) << " (expected "
      << kSweepExpected << " +/- " << kSweepRelTol * 100 << "%)";
    return {within == checked && n > 0 && std::abs(mean_ratio - kSweepExpected) <= kSweepRelTol * kSweepExpected,
            s.str()};
}

// Recovery runs shared by criteria 4 and 5.
struct RecoveryRun {
    double spearman = 0.0;
    double spearman_relevant = 0.0;
    std::vector<double> jaccard; // one per relevant parameter, by decreasing weight
};

double unit_of(const ParamSpec& spec, double raw) {
    if (spec.kind == ParamKind::kContinuous) {
        return (encode_value(spec, raw) - spec.encoded_lo()) / (spec.encoded_hi() - spec.encoded_lo());
    }
    return (raw - spec.lo) / (spec.hi - spec.lo);
}

double range_jaccard(const TuningReport& report, const GoodRegion& truth, const ParamSpec& spec) {
    const auto* r = report.range_for(spec.name);
    if (r == nullptr) return 0.0;
    if (spec.kind == ParamKind::kCategorical) {
        std::set<std::string> a(r->categories.begin(), r->categories.end());
        std::set<std::string> b(truth.categories.begin(), truth.categories.end());
        std::size_t inter = 0;
        for (const auto& c : a) inter += b.count(c);
        const std::size_t uni = a.size() + b.size() - inter;
        return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    }
    std::vector<Interval> got;
    for (const auto& iv : r->intervals) got.push_back({unit_of(spec, iv.lo), unit_of(spec, iv.hi)});
    return interval_jaccard(got, truth.unit);
}

const std::vector<RecoveryRun>& recovery_runs() {
    static const std::vector<RecoveryRun> runs = [] {
        std::vector<RecoveryRun> out;
        for (int s = 0; s < kRecoverySeeds; ++s) {
            BenchmarkOptions opts;
            opts.seed = 7000 + static_cast<std::uint64_t>(s);
            opts.surface.k = 8;
            opts.surface.n_relevant = 3;
            opts.surface.noise_sigma = 0.01;
            const auto bench = generate_kb(opts);
            const auto& ds = bench.datasets.front();
            PipelineOptions popts;
            popts.seed = opts.seed;
            const auto rec = recommend(bench.kb, bench.kb.meta_registry.at(ds.id), opts.algorithm_id, popts);
            RecoveryRun run;
            run.spearman = spearman(rec.attribution.global_importance, ds.truth.variance);
            std::vector<double> est, tru;
            for (auto p : ds.truth.relevant) {
                est.push_back(rec.attribution.global_importance[p]);
                tru.push_back(ds.truth.variance[p]);
            }
            run.spearman_relevant = spearman(est, tru);
            for (std::size_t r = 0; r < ds.truth.relevant.size(); ++r) {
                const auto& spec = ds.surface.space[ds.truth.relevant[r]];
                run.jaccard.push_back(range_jaccard(rec.report, ds.truth.good_regions[r], spec));
            }
            out.push_back(std::move(run));
        }
        return out;
    }();
    return runs;
}

Outcome ranking_recovery() {
    std::vector<double> rho, rho_rel;
    for (const auto& r : recovery_runs()) {
        rho.push_back(r.spearman);
        rho_rel.push_back(r.spearman_relevant);
    }
    const double med = median(rho);
    // Five irrelevant parameters tie at zero variance; against any strict
    // ordering of their estimates the attainable rho is bounded by this value.
    const std::vector<double> tied = {8, 7, 6, 3, 3, 3, 3, 3}, strict = {8, 7, 6, 5, 4, 3, 2, 1};
    const double ceiling = pearson(tied, strict);
    std::ostringstream s;
    s << "median Spearman over " << kRecoverySeeds << " seeds " << fmt("%.4f", med) << " (need >= " << kSpearmanMin
      << "; tie-limited ceiling " << fmt("%.4f", ceiling) << "); relevant-only median " << fmt("%.4f", median(rho_rel));
    return {med >= kSpearmanMin, s.str()};
}

Outcome range_recovery() {
    const auto& runs = recovery_runs();
    const std::size_t n_rel = runs.front().jaccard.size();
    bool ok = true;
    std::ostringstream s;
    s << "median Jaccard per relevant param:";
    for (std::size_t r = 0; r < n_rel; ++r) {
        std::vector<double> j;
        for (const auto& run : runs) j.push_back(run.jaccard[r]);
        const double m = median(j);
        ok = ok && m >= kJaccardMin;
        s << ' ' << fmt("%.3f", m);
    }
    s << " (need >= " << kJaccardMin << ")";
    return {ok, s.str()};
}

Outcome guided_speedup() {
    BenchmarkOptions opts;
    opts.n_datasets = 12;
    opts.clusters = 2;
    opts.surface.k = 8;
    opts.surface.n_relevant = 2;
    opts.seed = 8100;
    const auto bench = generate_kb(opts);

    std::map<std::string, TuningReport> reports;
    std::vector<double> vanilla_iters, guided_iters, first_gaps;
    int first_ok = 0;
    for (int s = 0; s < kBoSeeds; ++s) {
        const auto& ds = bench.datasets[static_cast<std::size_t>(s) % bench.datasets.size()];
        if (!reports.count(ds.id)) {
            PipelineOptions popts;
            popts.seed = opts.seed;
            reports[ds.id] =
                recommend(bench.kb, bench.kb.meta_registry.at(ds.id), opts.algorithm_id, popts, ds.id, ds.id).report;
        }
        const auto& surface = ds.surface;
        const double optimum = ds.truth.optimum_value;
        const std::uint64_t seed = derive_seed(opts.seed, static_cast<std::uint64_t>(s));
        Objective fv([&](const Config& c) { return surface.evaluate(c); });
        Objective fg([&](const Config& c) { return surface.evaluate(c); });
        const auto v = bo_run(fv, surface.space, kBoBudget, 5, seed);
        const auto g = guided_bo_run(fg, surface.space, reports[ds.id], kBoBudget, seed);
        vanilla_iters.push_back(iterations_to_within(v, optimum, kBoEpsilon));
        guided_iters.push_back(iterations_to_within(g, optimum, kBoEpsilon));
        const double gap = optimum - g.iterations.front().best_so_far;
        first_gaps.push_back(gap);
        first_ok += gap <= kFirstIterationTol;
    }
    const double mv = median(vanilla_iters), mg = median(guided_iters), gap = median(first_gaps);
    std::ostringstream s;
    s << "median iterations to within " << kBoEpsilon << ": guided " << mg << " vs vanilla " << mv
      << " (budget+1 = not reached); guided gap at iteration 1: median " << fmt("%.4f", gap) << ", " << first_ok << "/"
      << kBoSeeds << " runs within " << kFirstIterationTol;
    return {mg <= kSpeedupMaxFraction * mv && gap <= kFirstIterationTol, s.str()};
}

Outcome space_reduction() {
    bool ok = true;
    std::ostringstream s;
    for (std::size_t k : {8, 10, 12}) {
        BenchmarkOptions opts;
        opts.n_datasets = 6;
        opts.surface.k = k;
        opts.surface.n_relevant = 3;
        opts.seed = 9000 + k;
        const auto bench = generate_kb(opts);
        PipelineOptions popts;
        popts.seed = opts.seed;
        const auto rec = recommend(bench.kb, bench.kb.meta_registry.at("ds000"), opts.algorithm_id, popts);
        const double reduction = 1.0 - static_cast<double>(rec.report.selected.size()) / static_cast<double>(k);
        ok = ok && rec.report.selected.size() == kExpectedSelected && reduction >= kMinReduction;
        s << "k=" << k << ": " << rec.report.selected.size() << " selected (" << fmt("%.1f", 100 * reduction)
          << "% reduction); ";
    }
    return {ok, s.str()};
}

Outcome sanity() {
    SurfaceOptions sopts;
    sopts.shapes = {ShapeKind::kBump};
    sopts.noise_sigma = 0.01;
    const auto [surface, truth] = make_surface(sopts, 8200);
    Rng rng(8201);
    const RowMatrix U = latin_hypercube(2000, 8, rng);
    RowMatrix X(2000, 8);
    std::vector<double> y(2000);
    for (Eigen::Index i = 0; i < 2000; ++i) {
        const auto c = surface.config_at(row_span(U, i));
        const auto e = encode(c, surface.space);
        for (int d = 0; d < 8; ++d) X(i, d) = e[static_cast<std::size_t>(d)];
        y[static_cast<std::size_t>(i)] = surface.evaluate_noisy(c, rng);
    }
    const double r2 = fit_forest(X, y, 42).holdout_r2;

    const RowMatrix G = oracle::uniform_rows(rng, 12, 2);
    std::vector<double> gy(12);
    for (int i = 0; i < 12; ++i) gy[static_cast<std::size_t>(i)] = std::sin(4.0 * G(i, 0)) + G(i, 1) * G(i, 1);
    const auto gp = gp_fit(G, gy, 42);
    double worst_gp = 0.0;
    for (Eigen::Index i = 0; i < 12; ++i)
        worst_gp = std::max(worst_gp, std::abs(gp.predict(row_span(G, i)).mean - gy[static_cast<std::size_t>(i)]));

    std::uniform_real_distribution<double> mu(-2.0, 2.0), sd(0.01, 2.0);
    double worst_ei = 0.0;
    for (int p = 0; p < kEiProbes; ++p) {
        const double m = mu(rng), sgm = sd(rng), best = mu(rng);
        worst_ei = std::max(worst_ei, std::abs(expected_improvement(m, sgm, best) - oracle::ei_quadrature(m, sgm, best)));
    }
    std::ostringstream s;
    s << "forest holdout R2 " << fmt("%.4f", r2) << " (need >= " << kForestR2Min << "); GP max interpolation error "
      << worst_gp << "; EI vs quadrature max error " << worst_ei << " at " << kEiProbes << " probes";
    return {r2 >= kForestR2Min && worst_gp <= kGpInterpTol && worst_ei <= kEiTol, s.str()};
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        files[std::filesystem::relative(e.path(), dir).string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return files;
}

int quiet_cli(const std::vector<std::string>& args) {
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const int code = cli::run(args);
    std::cout.rdbuf(old);
    return code;
}

Outcome determinism() {
    const auto root = oracle::scratch_dir("acceptance_determinism");
    const auto kb = (root / "kb").string();
    if (quiet_cli({"benchgen", "--out", kb, "--n-datasets", "6", "--configs", "200"}) != 0) return {false, "benchgen failed"};
    std::size_t files = 0;
    bool same = true;
    for (const std::string cmd : {"recommend", "compare"}) {
        std::vector<std::map<std::string, std::string>> outs;
        for (int rep = 0; rep < 2; ++rep) {
            const auto out = (root / (cmd + std::to_string(rep))).string();
            std::vector<std::string> args = {cmd, "--kb", kb, "--dataset-id", "ds001", "--exclude-dataset", "ds001",
                                             "--seed", "42", "--out", out};
            if (cmd == "compare") {
                args.insert(args.end(), {"--surface-id", "ds001", "--n-seeds", "2", "--budget", "30"});
            }
            if (quiet_cli(args) != 0) return {false, cmd + " failed"};
            outs.push_back(read_tree(out));
        }
        same = same && outs[0] == outs[1];
        files += outs[0].size();
    }
    std::ostringstream s;
    s << files << " output files of recommend and compare " << (same ? "byte-identical" : "DIFFER") << " across reruns";
    return {same && files > 0, s.str()};
}

Outcome retrieval() {
    BenchmarkOptions opts;
    opts.seed = 9500;
    const auto bench = generate_kb(opts);
    const auto& reg = bench.kb.meta_registry;
    const auto norm = normalize(reg);
    int self_ok = 0, pure = 0, total = 0, excluded_ok = 0;
    for (const auto& ds : bench.datasets) {
        const auto self = knn(reg.at(ds.id), reg, norm.stats, 5);
        self_ok += self.entries.front().dataset_id == ds.id && self.entries.front().distance == 0.0;
        const auto loo = knn(reg.at(ds.id), reg, norm.stats, 4, ds.id);
        bool absent = true;
        for (const auto& e : loo.entries) {
            ++total;
            pure += bench.dataset(e.dataset_id).cluster == ds.cluster;
            absent = absent && e.dataset_id != ds.id;
        }
        excluded_ok += absent && loo.entries.size() == 4;
    }
    const auto n = static_cast<int>(bench.datasets.size());
    std::ostringstream s;
    s << "self-retrieval at distance 0: " << self_ok << "/" << n << "; cluster purity " << pure << "/" << total
      << "; leave-one-out exclusion " << excluded_ok << "/" << n;
    return {self_ok == n && pure == total && excluded_ok == n, s.str()};
}

} // namespace

int main() {
    report(1, "shapley axioms", kAxiomSeconds, axioms);
    report(2, "brute-force oracle equivalence", kOracleSeconds, oracle_equivalence);
    report(3, "sampling consistency", kSamplingSeconds, sampling);
    report(4, "importance ranking recovery", kRankingSeconds, ranking_recovery);
    report(5, "tuning range recovery", kRangeSeconds, range_recovery);
    report(6, "guided BO speedup", kBoSeconds, guided_speedup);
    report(7, "search-space reduction", kReductionSeconds, space_reduction);
    report(8, "surrogate and GP sanity", kSanitySeconds, sanity);
    report(9, "determinism", kDeterminismSeconds, determinism);
    report(10, "retrieval correctness", kRetrievalSeconds, retrieval);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
