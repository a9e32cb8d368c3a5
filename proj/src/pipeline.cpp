#include "metashap/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "metashap/error.hpp"
#include "metashap/random.hpp"

namespace metashap {

RowMatrix subsample_rows(const RowMatrix& rows, std::size_t max_rows, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(rows.rows());
    if (n <= max_rows) return rows;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < max_rows; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(max_rows);
    std::sort(idx.begin(), idx.end());
    RowMatrix out(static_cast<Eigen::Index>(max_rows), rows.cols());
    for (std::size_t i = 0; i < max_rows; ++i) {
        out.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

std::optional<Config> best_config(const KnowledgeBase& kb, const std::string& algorithm_id,
                                  const std::set<std::string>& dataset_ids) {
    const KBRecord* best = nullptr;
    for (const auto& rec : kb.records) {
        if (rec.algorithm_id != algorithm_id || !dataset_ids.contains(rec.dataset_id)) continue;
        if (!best || rec.performance > best->performance) best = &rec;
    }
    if (!best) return std::nullopt;
    return best->config;
}

Recommendation recommend(const KnowledgeBase& kb, const MetaFeatureVector& query, const std::string& algorithm_id,
                         const PipelineOptions& options, const std::optional<std::string>& exclude_id,
                         const std::string& dataset_label, const StageHook& on_stage) {
    auto stage = [&](const std::string& name) {
        if (on_stage) on_stage(name);
    };
    stage("retrieval");
    if (options.k_neighbors < 1) throw ValidationError("k_neighbors must be >= 1");
    if (options.max_background < 1 || options.max_explain < 1) {
        throw ValidationError("background and explain sizes must be >= 1");
    }
    const auto& space = kb.space(algorithm_id);

    Recommendation rec;
    const auto normalized = normalize(kb.meta_registry);
    rec.neighborhood = knn(query, kb.meta_registry, normalized.stats, options.k_neighbors, exclude_id);
    stage("meta-dataset");
    rec.meta = build_meta_dataset(kb, rec.neighborhood, algorithm_id);
    stage("surrogate");
    rec.model = fit(rec.meta, derive_seed(options.seed, "surrogate"), options.n_trees);

    stage("attribution");
    const std::size_t explain_rows =
        space.size() > kMaxExactPlayers ? std::min(options.max_explain, options.max_explain_sampled) : options.max_explain;
    const RowMatrix background = subsample_rows(rec.meta.X, options.max_background, derive_seed(options.seed, "background"));
    const RowMatrix explain = subsample_rows(rec.meta.X, explain_rows, derive_seed(options.seed, "explain"));

    AttributionOptions attr_options;
    attr_options.n_permutations = options.n_permutations;
    attr_options.seed = derive_seed(options.seed, "attribution");
    std::tie(rec.attribution, rec.interactions) = global_attribution(rec.model, background, explain, attr_options);
    rec.attribution.players = space.names();

    stage("report");
    ReportOptions report_options;
    report_options.top_m = options.top_m;
    report_options.ranges = options.ranges;
    rec.report = build_report(rec.attribution, rec.interactions, space, report_options);
    rec.report.algorithm = algorithm_id;
    rec.report.dataset = dataset_label;
    rec.report.surrogate_r2 = rec.model.holdout_r2;
    rec.report.warm_start = best_config(kb, algorithm_id, rec.neighborhood.ids());

    nlohmann::json neighbors = nlohmann::json::array();
    for (const auto& n : rec.neighborhood.entries) {
        neighbors.push_back({{"dataset_id", n.dataset_id}, {"distance", n.distance}});
    }
    rec.report.provenance = {
        {"k_neighbors", options.k_neighbors},
        {"neighbors", neighbors},
        {"exclude_dataset", exclude_id ? nlohmann::json(*exclude_id) : nlohmann::json(nullptr)},
        {"meta_rows", rec.meta.n_rows()},
        {"n_trees", options.n_trees},
        {"n_background", background.rows()},
        {"n_explain", explain.rows()},
        {"attribution_method", rec.attribution.method},
        {"n_permutations", rec.attribution.n_permutations},
        {"window_fraction", options.ranges.window_fraction},
        {"tau", options.ranges.tau},
        {"top_m", options.top_m},
        {"seeds",
         {{"seed", options.seed},
          {"surrogate", derive_seed(options.seed, "surrogate")},
          {"background", derive_seed(options.seed, "background")},
          {"explain", derive_seed(options.seed, "explain")},
          {"attribution", attr_options.seed}}},
    };
    return rec;
}

CompareResult compare(const Objective::Function& objective, const HyperparameterSpace& space,
                      const TuningReport& report, double optimum, const CompareOptions& options) {
    if (options.n_seeds < 1) throw ValidationError("n_seeds must be >= 1");
    if (options.epsilon < 0.0) throw ValidationError("epsilon must be >= 0");
    CompareResult result;
    result.optimum = optimum;
    for (int i = 0; i < options.n_seeds; ++i) {
        const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(i));
        result.seeds.push_back(seed);

        Objective vanilla_obj(objective);
        result.vanilla.push_back(bo_run(vanilla_obj, space, options.budget, options.init, seed));
        Objective guided_obj(objective);
        result.guided.push_back(guided_bo_run(guided_obj, space, report, options.budget, seed, options.guided_init));

        result.vanilla_iterations.push_back(iterations_to_within(result.vanilla.back(), optimum, options.epsilon));
        result.guided_iterations.push_back(iterations_to_within(result.guided.back(), optimum, options.epsilon));
    }
    result.speedup = speedup_ratio(result.vanilla_iterations, result.guided_iterations);
    return result;
}

} // namespace metashap
