#include "metashap/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "metashap/benchgen.hpp"
#include "metashap/dataset.hpp"
#include "metashap/error.hpp"
#include "metashap/kb.hpp"
#include "metashap/metafeatures.hpp"
#include "metashap/pipeline.hpp"
#include "metashap/serialization.hpp"

namespace metashap::cli {

namespace {

constexpr const char* kReportSchema = "metashap-report/1";
constexpr const char* kAttributionSchema = "metashap-attribution/1";
constexpr const char* kCompareSchema = "metashap-compare/1";
constexpr const char* kMetaFeaturesSchema = "metashap-mf/1";
constexpr const char* kIngestSchema = "metashap-ingest/1";
constexpr const char* kBenchgenSchema = "metashap-benchgen/1";

struct RunConfig {
    std::string subcommand;
    std::string kb;
    std::string dataset;
    std::string target_col;
    std::string algorithm;
    std::string out = ".";
    std::string dataset_id;
    std::string exclude_dataset;
    std::string records;
    std::string spaces;
    std::string ground_truth;
    std::string surface_id;
    std::string metric;
    int k_neighbors = 5;
    int top_m = 3;
    int budget = 30;
    int n_trees = 100;
    int n_permutations = 2000;
    int n_seeds = 1;
    std::uint64_t seed = 42;
    double window_fraction = 0.05;
    double tau = 0.5;
    double epsilon = 0.02;
    std::optional<double> constant_objective;
    std::size_t n_datasets = 10;
    std::size_t configs = 400;
    std::size_t k = 8;
    std::size_t n_relevant = 3;
    std::size_t interaction_pairs = 0;
    std::size_t clusters = 2;
    double noise = 0.01;
    std::string shapes = "bump,ramp,step";
};

// Flags that affect results; the output directory is left out so runs into
// different directories stay comparable.
nlohmann::json flags_json(const RunConfig& rc) {
    nlohmann::json j = {{"subcommand", rc.subcommand}, {"seed", rc.seed}};
    auto opt = [&](const char* key, const std::string& v) {
        if (!v.empty()) j[key] = v;
    };
    if (rc.subcommand == "metafeatures") {
        opt("dataset", rc.dataset);
        opt("target_col", rc.target_col);
        return j;
    }
    if (rc.subcommand == "ingest") {
        opt("kb", rc.kb);
        opt("records", rc.records);
        opt("spaces", rc.spaces);
        opt("dataset", rc.dataset);
        opt("target_col", rc.target_col);
        opt("dataset_id", rc.dataset_id);
        opt("metric", rc.metric);
        return j;
    }
    if (rc.subcommand == "benchgen") {
        j.update({{"n_datasets", rc.n_datasets},
                  {"configs", rc.configs},
                  {"k", rc.k},
                  {"n_relevant", rc.n_relevant},
                  {"interaction_pairs", rc.interaction_pairs},
                  {"clusters", rc.clusters},
                  {"noise", rc.noise},
                  {"shapes", rc.shapes},
                  {"algorithm", rc.algorithm.empty() ? "xgboost" : rc.algorithm}});
        return j;
    }
    opt("kb", rc.kb);
    opt("dataset", rc.dataset);
    opt("target_col", rc.target_col);
    opt("dataset_id", rc.dataset_id);
    opt("exclude_dataset", rc.exclude_dataset);
    opt("algorithm", rc.algorithm);
    j.update({{"k_neighbors", rc.k_neighbors},
              {"top_m", rc.top_m},
              {"n_trees", rc.n_trees},
              {"n_permutations", rc.n_permutations},
              {"window_fraction", rc.window_fraction},
              {"tau", rc.tau}});
    if (rc.subcommand == "compare") {
        opt("ground_truth", rc.ground_truth);
        opt("surface_id", rc.surface_id);
        j.update({{"budget", rc.budget}, {"n_seeds", rc.n_seeds}, {"epsilon", rc.epsilon}});
        j["constant_objective"] = rc.constant_objective ? nlohmann::json(*rc.constant_objective) : nlohmann::json(nullptr);
    }
    return j;
}

class Runner {
public:
    explicit Runner(RunConfig rc) : rc_(std::move(rc)) {}

    int execute() {
        if (rc_.subcommand == "ingest") return ingest();
        if (rc_.subcommand == "metafeatures") return metafeatures();
        if (rc_.subcommand == "recommend") return recommend_cmd();
        if (rc_.subcommand == "compare") return compare_cmd();
        if (rc_.subcommand == "benchgen") return benchgen();
        throw ValidationError("unknown subcommand '" + rc_.subcommand + "'");
    }

    const std::string& stage() const { return stage_; }

private:
    void set_stage(const std::string& s) { stage_ = s; }

    std::filesystem::path out_dir() const { return rc_.out; }

    TabularDataset load_dataset() {
        if (rc_.dataset.empty()) throw ValidationError("--dataset is required");
        CsvReadOptions opts;
        opts.target_column = rc_.target_col;
        return read_dataset_csv(rc_.dataset, opts);
    }

    std::string dataset_label() const {
        if (!rc_.dataset_id.empty()) return rc_.dataset_id;
        if (!rc_.dataset.empty()) return std::filesystem::path(rc_.dataset).stem().string();
        return "query";
    }

    std::string resolve_algorithm(const KnowledgeBase& kb) const {
        if (!rc_.algorithm.empty()) {
            kb.space(rc_.algorithm);
            return rc_.algorithm;
        }
        if (kb.spaces.size() == 1) return kb.spaces.begin()->first;
        throw ValidationError("--algorithm is required when the knowledge base has several spaces");
    }

    // Meta-features from --dataset, or the registry entry named by `fallback_id`.
    MetaFeatureVector query_features(const KnowledgeBase& kb, const std::string& fallback_id) {
        set_stage("metafeatures");
        if (!rc_.dataset.empty() || fallback_id.empty()) return extract(load_dataset(), rc_.seed);
        auto it = kb.meta_registry.find(fallback_id);
        if (it == kb.meta_registry.end()) {
            throw ValidationError("dataset '" + fallback_id + "' is not in the meta-feature registry");
        }
        return it->second;
    }

    PipelineOptions pipeline_options() const {
        PipelineOptions p;
        p.k_neighbors = rc_.k_neighbors;
        p.top_m = rc_.top_m;
        p.n_trees = rc_.n_trees;
        p.n_permutations = rc_.n_permutations;
        p.ranges.window_fraction = rc_.window_fraction;
        p.ranges.tau = rc_.tau;
        p.seed = rc_.seed;
        return p;
    }

    Recommendation run_pipeline(const KnowledgeBase& kb, const MetaFeatureVector& query, const std::string& algorithm) {
        std::optional<std::string> exclude;
        if (!rc_.exclude_dataset.empty()) exclude = rc_.exclude_dataset;
        return metashap::recommend(kb, query, algorithm, pipeline_options(), exclude, dataset_label(),
                                   [this](const std::string& s) { set_stage(s); });
    }

    void write_recommendation(const Recommendation& rec, const HyperparameterSpace& space) {
        set_stage("output");
        const auto flags = flags_json(rc_);
        nlohmann::json report = rec.report;
        report["schema_version"] = kReportSchema;
        report["provenance"]["flags"] = flags;
        write_json(out_dir() / "report.json", report);

        nlohmann::json attr = attribution_to_json(rec.attribution, rec.interactions, space);
        attr["schema_version"] = kAttributionSchema;
        attr["provenance"] = {{"flags", flags}};
        write_json(out_dir() / "attribution.json", attr);

        for (const auto& name : rec.report.selected) {
            const std::size_t d = *space.index_of(name);
            const auto col = rec.attribution.explained.col(static_cast<Eigen::Index>(d));
            const auto phi = rec.attribution.per_sample_phi.col(static_cast<Eigen::Index>(d));
            const std::vector<double> values(col.begin(), col.end());
            const std::vector<double> phis(phi.begin(), phi.end());
            const auto data = range_plot_data(space[d], values, phis, rc_.window_fraction);
            write_text(out_dir() / "plots" / (name + ".csv"), plot_csv(name, data, {{"flags", flags}}));
        }
    }

    int recommend_cmd() {
        set_stage("load-kb");
        if (rc_.kb.empty()) throw ValidationError("--kb is required");
        const KnowledgeBase kb = load_kb(rc_.kb);
        const std::string algorithm = resolve_algorithm(kb);
        const auto query = query_features(kb, rc_.dataset_id);
        const auto rec = run_pipeline(kb, query, algorithm);
        write_recommendation(rec, kb.space(algorithm));

        std::cout << "selected:";
        for (const auto& s : rec.report.selected) std::cout << ' ' << s;
        std::cout << "\nsurrogate_r2: " << format_fixed(rec.report.surrogate_r2, 6) << '\n';
        return kExitOk;
    }

    int compare_cmd() {
        set_stage("load-kb");
        if (rc_.kb.empty()) throw ValidationError("--kb is required");
        const KnowledgeBase kb = load_kb(rc_.kb);
        const std::string algorithm = resolve_algorithm(kb);
        const auto& space = kb.space(algorithm);

        set_stage("objective");
        Objective::Function objective;
        double optimum = 1.0;
        if (rc_.constant_objective) {
            const double c = *rc_.constant_objective;
            if (c < 0.0 || c > 1.0) throw ValidationError("--constant-objective must be in [0, 1]");
            objective = [c](const Config&) { return c; };
            optimum = c;
        } else {
            if (rc_.surface_id.empty()) throw ValidationError("--surface-id or --constant-objective is required");
            const std::filesystem::path gt =
                rc_.ground_truth.empty() ? std::filesystem::path(rc_.kb) / "ground_truth.json" : std::filesystem::path(rc_.ground_truth);
            auto surface = std::make_shared<SyntheticSurface>(load_surface(gt, rc_.surface_id));
            if (!(surface->space == space)) throw ValidationError("surface space does not match the algorithm space");
            optimum = load_truth(gt, rc_.surface_id).optimum_value;
            objective = [surface](const Config& c) { return surface->evaluate(c); };
        }

        const auto query = query_features(kb, rc_.dataset_id.empty() ? rc_.surface_id : rc_.dataset_id);
        const auto rec = run_pipeline(kb, query, algorithm);

        set_stage("optimize");
        CompareOptions opts;
        opts.budget = rc_.budget;
        opts.n_seeds = rc_.n_seeds;
        opts.epsilon = rc_.epsilon;
        opts.seed = rc_.seed;
        const auto result = compare(objective, space, rec.report, optimum, opts);

        write_recommendation(rec, space);
        const auto flags = flags_json(rc_);
        std::vector<SeededTrace> vanilla;
        std::vector<SeededTrace> guided;
        for (std::size_t i = 0; i < result.seeds.size(); ++i) {
            vanilla.push_back({result.seeds[i], &result.vanilla[i]});
            guided.push_back({result.seeds[i], &result.guided[i]});
        }
        write_text(out_dir() / "trace_vanilla.csv", trace_csv(vanilla, {{"flags", flags}}));
        write_text(out_dir() / "trace_guided.csv", trace_csv(guided, {{"flags", flags}}));

        auto mode_json = [&](const std::vector<BOTrace>& traces, const std::vector<int>& iters) {
            nlohmann::json series = nlohmann::json::array();
            for (const auto& t : traces) {
                std::vector<double> best;
                for (const auto& row : t.iterations) best.push_back(row.best_so_far);
                series.push_back(best);
            }
            std::vector<double> it(iters.begin(), iters.end());
            return nlohmann::json{{"best_so_far", series},
                                  {"iterations_to_within", iters},
                                  {"median_iterations", median(it)}};
        };
        nlohmann::json warnings = nlohmann::json::array();
        if (!result.guided.empty()) warnings = result.guided.front().warnings;
        const nlohmann::json summary = {{"schema_version", kCompareSchema},
                                        {"provenance", {{"flags", flags}}},
                                        {"optimum", optimum},
                                        {"epsilon", rc_.epsilon},
                                        {"budget", rc_.budget},
                                        {"seeds", result.seeds},
                                        {"selected", rec.report.selected},
                                        {"vanilla", mode_json(result.vanilla, result.vanilla_iterations)},
                                        {"guided", mode_json(result.guided, result.guided_iterations)},
                                        {"speedup_ratio", result.speedup},
                                        {"warnings", warnings}};
        write_json(out_dir() / "compare_summary.json", summary);
        std::cout << "speedup_ratio: " << format_fixed(result.speedup, 6) << '\n';
        return kExitOk;
    }

    int metafeatures() {
        set_stage("metafeatures");
        const auto mf = extract(load_dataset(), rc_.seed);
        set_stage("output");
        nlohmann::json values = nlohmann::json::object();
        for (std::size_t i = 0; i < kMetaFeatureCount; ++i) values[std::string(kMetaFeatureNames[i])] = mf[i];
        const nlohmann::json out = {{"schema_version", kMetaFeaturesSchema},
                                    {"dataset", dataset_label()},
                                    {"values", values},
                                    {"provenance", {{"flags", flags_json(rc_)}}}};
        write_json(out_dir() / "metafeatures.json", out);
        return kExitOk;
    }

    int ingest() {
        set_stage("load-kb");
        if (rc_.kb.empty()) throw ValidationError("--kb is required");
        KnowledgeBase kb;
        const bool exists = std::filesystem::exists(rc_.kb);
        if (exists) kb = load_kb(rc_.kb);
        if (!rc_.metric.empty()) kb.metric = rc_.metric;

        set_stage("ingest");
        std::size_t spaces_added = 0;
        if (!rc_.spaces.empty()) {
            std::ifstream in(rc_.spaces);
            if (!in) throw LoadError("cannot open spaces file '" + rc_.spaces + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError("spaces file: " + std::string(e.what()));
            }
            for (const auto& [id, space] : j.items()) {
                kb.spaces[id] = space.get<HyperparameterSpace>();
                ++spaces_added;
            }
        }
        if (!exists && rc_.spaces.empty()) {
            throw LoadError("knowledge base '" + rc_.kb + "' does not exist; pass --spaces to create it");
        }
        bool registry_added = false;
        if (!rc_.dataset.empty()) {
            set_stage("metafeatures");
            if (rc_.dataset_id.empty()) throw ValidationError("--dataset-id is required with --dataset");
            kb.meta_registry[rc_.dataset_id] = extract(load_dataset(), rc_.seed);
            registry_added = true;
        }
        std::size_t records_added = 0;
        if (!rc_.records.empty()) {
            set_stage("ingest");
            std::ifstream in(rc_.records);
            if (!in) throw LoadError("cannot open records file '" + rc_.records + "'");
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                try {
                    auto rec = record_from_json(nlohmann::json::parse(line));
                    validate_record(rec, kb);
                    kb.records.push_back(std::move(rec));
                } catch (const std::exception& e) {
                    throw ValidationError(rc_.records + " line " + std::to_string(line_no) + ": " + e.what());
                }
                ++records_added;
            }
        }
        set_stage("output");
        save_kb(kb, rc_.kb);
        const nlohmann::json summary = {{"schema_version", kIngestSchema},
                                        {"records_added", records_added},
                                        {"spaces_added", spaces_added},
                                        {"registry_added", registry_added},
                                        {"total_records", kb.records.size()},
                                        {"provenance", {{"flags", flags_json(rc_)}}}};
        std::cout << canonical_dump(summary);
        return kExitOk;
    }

    std::vector<ShapeKind> parse_shapes() const {
        std::vector<ShapeKind> out;
        std::stringstream ss(rc_.shapes);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) out.push_back(shape_kind_from_string(item));
        }
        return out;
    }

    int benchgen() {
        set_stage("benchgen");
        BenchmarkOptions opts;
        opts.n_datasets = rc_.n_datasets;
        opts.configs_per_dataset = rc_.configs;
        opts.clusters = rc_.clusters;
        opts.surface.k = rc_.k;
        opts.surface.n_relevant = rc_.n_relevant;
        opts.surface.interaction_pairs = rc_.interaction_pairs;
        opts.surface.noise_sigma = rc_.noise;
        opts.surface.shapes = parse_shapes();
        opts.algorithm_id = rc_.algorithm.empty() ? "xgboost" : rc_.algorithm;
        opts.seed = rc_.seed;
        opts.metafeature_seed = rc_.seed;
        const auto bench = generate_kb(opts);
        set_stage("output");
        write_benchmark(bench, out_dir());
        const nlohmann::json manifest = {{"schema_version", kBenchgenSchema},
                                         {"records", bench.kb.records.size()},
                                         {"datasets", bench.datasets.size()},
                                         {"provenance", {{"flags", flags_json(rc_)}}}};
        write_json(out_dir() / "benchgen.json", manifest);
        std::cout << "wrote " << bench.kb.records.size() << " records for " << bench.datasets.size()
                  << " datasets to " << rc_.out << '\n';
        return kExitOk;
    }

    RunConfig rc_;
    std::string stage_ = "parse";
};

void add_pipeline_flags(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--kb", rc.kb, "Knowledge base directory")->required();
    cmd->add_option("--dataset", rc.dataset, "Query dataset CSV");
    cmd->add_option("--target-col", rc.target_col, "Target column of the query dataset");
    cmd->add_option("--dataset-id", rc.dataset_id, "Label of the query; a registry id when --dataset is absent");
    cmd->add_option("--exclude-dataset", rc.exclude_dataset, "Registry id left out of retrieval");
    cmd->add_option("--algorithm", rc.algorithm, "Algorithm id in the knowledge base");
    cmd->add_option("--k-neighbors", rc.k_neighbors, "Neighbors retrieved")->check(CLI::Range(1, 1000000));
    cmd->add_option("--top-m", rc.top_m, "Parameters selected")->check(CLI::Range(1, 64));
    cmd->add_option("--n-trees", rc.n_trees, "Surrogate forest size")->check(CLI::Range(1, 100000));
    cmd->add_option("--n-permutations", rc.n_permutations, "Permutations when attribution is sampled")
        ->check(CLI::Range(100, 100000000));
    cmd->add_option("--window-fraction", rc.window_fraction, "Smoothing window as a fraction of samples")
        ->check(CLI::Range(1e-6, 1.0));
    cmd->add_option("--tau", rc.tau, "Fraction of the smoothed peak kept")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", rc.seed, "Base seed");
    cmd->add_option("--out", rc.out, "Output directory");
}

} // namespace

int run(int argc, const char* const* argv) {
    RunConfig rc;
    CLI::App app{"Meta-learned hyperparameter importance and tuning ranges", "metashap"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Add records, spaces or a dataset to a knowledge base");
    ingest->add_option("--kb", rc.kb, "Knowledge base directory")->required();
    ingest->add_option("--records", rc.records, "JSON-lines file of records");
    ingest->add_option("--spaces", rc.spaces, "JSON object of search spaces");
    ingest->add_option("--dataset", rc.dataset, "Dataset CSV to register");
    ingest->add_option("--target-col", rc.target_col, "Target column");
    ingest->add_option("--dataset-id", rc.dataset_id, "Registry id for --dataset");
    ingest->add_option("--metric", rc.metric, "Performance metric name");
    ingest->add_option("--seed", rc.seed, "Landmarker seed");

    auto* mf = app.add_subcommand("metafeatures", "Compute dataset meta-features");
    mf->add_option("--dataset", rc.dataset, "Dataset CSV")->required();
    mf->add_option("--target-col", rc.target_col, "Target column");
    mf->add_option("--dataset-id", rc.dataset_id, "Label written to the output");
    mf->add_option("--seed", rc.seed, "Landmarker seed");
    mf->add_option("--out", rc.out, "Output directory");

    auto* rec = app.add_subcommand("recommend", "Rank hyperparameters and recommend tuning ranges");
    add_pipeline_flags(rec, rc);

    auto* cmp = app.add_subcommand("compare", "Vanilla versus guided Bayesian optimization");
    add_pipeline_flags(cmp, rc);
    cmp->add_option("--budget", rc.budget, "Evaluations per run")->check(CLI::Range(1, 100000));
    cmp->add_option("--n-seeds", rc.n_seeds, "Paired runs")->check(CLI::Range(1, 100000));
    cmp->add_option("--epsilon", rc.epsilon, "Tolerance to the optimum")->check(CLI::Range(0.0, 1.0));
    cmp->add_option("--surface-id", rc.surface_id, "Dataset id whose synthetic surface is the objective");
    cmp->add_option("--ground-truth", rc.ground_truth, "ground_truth.json (default: <kb>/ground_truth.json)");
    cmp->add_option("--constant-objective", rc.constant_objective, "Use a constant objective");

    auto* bg = app.add_subcommand("benchgen", "Generate a synthetic knowledge base with ground truth");
    bg->add_option("--out", rc.out, "Output directory")->required();
    bg->add_option("--n-datasets", rc.n_datasets, "Datasets")->check(CLI::Range(2, 100000));
    bg->add_option("--configs", rc.configs, "Configurations per dataset")->check(CLI::Range(1, 10000000));
    bg->add_option("--k", rc.k, "Hyperparameters")->check(CLI::Range(1, 32));
    bg->add_option("--n-relevant", rc.n_relevant, "Parameters with a shape term")->check(CLI::Range(1, 32));
    bg->add_option("--interaction-pairs", rc.interaction_pairs, "Pairwise terms");
    bg->add_option("--clusters", rc.clusters, "Dataset clusters")->check(CLI::Range(1, 100000));
    bg->add_option("--noise", rc.noise, "Observation noise sigma")->check(CLI::Range(0.0, 1.0));
    bg->add_option("--shapes", rc.shapes, "Comma-separated shape kinds: bump, ramp, step");
    bg->add_option("--algorithm", rc.algorithm, "Algorithm id");
    bg->add_option("--seed", rc.seed, "Base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    for (auto* sub : app.get_subcommands()) rc.subcommand = sub->get_name();

    Runner runner(rc);
    try {
        return runner.execute();
    } catch (const ValidationError& e) {
        std::cerr << "error [" << runner.stage() << "]: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error [" << runner.stage() << "]: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("metashap");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace metashap::cli
