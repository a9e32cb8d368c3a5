#include "metashap/benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "metashap/error.hpp"
#include "metashap/optimizer.hpp"
#include "metashap/sampling.hpp"

namespace metashap {

namespace {

constexpr std::size_t kRangeGridPoints = 100000;
constexpr std::size_t kRegionGridPoints = 10001;
constexpr std::size_t kRefineGridPoints = 2001;
constexpr double kOptimumGridBudget = 2e5;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

bool is_discrete(const ParamSpec& spec) { return spec.kind != ParamKind::kContinuous; }

std::size_t level_count(const ParamSpec& spec) {
    if (spec.kind == ParamKind::kCategorical) return spec.categories.size();
    return static_cast<std::size_t>(spec.hi - spec.lo) + 1;
}

// Unit coordinates reachable by a discrete parameter, uniformly weighted under the full domain.
std::vector<double> discrete_units(const ParamSpec& spec) {
    const std::size_t n = level_count(spec);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    return out;
}

// Unit coordinate of the value the full domain maps u onto.
double snap_unit(const ParamSpec& spec, double u) {
    if (!is_discrete(spec)) return u;
    const std::size_t n = level_count(spec);
    if (n < 2) return 0.0;
    const auto idx = std::min(static_cast<std::size_t>(std::floor(u * static_cast<double>(n))), n - 1);
    return static_cast<double>(idx) / static_cast<double>(n - 1);
}

double second_moment_about_half(const ParamSpec& spec) {
    if (!is_discrete(spec)) return 1.0 / 12.0;
    double s = 0.0;
    const auto units = discrete_units(spec);
    for (double u : units) s += (u - 0.5) * (u - 0.5);
    return s / static_cast<double>(units.size());
}

double unit_to_raw_number(const ParamSpec& spec, double u) {
    if (spec.kind == ParamKind::kInteger) return spec.lo + u * (spec.hi - spec.lo);
    const double e = spec.encoded_lo() + u * (spec.encoded_hi() - spec.encoded_lo());
    return spec.log_scale ? std::pow(10.0, e) : e;
}

double term_variance(const ShapeTerm& term, const ParamSpec& spec) {
    if (term.kind == ShapeKind::kNone || term.weight == 0.0) return 0.0;
    if (is_discrete(spec)) {
        const auto units = discrete_units(spec);
        double mean = 0.0;
        for (double u : units) mean += term(u);
        mean /= static_cast<double>(units.size());
        double var = 0.0;
        for (double u : units) var += (term(u) - mean) * (term(u) - mean);
        return var / static_cast<double>(units.size());
    }
    const double w = term.weight;
    switch (term.kind) {
    case ShapeKind::kBump:
        return bump_variance(term);
    case ShapeKind::kRamp: {
        const double s = term.steepness;
        const double a = -s * term.center;
        const double b = s * (1.0 - term.center);
        const double m1 = (softplus(b) - softplus(a)) / s;
        const double m2 = m1 - (sigmoid(b) - sigmoid(a)) / s;
        return w * w * std::max(0.0, m2 - m1 * m1);
    }
    case ShapeKind::kStep: {
        const double p = term.ascending ? 1.0 - term.center : term.center;
        return w * w * p * (1.0 - p);
    }
    case ShapeKind::kNone:
        break;
    }
    return 0.0;
}

// Maximizer of one term on its parameter's reachable unit coordinates.
double term_argmax(const ShapeTerm& term, const ParamSpec& spec) {
    if (is_discrete(spec)) {
        const auto units = discrete_units(spec);
        std::size_t best = 0;
        for (std::size_t i = 1; i < units.size(); ++i) {
            if (term(units[i]) > term(units[best])) best = i;
        }
        return units[best];
    }
    switch (term.kind) {
    case ShapeKind::kBump:
        return term.center;
    case ShapeKind::kRamp:
        return term.steepness > 0.0 ? 1.0 : 0.0;
    case ShapeKind::kStep:
        return term.ascending ? 0.5 * (term.center + 1.0) : 0.5 * term.center;
    case ShapeKind::kNone:
        break;
    }
    return 0.5;
}

std::vector<double> candidate_units(const ParamSpec& spec, std::size_t n) {
    if (is_discrete(spec)) {
        auto units = discrete_units(spec);
        if (units.size() <= n) return units;
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(
                std::llround(static_cast<double>(i) * static_cast<double>(units.size() - 1) / static_cast<double>(n - 1)));
            out[i] = units[idx];
        }
        return out;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

std::vector<double> optimum_units(const SyntheticSurface& s, const std::vector<std::size_t>& relevant) {
    std::vector<double> u = s.unit(s.space.default_config());
    for (std::size_t p : relevant) u[p] = term_argmax(s.terms[p], s.space[p]);
    if (s.pairs.empty()) return u;

    // Grid start over the relevant coordinates, then coordinate ascent from both starts.
    const double per_dim = std::pow(kOptimumGridBudget, 1.0 / static_cast<double>(relevant.size()));
    const std::size_t g = std::clamp<std::size_t>(static_cast<std::size_t>(per_dim), 3, 41);
    std::vector<std::vector<double>> axes;
    for (std::size_t p : relevant) axes.push_back(candidate_units(s.space[p], g));

    std::vector<double> grid_best = u;
    double grid_value = s.raw(u);
    std::vector<std::size_t> idx(relevant.size(), 0);
    std::vector<double> probe = u;
    while (true) {
        for (std::size_t d = 0; d < relevant.size(); ++d) probe[relevant[d]] = axes[d][idx[d]];
        const double v = s.raw(probe);
        if (v > grid_value) {
            grid_value = v;
            grid_best = probe;
        }
        std::size_t d = 0;
        while (d < idx.size() && ++idx[d] == axes[d].size()) idx[d++] = 0;
        if (d == idx.size()) break;
    }

    auto ascend = [&](std::vector<double> x) {
        double value = s.raw(x);
        for (int round = 0; round < 50; ++round) {
            bool improved = false;
            for (std::size_t p : relevant) {
                auto cands = candidate_units(s.space[p], kRefineGridPoints);
                cands.push_back(term_argmax(s.terms[p], s.space[p]));
                const double keep = x[p];
                double best_u = keep;
                for (double c : cands) {
                    x[p] = c;
                    const double v = s.raw(x);
                    if (v > value + 1e-15) {
                        value = v;
                        best_u = c;
                        improved = true;
                    }
                }
                x[p] = best_u;
            }
            if (!improved) break;
        }
        return std::pair{x, value};
    };
    auto [a, va] = ascend(u);
    auto [b, vb] = ascend(grid_best);
    return va >= vb ? a : b;
}

std::vector<Interval> mask_runs(const std::vector<double>& grid, const std::vector<bool>& mask) {
    std::vector<Interval> out;
    std::size_t i = 0;
    while (i < grid.size()) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < grid.size() && mask[j + 1]) ++j;
        out.push_back({grid[i], grid[j]});
        i = j + 1;
    }
    return out;
}

GoodRegion good_region(const ShapeTerm& term, const ParamSpec& spec) {
    GoodRegion region;
    region.param = spec.name;
    if (spec.kind == ParamKind::kCategorical) {
        const auto units = discrete_units(spec);
        double peak = 0.0;
        for (double u : units) peak = std::max(peak, term(u));
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (term(units[i]) >= 0.5 * peak) region.categories.push_back(spec.categories[i]);
        }
        return region;
    }
    std::vector<double> grid(kRegionGridPoints);
    std::vector<double> values(kRegionGridPoints);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kRegionGridPoints; ++i) {
        grid[i] = static_cast<double>(i) / static_cast<double>(kRegionGridPoints - 1);
        values[i] = term(grid[i]);
        peak = std::max(peak, values[i]);
    }
    std::vector<bool> mask(kRegionGridPoints);
    for (std::size_t i = 0; i < kRegionGridPoints; ++i) mask[i] = values[i] >= 0.5 * peak;
    region.unit = mask_runs(grid, mask);
    for (const auto& iv : region.unit) {
        region.raw.push_back({unit_to_raw_number(spec, iv.lo), unit_to_raw_number(spec, iv.hi)});
    }
    return region;
}

ShapeTerm random_term(ShapeKind kind, double weight, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ShapeTerm t;
    t.kind = kind;
    t.weight = weight;
    switch (kind) {
    case ShapeKind::kBump:
        t.center = 0.25 + 0.5 * unif(rng);
        t.width = 0.25 + 0.15 * unif(rng);
        break;
    case ShapeKind::kRamp:
        t.center = 0.3 + 0.4 * unif(rng);
        t.steepness = (8.0 + 7.0 * unif(rng)) * (unif(rng) < 0.5 ? -1.0 : 1.0);
        break;
    case ShapeKind::kStep:
        t.center = 0.3 + 0.4 * unif(rng);
        t.ascending = unif(rng) < 0.5;
        break;
    case ShapeKind::kNone:
        break;
    }
    return t;
}

std::string dataset_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ds%03zu", i);
    return buf;
}

struct DatasetProfile {
    std::size_t n_rows = 200;
    std::size_t n_features = 6;
    int n_classes = 2;
    double categorical_fraction = 0.0;
    double missing_fraction = 0.0;
    double class_ratio = 1.0; // geometric decay of class probabilities
    Eigen::MatrixXd class_means;
    std::vector<double> scale;
    std::vector<double> offset;
    std::vector<bool> skewed;
    std::vector<bool> categorical;
    std::vector<int> levels;
};

DatasetProfile make_profile(std::size_t cluster, std::uint64_t seed) {
    struct Base {
        std::size_t n;
        std::size_t p;
        int c;
        double cat;
        double miss;
        double sep;
        double ratio;
    };
    static constexpr Base kBases[] = {
        {160, 5, 2, 0.0, 0.0, 2.5, 1.0},  {600, 20, 3, 0.3, 0.04, 0.6, 0.5},
        {300, 10, 2, 0.1, 0.01, 1.5, 0.8}, {900, 30, 4, 0.5, 0.08, 0.3, 0.4},
        {220, 8, 3, 0.2, 0.0, 1.0, 0.9},   {800, 15, 2, 0.0, 0.02, 2.0, 0.3},
    };
    Rng rng(derive_seed(seed, cluster));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Base base = kBases[cluster % std::size(kBases)];
    if (cluster >= std::size(kBases)) {
        base.n = 150 + static_cast<std::size_t>(850 * unif(rng));
        base.p = 4 + static_cast<std::size_t>(30 * unif(rng));
        base.c = 2 + static_cast<int>(3 * unif(rng));
        base.cat = 0.5 * unif(rng);
        base.miss = 0.08 * unif(rng);
        base.sep = 0.3 + 2.2 * unif(rng);
        base.ratio = 0.3 + 0.7 * unif(rng);
    }

    DatasetProfile prof;
    prof.n_rows = base.n;
    prof.n_features = base.p;
    prof.n_classes = base.c;
    prof.categorical_fraction = base.cat;
    prof.missing_fraction = base.miss;
    prof.class_ratio = base.ratio;
    prof.class_means.resize(base.c, static_cast<Eigen::Index>(base.p));
    for (Eigen::Index k = 0; k < prof.class_means.rows(); ++k) {
        for (Eigen::Index f = 0; f < prof.class_means.cols(); ++f) prof.class_means(k, f) = base.sep * normal(rng);
    }
    const auto n_cat = static_cast<std::size_t>(std::round(base.cat * static_cast<double>(base.p)));
    for (std::size_t f = 0; f < base.p; ++f) {
        prof.scale.push_back(0.5 + 2.5 * unif(rng));
        prof.offset.push_back(-2.0 + 7.0 * unif(rng));
        prof.skewed.push_back(unif(rng) < 0.3);
        prof.categorical.push_back(f < n_cat);
        prof.levels.push_back(3 + static_cast<int>(4 * unif(rng)));
    }
    return prof;
}

TabularDataset synthesize_dataset(const DatasetProfile& prof, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto n = static_cast<std::size_t>(
        std::round(static_cast<double>(prof.n_rows) * (0.95 + 0.1 * unif(rng))));
    const std::size_t p = prof.n_features;
    const int c = prof.n_classes;

    std::vector<double> class_p(static_cast<std::size_t>(c));
    for (int k = 0; k < c; ++k) class_p[static_cast<std::size_t>(k)] = std::pow(prof.class_ratio, k);
    std::discrete_distribution<int> pick_class(class_p.begin(), class_p.end());

    TabularDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    ds.target.resize(n);
    ds.categorical_mask = prof.categorical;
    for (std::size_t f = 0; f < p; ++f) ds.feature_names.push_back("f" + std::to_string(f));

    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < 2 * static_cast<std::size_t>(c) ? static_cast<int>(i) % c : pick_class(rng);
        ds.target[i] = label;
        for (std::size_t f = 0; f < p; ++f) {
            const double z = prof.class_means(label, static_cast<Eigen::Index>(f)) + normal(rng);
            double v = 0.0;
            if (prof.categorical[f]) {
                const int levels = prof.levels[f];
                v = std::clamp(std::floor((z + 2.0) / 4.0 * levels), 0.0, static_cast<double>(levels - 1));
            } else {
                v = prof.offset[f] + prof.scale[f] * (prof.skewed[f] ? std::exp(0.5 * z) : z);
            }
            const bool missing = i > 0 && unif(rng) < prof.missing_fraction;
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
                missing ? std::numeric_limits<double>::quiet_NaN() : v;
        }
    }

    // Dense category codes so a CSV round trip reproduces them.
    for (std::size_t f = 0; f < p; ++f) {
        if (!prof.categorical[f]) continue;
        auto col = ds.features.col(static_cast<Eigen::Index>(f));
        std::set<double> used;
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            if (!std::isnan(col(i))) used.insert(col(i));
        }
        std::map<double, double> remap;
        double next = 0.0;
        for (double u : used) remap[u] = next++;
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            if (!std::isnan(col(i))) col(i) = remap[col(i)];
        }
    }
    ds.validate();
    return ds;
}

nlohmann::json intervals_json(const std::vector<Interval>& ivs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& iv : ivs) j.push_back({iv.lo, iv.hi});
    return j;
}

std::vector<Interval> intervals_from_json(const nlohmann::json& j) {
    std::vector<Interval> out;
    for (const auto& iv : j) out.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    return out;
}

std::size_t param_index(const HyperparameterSpace& space, const std::string& name) {
    auto idx = space.index_of(name);
    if (!idx) throw ValidationError("unknown parameter '" + name + "' in surface");
    return *idx;
}

nlohmann::json load_entry(const std::filesystem::path& file, const std::string& id) {
    std::ifstream in(file);
    if (!in) throw LoadError("cannot open ground truth file '" + file.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("ground truth file '" + file.string() + "': " + e.what());
    }
    const auto& datasets = j.at("datasets");
    if (!datasets.contains(id)) throw ValidationError("dataset '" + id + "' not in ground truth file");
    return datasets.at(id);
}

} // namespace

const char* to_string(ShapeKind kind) {
    switch (kind) {
    case ShapeKind::kNone:
        return "none";
    case ShapeKind::kBump:
        return "bump";
    case ShapeKind::kRamp:
        return "ramp";
    case ShapeKind::kStep:
        return "step";
    }
    return "none";
}

ShapeKind shape_kind_from_string(const std::string& text) {
    if (text == "none") return ShapeKind::kNone;
    if (text == "bump") return ShapeKind::kBump;
    if (text == "ramp") return ShapeKind::kRamp;
    if (text == "step") return ShapeKind::kStep;
    throw ValidationError("unknown shape kind '" + text + "'");
}

double ShapeTerm::operator()(double u) const {
    switch (kind) {
    case ShapeKind::kNone:
        return 0.0;
    case ShapeKind::kBump: {
        const double t = (u - center) / width;
        return weight * std::max(0.0, 1.0 - t * t);
    }
    case ShapeKind::kRamp:
        return weight * sigmoid(steepness * (u - center));
    case ShapeKind::kStep:
        return weight * ((ascending ? u > center : u <= center) ? 1.0 : 0.0);
    }
    return 0.0;
}

double SyntheticSurface::unit(std::size_t param, const RawValue& value) const {
    const auto& spec = space[param];
    const double e = encode_value(spec, value);
    switch (spec.kind) {
    case ParamKind::kContinuous:
        return (e - spec.encoded_lo()) / (spec.encoded_hi() - spec.encoded_lo());
    case ParamKind::kInteger:
        return spec.hi > spec.lo ? (e - spec.lo) / (spec.hi - spec.lo) : 0.0;
    case ParamKind::kCategorical:
        return spec.categories.size() > 1 ? e / static_cast<double>(spec.categories.size() - 1) : 0.0;
    }
    return 0.0;
}

std::vector<double> SyntheticSurface::unit(const Config& config) const {
    std::vector<double> u(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        auto it = config.find(space[i].name);
        if (it == config.end()) throw ValidationError("config is missing parameter '" + space[i].name + "'");
        u[i] = unit(i, it->second);
    }
    return u;
}

Config SyntheticSurface::config_at(std::span<const double> unit_point) const {
    if (unit_point.size() != space.size()) throw ValidationError("unit point has the wrong dimension");
    Config config;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& spec = space[i];
        const double u = std::clamp(unit_point[i], 0.0, 1.0);
        switch (spec.kind) {
        case ParamKind::kContinuous:
            config[spec.name] = decode_value(spec, spec.encoded_lo() + u * (spec.encoded_hi() - spec.encoded_lo()));
            break;
        case ParamKind::kInteger:
            config[spec.name] = spec.lo + std::round(u * (spec.hi - spec.lo));
            break;
        case ParamKind::kCategorical: {
            const auto n = static_cast<double>(spec.categories.size() - 1);
            config[spec.name] = spec.categories[static_cast<std::size_t>(std::llround(u * n))];
            break;
        }
        }
    }
    return config;
}

double SyntheticSurface::raw(std::span<const double> unit_point) const {
    double r = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) r += terms[i](unit_point[i]);
    for (const auto& pt : pairs) {
        r += pt.weight * 4.0 * (unit_point[pt.first] - 0.5) * (unit_point[pt.second] - 0.5);
    }
    return r;
}

double SyntheticSurface::evaluate(const Config& config) const {
    const auto u = unit(config);
    const double span = raw_max - raw_min;
    if (span <= 0.0) return 0.0;
    return std::clamp((raw(u) - raw_min) / span, 0.0, 1.0);
}

double SyntheticSurface::evaluate_noisy(const Config& config, Rng& rng) const {
    const double clean = evaluate(config);
    if (noise_sigma <= 0.0) return clean;
    std::normal_distribution<double> noise(0.0, noise_sigma);
    return std::clamp(clean + noise(rng), 0.0, 1.0);
}

HyperparameterSpace benchmark_space(std::size_t k) {
    if (k == 0) throw ValidationError("benchmark space needs at least one parameter");
    std::vector<ParamSpec> all = {
        ParamSpec::continuous("learning_rate", 1e-3, 1.0, 0.3, true),
        ParamSpec::integer("max_depth", 1, 20, 6),
        ParamSpec::continuous("subsample", 0.1, 1.0, 1.0),
        ParamSpec::continuous("colsample_bytree", 0.1, 1.0, 1.0),
        ParamSpec::continuous("min_child_weight", 1e-2, 1e2, 1.0, true),
        ParamSpec::continuous("gamma", 0.0, 10.0, 0.0),
        ParamSpec::continuous("reg_lambda", 1e-3, 1e2, 1.0, true),
        ParamSpec::categorical("booster", {"gbtree", "gblinear", "dart"}, "gbtree"),
        ParamSpec::integer("n_estimators", 10, 1000, 100),
        ParamSpec::continuous("reg_alpha", 0.0, 10.0, 0.0),
        ParamSpec::integer("max_bin", 16, 512, 256),
        ParamSpec::continuous("scale_pos_weight", 0.1, 10.0, 1.0),
    };
    for (std::size_t i = all.size(); i < k; ++i) {
        all.push_back(ParamSpec::continuous("extra_" + std::to_string(i - 11), 0.0, 1.0, 0.5));
    }
    all.resize(k);
    return HyperparameterSpace(std::move(all));
}

double bump_variance(const ShapeTerm& term) {
    const double c = term.center;
    const double r = term.width;
    const double a = std::max(-1.0, -c / r);
    const double b = std::min(1.0, (1.0 - c) / r);
    if (b <= a) return 0.0;
    const double d1 = b - a;
    const double d3 = (b * b * b - a * a * a) / 3.0;
    const double d5 = (std::pow(b, 5) - std::pow(a, 5)) / 5.0;
    const double w = term.weight;
    const double m1 = w * r * (d1 - d3);
    const double m2 = w * w * r * (d1 - 2.0 * d3 + d5);
    return std::max(0.0, m2 - m1 * m1);
}

double monte_carlo_variance(const ShapeTerm& term, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw ValidationError("monte carlo variance needs at least 2 samples");
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double v = term(unif(rng));
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    return m2 / static_cast<double>(n_samples);
}

double interval_jaccard(std::span<const Interval> a, std::span<const Interval> b) {
    auto length = [](std::span<const Interval> s) {
        double total = 0.0;
        for (const auto& iv : s) total += std::max(0.0, iv.hi - iv.lo);
        return total;
    };
    double inter = 0.0;
    for (const auto& x : a) {
        for (const auto& y : b) inter += std::max(0.0, std::min(x.hi, y.hi) - std::max(x.lo, y.lo));
    }
    const double uni = length(a) + length(b) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

GroundTruth finalize_surface(SyntheticSurface& surface) {
    const auto& space = surface.space;
    if (surface.terms.size() != space.size()) throw ValidationError("surface needs one term per parameter");

    GroundTruth truth;
    std::vector<std::size_t> relevant;
    for (std::size_t p = 0; p < space.size(); ++p) {
        if (surface.terms[p].kind != ShapeKind::kNone) relevant.push_back(p);
    }
    std::stable_sort(relevant.begin(), relevant.end(), [&](std::size_t a, std::size_t b) {
        return surface.terms[a].weight > surface.terms[b].weight;
    });
    truth.relevant = relevant;

    const auto opt_u = optimum_units(surface, relevant);
    truth.optimum = surface.config_at(opt_u);
    const double opt_raw = surface.raw(surface.unit(truth.optimum));

    // Output range from a quasi-random grid snapped onto reachable values.
    const RowMatrix grid = halton(kRangeGridPoints, space.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<double> u(space.size());
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (std::size_t p = 0; p < space.size(); ++p) u[p] = snap_unit(space[p], grid(i, static_cast<Eigen::Index>(p)));
        const double v = surface.raw(u);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    hi = std::max(hi, opt_raw);
    surface.raw_min = lo;
    surface.raw_max = hi > lo ? hi : lo + 1.0;
    truth.optimum_value = surface.evaluate(truth.optimum);

    const double scale = surface.raw_max - surface.raw_min;
    truth.variance.assign(space.size(), 0.0);
    for (std::size_t p = 0; p < space.size(); ++p) truth.variance[p] = term_variance(surface.terms[p], space[p]);
    for (const auto& pt : surface.pairs) {
        const double v = 16.0 * pt.weight * pt.weight * second_moment_about_half(space[pt.first]) *
                         second_moment_about_half(space[pt.second]);
        truth.variance[pt.first] += 0.5 * v;
        truth.variance[pt.second] += 0.5 * v;
    }
    for (double& v : truth.variance) v /= scale * scale;

    for (std::size_t p : relevant) truth.good_regions.push_back(good_region(surface.terms[p], space[p]));
    return truth;
}

std::pair<SyntheticSurface, GroundTruth> make_surface(const SurfaceOptions& options, std::uint64_t seed) {
    const std::size_t k = options.k;
    if (k == 0) throw ValidationError("make_surface: k must be >= 1");
    if (options.n_relevant < 1 || options.n_relevant > k) {
        throw ValidationError("make_surface: n_relevant must be in [1, k]");
    }
    const std::size_t max_pairs = options.n_relevant * (options.n_relevant - 1) / 2;
    if (options.interaction_pairs > max_pairs) {
        throw ValidationError("make_surface: interaction_pairs must be <= n_relevant*(n_relevant-1)/2");
    }
    if (options.noise_sigma < 0.0) throw ValidationError("make_surface: noise_sigma must be >= 0");
    if (options.shapes.empty()) throw ValidationError("make_surface: no shape kinds allowed");
    for (auto s : options.shapes) {
        if (s == ShapeKind::kNone) throw ValidationError("make_surface: shape kinds must be non-null");
    }

    SyntheticSurface surface;
    surface.space = benchmark_space(k);
    surface.noise_sigma = options.noise_sigma;
    surface.terms.assign(k, ShapeTerm{});

    Rng rng(derive_seed(seed, "surface"));
    std::vector<std::size_t> numeric;
    std::vector<std::size_t> categorical;
    for (std::size_t p = 0; p < k; ++p) (surface.space[p].is_numeric() ? numeric : categorical).push_back(p);
    std::shuffle(numeric.begin(), numeric.end(), rng);
    std::shuffle(categorical.begin(), categorical.end(), rng);
    std::vector<std::size_t> order = numeric;
    order.insert(order.end(), categorical.begin(), categorical.end());
    order.resize(options.n_relevant);

    std::uniform_int_distribution<std::size_t> pick_shape(0, options.shapes.size() - 1);
    double weight = 1.0;
    for (std::size_t p : order) {
        surface.terms[p] = random_term(options.shapes[pick_shape(rng)], weight, rng);
        weight *= 0.5;
    }

    std::vector<std::pair<std::size_t, std::size_t>> all_pairs;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            all_pairs.emplace_back(std::min(order[a], order[b]), std::max(order[a], order[b]));
        }
    }
    std::shuffle(all_pairs.begin(), all_pairs.end(), rng);
    for (std::size_t i = 0; i < options.interaction_pairs; ++i) {
        const auto [a, b] = all_pairs[i];
        surface.pairs.push_back({a, b, 0.5 * std::sqrt(surface.terms[a].weight * surface.terms[b].weight)});
    }

    GroundTruth truth = finalize_surface(surface);
    return {std::move(surface), std::move(truth)};
}

std::pair<SyntheticSurface, GroundTruth> make_surface(std::size_t k, std::size_t n_relevant,
                                                      std::size_t interaction_pairs, double noise_sigma,
                                                      std::uint64_t seed) {
    SurfaceOptions options;
    options.k = k;
    options.n_relevant = n_relevant;
    options.interaction_pairs = interaction_pairs;
    options.noise_sigma = noise_sigma;
    return make_surface(options, seed);
}

const BenchmarkDataset& Benchmark::dataset(const std::string& id) const {
    for (const auto& d : datasets) {
        if (d.id == id) return d;
    }
    throw ValidationError("dataset '" + id + "' not in benchmark");
}

Benchmark generate_kb(const BenchmarkOptions& options) {
    if (options.n_datasets < 2) throw ValidationError("generate_kb: n_datasets must be >= 2");
    if (options.clusters < 1 || options.clusters > options.n_datasets) {
        throw ValidationError("generate_kb: clusters must be in [1, n_datasets]");
    }
    if (options.configs_per_dataset < 1) throw ValidationError("generate_kb: configs_per_dataset must be >= 1");
    if (options.weight_jitter < 0.0 || options.weight_jitter >= 1.0) {
        throw ValidationError("generate_kb: weight_jitter must be in [0, 1)");
    }

    Benchmark bench;
    bench.options = options;
    bench.kb.spaces[options.algorithm_id] = benchmark_space(options.surface.k);

    // One template per cluster; clusters get distinct relevant sets when the space allows it.
    std::vector<SyntheticSurface> templates;
    std::vector<std::set<std::size_t>> relevant_sets;
    for (std::size_t c = 0; c < options.clusters; ++c) {
        SyntheticSurface tmpl;
        std::set<std::size_t> rel;
        for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
            tmpl = make_surface(options.surface, derive_seed(derive_seed(options.seed, "cluster"), c * 64 + attempt))
                       .first;
            rel.clear();
            for (std::size_t p = 0; p < tmpl.terms.size(); ++p) {
                if (tmpl.terms[p].kind != ShapeKind::kNone) rel.insert(p);
            }
            if (std::find(relevant_sets.begin(), relevant_sets.end(), rel) == relevant_sets.end()) break;
        }
        templates.push_back(tmpl);
        relevant_sets.push_back(rel);
    }

    std::vector<DatasetProfile> profiles;
    for (std::size_t c = 0; c < options.clusters; ++c) {
        profiles.push_back(make_profile(c, derive_seed(options.seed, "profile")));
    }

    const FullDomain domain(bench.kb.spaces.at(options.algorithm_id));
    for (std::size_t i = 0; i < options.n_datasets; ++i) {
        BenchmarkDataset d;
        d.id = dataset_id(i);
        d.cluster = i % options.clusters;

        Rng rng(derive_seed(derive_seed(options.seed, "dataset"), i));
        std::uniform_real_distribution<double> jitter(1.0 - options.weight_jitter, 1.0 + options.weight_jitter);
        d.surface = templates[d.cluster];
        for (auto& t : d.surface.terms) {
            if (t.kind != ShapeKind::kNone) t.weight *= jitter(rng);
        }
        for (auto& pt : d.surface.pairs) pt.weight *= jitter(rng);
        d.truth = finalize_surface(d.surface);

        d.data = synthesize_dataset(profiles[d.cluster], derive_seed(derive_seed(options.seed, "rows"), i));
        bench.kb.meta_registry[d.id] = extract(d.data, options.metafeature_seed);

        Rng design_rng(derive_seed(derive_seed(options.seed, "configs"), i));
        Rng noise_rng(derive_seed(derive_seed(options.seed, "noise"), i));
        const RowMatrix design = latin_hypercube(options.configs_per_dataset, domain.dims(), design_rng);
        for (std::size_t r = 0; r < options.configs_per_dataset; ++r) {
            KBRecord rec;
            rec.dataset_id = d.id;
            rec.algorithm_id = options.algorithm_id;
            rec.config = domain.to_config(row_span(design, r));
            rec.performance = d.surface.evaluate_noisy(rec.config, noise_rng);
            bench.kb.records.push_back(std::move(rec));
        }
        bench.datasets.push_back(std::move(d));
    }
    bench.kb.validate();
    return bench;
}

nlohmann::json surface_to_json(const SyntheticSurface& surface) {
    nlohmann::json terms = nlohmann::json::array();
    for (std::size_t p = 0; p < surface.terms.size(); ++p) {
        const auto& t = surface.terms[p];
        terms.push_back({{"param", surface.space[p].name},
                         {"kind", to_string(t.kind)},
                         {"weight", t.weight},
                         {"center", t.center},
                         {"width", t.width},
                         {"steepness", t.steepness},
                         {"ascending", t.ascending}});
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pt : surface.pairs) {
        pairs.push_back({{"first", surface.space[pt.first].name},
                         {"second", surface.space[pt.second].name},
                         {"weight", pt.weight}});
    }
    return {{"space", surface.space},    {"terms", terms},          {"pairs", pairs},
            {"noise_sigma", surface.noise_sigma}, {"raw_min", surface.raw_min}, {"raw_max", surface.raw_max}};
}

SyntheticSurface surface_from_json(const nlohmann::json& j) {
    try {
        SyntheticSurface s;
        s.space = j.at("space").get<HyperparameterSpace>();
        s.terms.assign(s.space.size(), ShapeTerm{});
        for (const auto& t : j.at("terms")) {
            auto& term = s.terms[param_index(s.space, t.at("param").get<std::string>())];
            term.kind = shape_kind_from_string(t.at("kind").get<std::string>());
            term.weight = t.at("weight").get<double>();
            term.center = t.at("center").get<double>();
            term.width = t.at("width").get<double>();
            term.steepness = t.at("steepness").get<double>();
            term.ascending = t.at("ascending").get<bool>();
        }
        for (const auto& pt : j.at("pairs")) {
            s.pairs.push_back({param_index(s.space, pt.at("first").get<std::string>()),
                               param_index(s.space, pt.at("second").get<std::string>()),
                               pt.at("weight").get<double>()});
        }
        s.noise_sigma = j.at("noise_sigma").get<double>();
        s.raw_min = j.at("raw_min").get<double>();
        s.raw_max = j.at("raw_max").get<double>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed surface: ") + e.what());
    }
}

nlohmann::json truth_to_json(const GroundTruth& truth, const HyperparameterSpace& space) {
    nlohmann::json variance = nlohmann::json::object();
    for (std::size_t p = 0; p < space.size(); ++p) variance[space[p].name] = truth.variance[p];
    nlohmann::json relevant = nlohmann::json::array();
    for (std::size_t p : truth.relevant) relevant.push_back(space[p].name);
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& r : truth.good_regions) {
        regions.push_back({{"param", r.param},
                           {"unit", intervals_json(r.unit)},
                           {"raw", intervals_json(r.raw)},
                           {"categories", r.categories}});
    }
    return {{"variance", variance},
            {"relevant", relevant},
            {"optimum", {{"config", config_to_json(truth.optimum)}, {"value", truth.optimum_value}}},
            {"good_regions", regions}};
}

void write_benchmark(const Benchmark& bench, const std::filesystem::path& dir) {
    save_kb(bench.kb, dir);
    std::filesystem::create_directories(dir / "datasets");
    nlohmann::json datasets = nlohmann::json::object();
    for (const auto& d : bench.datasets) {
        datasets[d.id] = {{"cluster", d.cluster},
                          {"surface", surface_to_json(d.surface)},
                          {"truth", truth_to_json(d.truth, d.surface.space)}};
        write_dataset_csv(d.data, dir / "datasets" / (d.id + ".csv"));
    }
    const nlohmann::json gt = {{"schema_version", "metashap-gt/1"},
                               {"algorithm", bench.options.algorithm_id},
                               {"seed", bench.options.seed},
                               {"datasets", datasets}};
    std::ofstream out(dir / "ground_truth.json");
    if (!out) throw Error("cannot write '" + (dir / "ground_truth.json").string() + "'");
    out << gt.dump(2) << '\n';
}

SyntheticSurface load_surface(const std::filesystem::path& ground_truth_file, const std::string& dataset_id) {
    return surface_from_json(load_entry(ground_truth_file, dataset_id).at("surface"));
}

GroundTruth load_truth(const std::filesystem::path& ground_truth_file, const std::string& dataset_id) {
    const auto entry = load_entry(ground_truth_file, dataset_id);
    const auto space = entry.at("surface").at("space").get<HyperparameterSpace>();
    const auto& j = entry.at("truth");
    GroundTruth t;
    t.variance.assign(space.size(), 0.0);
    for (std::size_t p = 0; p < space.size(); ++p) t.variance[p] = j.at("variance").at(space[p].name).get<double>();
    for (const auto& name : j.at("relevant")) t.relevant.push_back(param_index(space, name.get<std::string>()));
    t.optimum = config_from_json(j.at("optimum").at("config"));
    t.optimum_value = j.at("optimum").at("value").get<double>();
    for (const auto& r : j.at("good_regions")) {
        GoodRegion g;
        g.param = r.at("param").get<std::string>();
        g.unit = intervals_from_json(r.at("unit"));
        g.raw = intervals_from_json(r.at("raw"));
        g.categories = r.at("categories").get<std::vector<std::string>>();
        t.good_regions.push_back(std::move(g));
    }
    return t;
}

} // namespace metashap
