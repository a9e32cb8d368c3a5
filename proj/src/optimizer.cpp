#include "metashap/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "metashap/error.hpp"
#include "metashap/random.hpp"
#include "metashap/sampling.hpp"

namespace metashap {

namespace {

constexpr int kResampleAttempts = 200;

std::size_t cell(double u, std::size_t n) {
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(u * static_cast<double>(n))));
    return std::min(idx, n - 1);
}

double cell_center(std::size_t idx, std::size_t n) {
    return (static_cast<double>(idx) + 0.5) / static_cast<double>(n);
}

std::size_t integer_levels(const ParamSpec& spec) { return static_cast<std::size_t>(spec.hi - spec.lo) + 1; }

std::size_t nearest_level(const std::vector<double>& levels, double v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (std::abs(levels[i] - v) < std::abs(levels[best] - v)) best = i;
    }
    return best;
}

} // namespace

FullDomain::FullDomain(HyperparameterSpace space) : space_(std::move(space)) {}

Config FullDomain::to_config(std::span<const double> u) const {
    if (u.size() != space_.size()) throw ValidationError("unit point has the wrong dimension");
    Config config;
    for (std::size_t i = 0; i < space_.size(); ++i) {
        const auto& spec = space_[i];
        switch (spec.kind) {
        case ParamKind::kContinuous: {
            const double lo = spec.encoded_lo();
            config[spec.name] = decode_value(spec, lo + u[i] * (spec.encoded_hi() - lo));
            break;
        }
        case ParamKind::kInteger:
            config[spec.name] = spec.lo + static_cast<double>(cell(u[i], integer_levels(spec)));
            break;
        case ParamKind::kCategorical:
            config[spec.name] = spec.categories[cell(u[i], spec.categories.size())];
            break;
        }
    }
    return config;
}

std::vector<double> FullDomain::to_unit(const Config& config) const {
    const auto encoded = encode(config, space_);
    std::vector<double> u(space_.size());
    for (std::size_t i = 0; i < space_.size(); ++i) {
        const auto& spec = space_[i];
        switch (spec.kind) {
        case ParamKind::kContinuous: {
            const double lo = spec.encoded_lo();
            u[i] = std::clamp((encoded[i] - lo) / (spec.encoded_hi() - lo), 0.0, 1.0);
            break;
        }
        case ParamKind::kInteger:
            u[i] = cell_center(static_cast<std::size_t>(encoded[i] - spec.lo), integer_levels(spec));
            break;
        case ParamKind::kCategorical:
            u[i] = cell_center(static_cast<std::size_t>(encoded[i]), spec.categories.size());
            break;
        }
    }
    return u;
}

RestrictedDomain::RestrictedDomain(HyperparameterSpace space, const TuningReport& report) : space_(std::move(space)) {
    if (report.selected.empty()) throw ValidationError("tuning report selects no parameters");
    for (const auto& name : report.selected) {
        if (!space_.index_of(name)) throw ValidationError("report selects unknown parameter '" + name + "'");
    }
    for (std::size_t p = 0; p < space_.size(); ++p) {
        const auto& spec = space_[p];
        const bool selected = std::find(report.selected.begin(), report.selected.end(), spec.name) !=
                              report.selected.end();
        if (!selected) {
            auto it = report.fixed.find(spec.name);
            const RawValue value = it != report.fixed.end() ? it->second : spec.default_value;
            spec.check_value(value);
            pinned_[spec.name] = value;
            continue;
        }
        Axis axis;
        axis.param = p;
        const TuningRange* range = report.range_for(spec.name);
        switch (spec.kind) {
        case ParamKind::kContinuous:
            if (range != nullptr) {
                for (const auto& iv : range->intervals) {
                    const double lo = std::clamp(iv.lo, spec.lo, spec.hi);
                    const double hi = std::clamp(iv.hi, spec.lo, spec.hi);
                    if (!(lo < hi)) continue;
                    const Interval enc{spec.log_scale ? std::log10(lo) : lo, spec.log_scale ? std::log10(hi) : hi};
                    if (!(enc.lo < enc.hi)) continue;
                    axis.encoded.push_back(enc);
                    axis.raw.push_back({lo, hi});
                    axis.total_width += enc.hi - enc.lo;
                }
            }
            if (axis.encoded.empty()) {
                axis.encoded = {{spec.encoded_lo(), spec.encoded_hi()}};
                axis.raw = {{spec.lo, spec.hi}};
                axis.total_width = spec.encoded_hi() - spec.encoded_lo();
                warnings_.push_back("no usable interval for '" + spec.name + "'; searching full bounds");
            }
            break;
        case ParamKind::kInteger:
            if (range != nullptr) {
                std::set<double> values;
                for (const auto& iv : range->intervals) {
                    for (double v = std::max(spec.lo, std::ceil(iv.lo)); v <= std::min(spec.hi, std::floor(iv.hi)); v += 1.0) {
                        values.insert(v);
                    }
                }
                axis.levels.assign(values.begin(), values.end());
            }
            if (axis.levels.empty()) {
                for (double v = spec.lo; v <= spec.hi; v += 1.0) axis.levels.push_back(v);
                warnings_.push_back("no integer inside the intervals of '" + spec.name + "'; searching full bounds");
            }
            break;
        case ParamKind::kCategorical:
            if (range != nullptr) {
                for (std::size_t c = 0; c < spec.categories.size(); ++c) {
                    if (std::find(range->categories.begin(), range->categories.end(), spec.categories[c]) !=
                        range->categories.end()) {
                        axis.levels.push_back(static_cast<double>(c));
                    }
                }
            }
            if (axis.levels.empty()) {
                for (std::size_t c = 0; c < spec.categories.size(); ++c) axis.levels.push_back(static_cast<double>(c));
                warnings_.push_back("no category selected for '" + spec.name + "'; searching all categories");
            }
            break;
        }
        axes_.push_back(std::move(axis));
    }
}

Config RestrictedDomain::to_config(std::span<const double> u) const {
    if (u.size() != axes_.size()) throw ValidationError("unit point has the wrong dimension");
    Config config = pinned_;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        const auto& axis = axes_[a];
        const auto& spec = space_[axis.param];
        if (spec.kind == ParamKind::kContinuous) {
            const double t = u[a] * axis.total_width;
            double cum = 0.0;
            std::size_t i = 0;
            while (i + 1 < axis.encoded.size() && t > cum + (axis.encoded[i].hi - axis.encoded[i].lo)) {
                cum += axis.encoded[i].hi - axis.encoded[i].lo;
                ++i;
            }
            const auto& iv = axis.encoded[i];
            const double enc = std::clamp(iv.lo + (t - cum), iv.lo, iv.hi);
            const double raw = std::get<double>(decode_value(spec, enc));
            config[spec.name] = std::clamp(raw, axis.raw[i].lo, axis.raw[i].hi);
        } else {
            const double level = axis.levels[cell(u[a], axis.levels.size())];
            config[spec.name] = decode_value(spec, level);
        }
    }
    return config;
}

std::vector<double> RestrictedDomain::to_unit(const Config& config) const {
    std::vector<double> u(axes_.size());
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        const auto& axis = axes_[a];
        const auto& spec = space_[axis.param];
        auto it = config.find(spec.name);
        if (it == config.end()) throw ValidationError("config is missing parameter '" + spec.name + "'");
        const double v = encode_value(spec, it->second);
        if (spec.kind == ParamKind::kContinuous) {
            // Project onto the nearest interval, then onto the latent axis.
            std::size_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < axis.encoded.size(); ++i) {
                const auto& iv = axis.encoded[i];
                const double dist = v < iv.lo ? iv.lo - v : (v > iv.hi ? v - iv.hi : 0.0);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = i;
                }
            }
            double cum = 0.0;
            for (std::size_t i = 0; i < best; ++i) cum += axis.encoded[i].hi - axis.encoded[i].lo;
            const double clamped = std::clamp(v, axis.encoded[best].lo, axis.encoded[best].hi);
            u[a] = std::clamp((cum + clamped - axis.encoded[best].lo) / axis.total_width, 0.0, 1.0);
        } else {
            u[a] = cell_center(nearest_level(axis.levels, v), axis.levels.size());
        }
    }
    return u;
}

BOTrace bo_run(Objective& objective, const SearchDomain& domain, const BOOptions& options,
               const std::optional<Config>& warm_start) {
    if (options.budget < 1) throw ValidationError("budget must be >= 1");
    if (options.init < 2) throw ValidationError("init must be >= 2");
    if (options.n_candidates < 1 || options.n_local < 0) throw ValidationError("invalid candidate counts");
    const std::size_t d = domain.dims();
    const auto budget = static_cast<std::size_t>(options.budget);

    BOTrace trace;
    trace.mode = options.mode;
    trace.budget = options.budget;
    std::set<Config> seen;
    RowMatrix U(0, static_cast<Eigen::Index>(d));
    std::vector<Eigen::VectorXd> unit_points;
    std::vector<double> ys;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t incumbent = 0;

    auto evaluate = [&](const Config& config) {
        const double y = objective(config);
        if (y > best) {
            best = y;
            incumbent = ys.size();
        }
        trace.iterations.push_back({config, y, best});
        seen.insert(config);
        const auto u = domain.to_unit(config);
        unit_points.push_back(Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size())));
        ys.push_back(y);
    };

    Rng rng(derive_seed(options.seed, "bo"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto random_unseen = [&]() -> std::optional<Config> {
        std::vector<double> u(d);
        for (int attempt = 0; attempt < kResampleAttempts; ++attempt) {
            for (auto& v : u) v = unif(rng);
            auto config = domain.to_config(u);
            if (!seen.contains(config)) return config;
        }
        return std::nullopt;
    };

    if (warm_start) evaluate(domain.to_config(domain.to_unit(*warm_start)));

    const std::size_t n_design = std::min(static_cast<std::size_t>(options.init), budget - std::min(budget, trace.iterations.size()));
    const RowMatrix design = latin_hypercube(n_design, d, rng);
    for (std::size_t i = 0; i < n_design; ++i) {
        auto config = domain.to_config(row_span(design, static_cast<Eigen::Index>(i)));
        if (seen.contains(config)) {
            auto fresh = random_unseen();
            if (!fresh) {
                trace.warnings.push_back("search domain exhausted during the initial design");
                return trace;
            }
            config = std::move(*fresh);
        }
        evaluate(config);
    }

    std::size_t step = 0;
    while (trace.iterations.size() < budget) {
        ++step;
        RowMatrix X(static_cast<Eigen::Index>(unit_points.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < unit_points.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = unit_points[i];
        const auto gp = gp_fit(X, ys, derive_seed(options.seed, step));

        const RowMatrix sobol = shifted_sobol(static_cast<std::size_t>(options.n_candidates), d,
                                              derive_seed(options.seed, stream_id("sobol-shift") + step));
        RowMatrix candidates(sobol.rows() + options.n_local, static_cast<Eigen::Index>(d));
        candidates.topRows(sobol.rows()) = sobol;
        std::normal_distribution<double> jitter(0.0, options.local_sigma);
        const Eigen::VectorXd& center = unit_points[incumbent];
        for (int l = 0; l < options.n_local; ++l) {
            for (std::size_t j = 0; j < d; ++j) {
                const double v = center(static_cast<Eigen::Index>(j)) + jitter(rng);
                candidates(sobol.rows() + l, static_cast<Eigen::Index>(j)) =
                    std::clamp(v, 0.0, std::nextafter(1.0, 0.0));
            }
        }

        std::vector<double> ei(static_cast<std::size_t>(candidates.rows()));
        for (Eigen::Index c = 0; c < candidates.rows(); ++c) {
            ei[static_cast<std::size_t>(c)] = expected_improvement(gp, row_span(candidates, c), best);
        }
        std::vector<std::size_t> order(ei.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });

        std::optional<Config> next;
        for (auto c : order) {
            auto config = domain.to_config(row_span(candidates, static_cast<Eigen::Index>(c)));
            if (!seen.contains(config)) {
                next = std::move(config);
                break;
            }
        }
        if (!next) next = random_unseen();
        if (!next) {
            trace.warnings.push_back("search domain exhausted after " + std::to_string(trace.iterations.size()) +
                                     " evaluations");
            break;
        }
        evaluate(*next);
    }
    return trace;
}

BOTrace bo_run(Objective& objective, const HyperparameterSpace& space, int budget, int init, std::uint64_t seed) {
    BOOptions options;
    options.budget = budget;
    options.init = init;
    options.seed = seed;
    return bo_run(objective, FullDomain(space), options);
}

BOTrace guided_bo_run(Objective& objective, const HyperparameterSpace& space, const TuningReport& report, int budget,
                      std::uint64_t seed, int init) {
    const RestrictedDomain domain(space, report);
    BOOptions options;
    options.budget = budget;
    options.init = init;
    options.seed = seed;
    options.mode = "guided";
    auto trace = bo_run(objective, domain, options, report.warm_start);
    trace.warnings.insert(trace.warnings.begin(), domain.warnings().begin(), domain.warnings().end());
    return trace;
}

int iterations_to_within(const BOTrace& trace, double optimum, double epsilon) {
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        if (trace.iterations[i].best_so_far >= optimum - epsilon) return static_cast<int>(i) + 1;
    }
    return trace.budget + 1;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty list");
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double speedup_ratio(std::span<const int> vanilla, std::span<const int> guided) {
    const double v = median(std::vector<double>(vanilla.begin(), vanilla.end()));
    const double g = median(std::vector<double>(guided.begin(), guided.end()));
    if (v == g) return 1.0;
    return v / g;
}

} // namespace metashap
