#include "metashap/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "metashap/error.hpp"
#include "metashap/random.hpp"

namespace metashap {

namespace {

Coalition full_mask(std::size_t k) { return k >= 64 ? ~Coalition{0} : (Coalition{1} << k) - 1; }

std::vector<double> binomial_row(std::size_t n) {
    std::vector<double> row(n + 1, 1.0);
    for (std::size_t r = 1; r < n; ++r) row[r] = row[r - 1] * static_cast<double>(n - r + 1) / static_cast<double>(r);
    return row;
}

// |S|! (k - |S| - 1)! / k! indexed by |S|.
std::vector<double> shapley_weights(std::size_t k) {
    const auto c = binomial_row(k - 1);
    std::vector<double> w(k);
    for (std::size_t s = 0; s < k; ++s) w[s] = 1.0 / (static_cast<double>(k) * c[s]);
    return w;
}

void check_table(std::span<const double> table, std::size_t k) {
    if (k == 0 || k > 30) throw ValidationError("coalition table needs 1 <= k <= 30 players");
    if (table.size() != (std::size_t{1} << k)) throw ValidationError("coalition table must have 2^k entries");
}

struct RunningMoments {
    std::vector<double> mean, m2;
    int n = 0;

    explicit RunningMoments(std::size_t k) : mean(k, 0.0), m2(k, 0.0) {}

    void add(std::span<const double> x) {
        ++n;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double delta = x[i] - mean[i];
            mean[i] += delta / n;
            m2[i] += delta * (x[i] - mean[i]);
        }
    }

    SampledShapley result() const {
        SampledShapley out;
        out.phi = mean;
        out.n_permutations = n;
        out.standard_error.resize(mean.size());
        for (std::size_t i = 0; i < mean.size(); ++i) {
            out.standard_error[i] = n > 1 ? std::sqrt(m2[i] / (n - 1) / n) : 0.0;
        }
        return out;
    }
};

void check_permutations(int n_permutations) {
    if (n_permutations < 100) throw ValidationError("shapley_sampled needs n_permutations >= 100");
}

} // namespace

void CoalitionGame::validate() const {
    if (model == nullptr) throw ValidationError("coalition game without a model");
    if (background.rows() == 0) throw ValidationError("coalition game needs a nonempty background");
    if (target.size() != model->n_features() || static_cast<std::size_t>(background.cols()) != target.size()) {
        throw ValidationError("coalition game dimensions do not match the model");
    }
}

double coalition_value(const CoalitionGame& game, Coalition S) {
    game.validate();
    const auto k = game.k();
    if ((S & ~full_mask(k)) != 0) throw ValidationError("coalition references players outside 0..k-1");
    if (S == full_mask(k)) return game.model->predict(game.target);
    std::vector<double> z(k);
    double acc = 0.0;
    for (Eigen::Index b = 0; b < game.background.rows(); ++b) {
        const auto row = row_span(game.background, b);
        for (std::size_t d = 0; d < k; ++d) z[d] = (S >> d) & 1 ? game.target[d] : row[d];
        acc += game.model->predict(z);
    }
    return acc / static_cast<double>(game.background.rows());
}

std::vector<double> brute_force_table(const CoalitionGame& game) {
    game.validate();
    if (game.k() > kMaxExactPlayers) throw ValidationError("coalition tables are limited to 15 players");
    std::vector<double> table(std::size_t{1} << game.k());
    for (Coalition S = 0; S < table.size(); ++S) table[S] = coalition_value(game, S);
    return table;
}

std::vector<double> coalition_table(const CoalitionGame& game) {
    game.validate();
    if (game.k() > kMaxExactPlayers) throw ValidationError("coalition tables are limited to 15 players");
    ForestCoalitionEngine engine(*game.model, game.background);
    return engine.table(engine.patterns(game.target));
}

std::vector<double> shapley_from_table(std::span<const double> table, std::size_t k) {
    check_table(table, k);
    const auto w = shapley_weights(k);
    std::vector<double> phi(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const Coalition bit = Coalition{1} << i;
        double acc = 0.0;
        for (Coalition S = 0; S < table.size(); ++S) {
            if (S & bit) continue;
            acc += w[static_cast<std::size_t>(std::popcount(S))] * (table[S | bit] - table[S]);
        }
        phi[i] = acc;
    }
    return phi;
}

double interaction_from_table(std::span<const double> table, std::size_t k, std::size_t i, std::size_t j) {
    check_table(table, k);
    if (i == j) throw ValidationError("interaction index needs two distinct players");
    if (i >= k || j >= k) throw ValidationError("interaction index: player out of range");
    const Coalition bi = Coalition{1} << i, bj = Coalition{1} << j;
    const auto c = binomial_row(k - 2);
    double acc = 0.0;
    for (Coalition S = 0; S < table.size(); ++S) {
        if (S & (bi | bj)) continue;
        const double weight = 1.0 / (2.0 * static_cast<double>(k - 1) * c[static_cast<std::size_t>(std::popcount(S))]);
        acc += weight * (table[S | bi | bj] - table[S | bi] - table[S | bj] + table[S]);
    }
    return acc;
}

Eigen::MatrixXd interaction_matrix_from_table(std::span<const double> table, std::size_t k) {
    const auto phi = shapley_from_table(table, k);
    const auto n = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double v = interaction_from_table(table, k, i, j);
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        m(ii, ii) = phi[i] - (m.row(ii).sum() - m(ii, ii));
    }
    return m;
}

std::vector<double> shapley_exact(const CoalitionGame& game) {
    game.validate();
    if (game.k() > kMaxExactPlayers) {
        throw ValidationError("shapley_exact supports at most 15 players; use shapley_sampled");
    }
    return shapley_from_table(coalition_table(game), game.k());
}

double interaction_exact(const CoalitionGame& game, std::size_t i, std::size_t j) {
    game.validate();
    if (i == j) throw ValidationError("interaction_exact needs two distinct players");
    if (game.k() > kMaxInteractionPlayers) throw ValidationError("interaction_exact supports at most 12 players");
    return interaction_from_table(coalition_table(game), game.k(), i, j);
}

SampledShapley shapley_sampled(const std::function<double(Coalition)>& value, std::size_t k, int n_permutations,
                               std::uint64_t seed) {
    check_permutations(n_permutations);
    if (k == 0 || k > 63) throw ValidationError("shapley_sampled needs 1 <= k <= 63 players");
    Rng rng(derive_seed(seed, "permutations"));
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> marginal(k);
    RunningMoments moments(k);
    const double empty = value(0);
    for (int p = 0; p < n_permutations; ++p) {
        std::shuffle(perm.begin(), perm.end(), rng);
        Coalition S = 0;
        double prev = empty;
        for (auto player : perm) {
            S |= Coalition{1} << player;
            const double cur = value(S);
            marginal[player] = cur - prev;
            prev = cur;
        }
        moments.add(marginal);
    }
    return moments.result();
}

SampledShapley shapley_sampled(const CoalitionGame& game, int n_permutations, std::uint64_t seed) {
    game.validate();
    check_permutations(n_permutations);
    ForestCoalitionEngine engine(*game.model, game.background);
    return engine.sampled(engine.patterns(game.target), n_permutations, seed);
}

ForestCoalitionEngine::ForestCoalitionEngine(const SurrogateModel& model, const RowMatrix& background)
    : k_(model.n_features()), n_background_(static_cast<std::size_t>(background.rows())) {
    if (k_ == 0 || k_ > 32) throw ValidationError("forest coalition engine supports 1..32 players");
    if (n_background_ == 0) throw ValidationError("coalition engine needs a nonempty background");
    if (static_cast<std::size_t>(background.cols()) != k_) {
        throw ValidationError("background dimension does not match the model");
    }
    offset_ = model.offset();
    scale_ = static_cast<double>(n_background_) * static_cast<double>(model.trees().size());

    constexpr double kInf = std::numeric_limits<double>::infinity();
    struct Frame {
        int node;
        std::vector<double> lo, hi;
        Coalition features;
    };
    double empty = 0.0;
    std::map<std::uint32_t, std::uint32_t> groups;
    for (const auto& tree : model.trees()) {
        std::vector<Frame> stack;
        stack.push_back({0, std::vector<double>(k_, -kInf), std::vector<double>(k_, kInf), 0});
        while (!stack.empty()) {
            Frame frame = std::move(stack.back());
            stack.pop_back();
            const auto& node = tree.nodes[static_cast<std::size_t>(frame.node)];
            if (node.is_leaf()) {
                Leaf leaf;
                leaf.weight = node.value - offset_;
                for (std::size_t d = 0; d < k_; ++d) {
                    if (!((frame.features >> d) & 1)) continue;
                    leaf.dims.push_back(static_cast<int>(d));
                    leaf.lo.push_back(frame.lo[d]);
                    leaf.hi.push_back(frame.hi[d]);
                }
                // Background rows grouped by the set of box sides they satisfy.
                groups.clear();
                for (std::size_t b = 0; b < n_background_; ++b) {
                    const auto mask = inside_mask(leaf, row_span(background, static_cast<Eigen::Index>(b)));
                    ++groups[mask];
                }
                const std::uint32_t all = full_local(leaf);
                for (const auto& [mask, count] : groups) {
                    leaf.groups.push_back({mask, count});
                    if (mask == all) empty += leaf.weight * count;
                }
                leaves_.push_back(std::move(leaf));
                continue;
            }
            const auto f = static_cast<std::size_t>(node.feature);
            Frame right{node.right, frame.lo, frame.hi, frame.features | (Coalition{1} << f)};
            right.lo[f] = std::max(right.lo[f], node.threshold);
            Frame left{node.left, std::move(frame.lo), std::move(frame.hi), right.features};
            left.hi[f] = std::min(left.hi[f], node.threshold);
            stack.push_back(std::move(right));
            stack.push_back(std::move(left));
        }
    }
    empty_value_ = offset_ + empty / scale_;

    // plus_[f][q]: total Shapley weight of coalitions S (i not in S) with
    // S & F == Q \ {i}, |F| = f, |Q| = q. minus_[f][q]: same with S & F == Q.
    const auto w = shapley_weights(k_);
    plus_.assign(k_ + 1, std::vector<double>(k_ + 1, 0.0));
    minus_.assign(k_ + 1, std::vector<double>(k_ + 1, 0.0));
    for (std::size_t f = 1; f <= k_; ++f) {
        const auto c = binomial_row(k_ - f);
        for (std::size_t q = 0; q <= f; ++q) {
            double plus = 0.0, minus = 0.0;
            for (std::size_t r = 0; r <= k_ - f; ++r) {
                if (q >= 1) plus += c[r] * w[q - 1 + r];
                if (q < f) minus += c[r] * w[q + r];
            }
            plus_[f][q] = plus;
            minus_[f][q] = minus;
        }
    }
}

std::uint32_t ForestCoalitionEngine::full_local(const Leaf& leaf) {
    return leaf.dims.size() >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << leaf.dims.size()) - 1;
}

std::uint32_t ForestCoalitionEngine::inside_mask(const Leaf& leaf, std::span<const double> x) {
    std::uint32_t m = 0;
    for (std::size_t a = 0; a < leaf.dims.size(); ++a) {
        const double v = x[static_cast<std::size_t>(leaf.dims[a])];
        if (leaf.lo[a] < v && v <= leaf.hi[a]) m |= std::uint32_t{1} << a;
    }
    return m;
}

Coalition ForestCoalitionEngine::to_global(const Leaf& leaf, std::uint32_t local) {
    Coalition out = 0;
    for (; local != 0; local &= local - 1) out |= Coalition{1} << leaf.dims[static_cast<std::size_t>(std::countr_zero(local))];
    return out;
}

// For a background group B and target sides X the hybrid point reaches the
// leaf iff every side is covered by X (taken from the target) or by B. Sides
// in both are free; X \ B must come from the target; B \ X must not.
template <class Fn>
void ForestCoalitionEngine::visit_leaf(const Leaf& leaf, std::uint32_t inside, Fn&& fn) const {
    const std::uint32_t all = full_local(leaf);
    for (const auto& g : leaf.groups) {
        if ((g.mask | inside) != all) continue;
        const std::uint32_t constrained = all & ~(g.mask & inside);
        fn(to_global(leaf, constrained), to_global(leaf, inside & ~g.mask), leaf.weight * g.count);
    }
}

template <class Fn>
void ForestCoalitionEngine::visit(std::span<const double> x, Fn&& fn) const {
    if (x.size() != k_) throw ValidationError("coalition engine: target dimension mismatch");
    for (const auto& leaf : leaves_) visit_leaf(leaf, inside_mask(leaf, x), fn);
}

std::vector<ForestCoalitionEngine::Pattern> ForestCoalitionEngine::patterns(std::span<const double> x) const {
    std::unordered_map<std::uint64_t, double> acc;
    visit(x, [&](Coalition f, Coalition q, double w) { acc[f | (static_cast<std::uint64_t>(q) << 32)] += w; });
    std::vector<Pattern> out;
    out.reserve(acc.size());
    for (const auto& [key, weight] : acc) {
        out.push_back({key & 0xFFFFFFFFULL, key >> 32, weight});
    }
    std::sort(out.begin(), out.end(), [](const Pattern& a, const Pattern& b) {
        return a.features < b.features || (a.features == b.features && a.in_target < b.in_target);
    });
    return out;
}

double ForestCoalitionEngine::value(std::span<const Pattern> patterns, Coalition S) const {
    double acc = 0.0;
    for (const auto& p : patterns) {
        if ((S & p.features) == p.in_target) acc += p.weight;
    }
    return offset_ + acc / scale_;
}

std::vector<double> ForestCoalitionEngine::table(std::span<const Pattern> patterns) const {
    if (k_ > kMaxExactPlayers) throw ValidationError("coalition tables are limited to 15 players");
    const Coalition full = full_mask(k_);
    std::vector<double> acc(std::size_t{1} << k_, 0.0);
    for (const auto& p : patterns) {
        const Coalition free = full & ~p.features;
        Coalition sub = free;
        while (true) {
            acc[p.in_target | sub] += p.weight;
            if (sub == 0) break;
            sub = (sub - 1) & free;
        }
    }
    for (auto& v : acc) v = offset_ + v / scale_;
    return acc;
}

std::vector<double> ForestCoalitionEngine::shapley(std::span<const Pattern> patterns) const {
    std::vector<double> phi(k_, 0.0);
    for (const auto& p : patterns) {
        const auto f = static_cast<std::size_t>(std::popcount(p.features));
        const auto q = static_cast<std::size_t>(std::popcount(p.in_target));
        const double up = p.weight * plus_[f][q];
        const double down = p.weight * minus_[f][q];
        for (Coalition m = p.features; m != 0; m &= m - 1) {
            const auto i = static_cast<std::size_t>(std::countr_zero(m));
            if ((p.in_target >> i) & 1) {
                phi[i] += up;
            } else {
                phi[i] -= down;
            }
        }
    }
    for (auto& v : phi) v /= scale_;
    return phi;
}

void ForestCoalitionEngine::leaf_shapley(const Leaf& leaf, std::uint32_t inside, double* local) const {
    const std::uint32_t all = full_local(leaf);
    std::fill(local, local + leaf.dims.size(), 0.0);
    for (const auto& g : leaf.groups) {
        if ((g.mask | inside) != all) continue;
        const std::uint32_t constrained = all & ~(g.mask & inside);
        const std::uint32_t from_target = inside & ~g.mask;
        const auto f = static_cast<std::size_t>(std::popcount(constrained));
        const auto q = static_cast<std::size_t>(std::popcount(from_target));
        const double up = g.count * plus_[f][q];
        const double down = g.count * minus_[f][q];
        for (std::uint32_t m = constrained; m != 0; m &= m - 1) {
            const auto a = static_cast<std::size_t>(std::countr_zero(m));
            local[a] += ((from_target >> a) & 1) ? up : -down;
        }
    }
    for (std::size_t a = 0; a < leaf.dims.size(); ++a) local[a] *= leaf.weight;
}

std::vector<double> ForestCoalitionEngine::shapley_at(std::span<const double> x) const {
    if (x.size() != k_) throw ValidationError("coalition engine: target dimension mismatch");
    std::vector<double> phi(k_, 0.0);
    double local[32];
    for (const auto& leaf : leaves_) {
        leaf_shapley(leaf, inside_mask(leaf, x), local);
        for (std::size_t a = 0; a < leaf.dims.size(); ++a) phi[static_cast<std::size_t>(leaf.dims[a])] += local[a];
    }
    for (auto& v : phi) v /= scale_;
    return phi;
}

RowMatrix ForestCoalitionEngine::shapley_rows(const RowMatrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != k_) throw ValidationError("coalition engine: target dimension mismatch");
    RowMatrix out(X.rows(), static_cast<Eigen::Index>(k_));
    for (Eigen::Index s = 0; s < X.rows(); ++s) {
        const auto phi = shapley_at(row_span(X, s));
        std::copy(phi.begin(), phi.end(), row_span(out, s).begin());
    }
    return out;
}

SampledShapley ForestCoalitionEngine::sampled(std::span<const Pattern> patterns, int n_permutations,
                                              std::uint64_t seed) const {
    check_permutations(n_permutations);
    Rng rng(derive_seed(seed, "permutations"));
    std::vector<std::size_t> perm(k_), pos(k_);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> marginal(k_);
    RunningMoments moments(k_);
    const auto k = static_cast<std::ptrdiff_t>(k_);
    for (int p = 0; p < n_permutations; ++p) {
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t t = 0; t < k_; ++t) pos[perm[t]] = t;
        std::fill(marginal.begin(), marginal.end(), 0.0);
        for (const auto& pat : patterns) {
            // The pattern is active for prefixes that contain Q and none of F \ Q.
            std::ptrdiff_t last_q = -1, first_out = k;
            for (Coalition m = pat.features; m != 0; m &= m - 1) {
                const auto i = static_cast<std::size_t>(std::countr_zero(m));
                const auto t = static_cast<std::ptrdiff_t>(pos[i]);
                if ((pat.in_target >> i) & 1) {
                    last_q = std::max(last_q, t);
                } else {
                    first_out = std::min(first_out, t);
                }
            }
            if (last_q >= first_out) continue;
            if (last_q >= 0) marginal[perm[static_cast<std::size_t>(last_q)]] += pat.weight;
            if (first_out < k) marginal[perm[static_cast<std::size_t>(first_out)]] -= pat.weight;
        }
        for (auto& v : marginal) v /= scale_;
        moments.add(marginal);
    }
    return moments.result();
}

std::size_t medoid_index(const RowMatrix& rows) {
    if (rows.rows() == 0) throw ValidationError("medoid of an empty set");
    const auto n = rows.rows();
    RowMatrix scaled = rows;
    for (Eigen::Index d = 0; d < rows.cols(); ++d) {
        const double lo = rows.col(d).minCoeff();
        const double range = rows.col(d).maxCoeff() - lo;
        if (range > 0.0) {
            scaled.col(d) = (rows.col(d).array() - lo) / range;
        } else {
            scaled.col(d).setZero();
        }
    }
    std::size_t best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) total += (scaled.row(i) - scaled.row(j)).norm();
        if (total < best_total) {
            best_total = total;
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

std::pair<AttributionResult, InteractionMatrix> global_attribution(const SurrogateModel& model,
                                                                   const RowMatrix& background,
                                                                   const RowMatrix& explain_set,
                                                                   const AttributionOptions& options) {
    const auto k = model.n_features();
    if (explain_set.rows() == 0) throw ValidationError("explain set is empty");
    if (static_cast<std::size_t>(explain_set.cols()) != k) {
        throw ValidationError("explain set dimension does not match the model");
    }
    ForestCoalitionEngine engine(model, background);
    const bool exact = k <= kMaxExactPlayers;
    if (!exact) check_permutations(options.n_permutations);

    AttributionResult attr;
    attr.explained = explain_set;
    attr.per_sample_phi.resize(explain_set.rows(), static_cast<Eigen::Index>(k));
    attr.method = exact ? "exact" : "sampled";
    attr.n_permutations = exact ? 0 : options.n_permutations;
    for (std::size_t d = 0; d < k; ++d) attr.players.push_back("x" + std::to_string(d));

    for (Eigen::Index s = 0; s < explain_set.rows(); ++s) {
        if (exact) break;
        const auto phi = engine.sampled(engine.patterns(row_span(explain_set, s)), options.n_permutations,
                                        derive_seed(options.seed, static_cast<std::uint64_t>(s)))
                             .phi;
        std::copy(phi.begin(), phi.end(), row_span(attr.per_sample_phi, s).begin());
    }
    if (exact) attr.per_sample_phi = engine.shapley_rows(explain_set);
    attr.base_value = engine.empty_value();
    attr.global_importance.resize(k);
    for (std::size_t d = 0; d < k; ++d) {
        attr.global_importance[d] = attr.per_sample_phi.col(static_cast<Eigen::Index>(d)).cwiseAbs().mean();
    }

    InteractionMatrix inter;
    if (k <= kMaxInteractionPlayers) {
        inter.sample_index = medoid_index(explain_set);
        const auto table =
            engine.table(engine.patterns(row_span(explain_set, static_cast<Eigen::Index>(inter.sample_index))));
        inter.values = interaction_matrix_from_table(table, k);
    }
    return {std::move(attr), std::move(inter)};
}

nlohmann::json attribution_to_json(const AttributionResult& attr, const InteractionMatrix& inter,
                                   const HyperparameterSpace& space) {
    if (space.size() != static_cast<std::size_t>(attr.per_sample_phi.cols())) {
        throw ValidationError("attribution does not match the space");
    }
    nlohmann::json per_sample = nlohmann::json::array();
    for (Eigen::Index s = 0; s < attr.per_sample_phi.rows(); ++s) {
        const auto config = row_span(attr.explained, s);
        nlohmann::json values = nlohmann::json::array();
        for (std::size_t d = 0; d < space.size(); ++d) values.push_back(decode_value(space[d], config[d]));
        const auto phi = row_span(attr.per_sample_phi, s);
        per_sample.push_back({{"config_values", values}, {"phi", std::vector<double>(phi.begin(), phi.end())}});
    }
    nlohmann::json interactions = nlohmann::json::array();
    for (Eigen::Index i = 0; i < inter.values.rows(); ++i) {
        std::vector<double> row(inter.values.cols());
        for (Eigen::Index j = 0; j < inter.values.cols(); ++j) row[static_cast<std::size_t>(j)] = inter.values(i, j);
        interactions.push_back(row);
    }
    return {{"base_value", attr.base_value},
            {"players", space.names()},
            {"global_importance", attr.global_importance},
            {"method", attr.method},
            {"n_permutations", attr.n_permutations},
            {"per_sample", std::move(per_sample)},
            {"interactions", std::move(interactions)},
            {"interaction_sample", inter.sample_index}};
}

} // namespace metashap
