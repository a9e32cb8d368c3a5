#pragma once

/**
 * Shapley attribution of hyperparameters over a forest surrogate.
 *
 * Players are encoded dimensions. The value of a coalition S for a target x is
 * the background-averaged prediction of the hybrid point taking x on S and the
 * background row elsewhere. Coalitions are bitmasks over players.
 */

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metashap/matrix.hpp"
#include "metashap/space.hpp"
#include "metashap/surrogate.hpp"

namespace metashap {

using Coalition = std::uint64_t;

inline constexpr std::size_t kMaxExactPlayers = 15;
inline constexpr std::size_t kMaxInteractionPlayers = 12;

struct CoalitionGame {
    const SurrogateModel* model = nullptr; // not owned
    RowMatrix background;                  // B x k
    std::vector<double> target;            // length k

    std::size_t k() const { return target.size(); }
    void validate() const;
};

// Direct evaluation: one prediction per background row.
double coalition_value(const CoalitionGame& game, Coalition S);

// All 2^k coalition values through the forest engine.
std::vector<double> coalition_table(const CoalitionGame& game);

// All 2^k coalition values by direct evaluation of coalition_value.
std::vector<double> brute_force_table(const CoalitionGame& game);

// Shapley values of the game given by a full coalition table.
std::vector<double> shapley_from_table(std::span<const double> table, std::size_t k);

// Pairwise interaction index from a full coalition table.
double interaction_from_table(std::span<const double> table, std::size_t k, std::size_t i, std::size_t j);

// Off-diagonal: pairwise indices. Diagonal: phi_i minus the off-diagonal row sum,
// so that the full matrix sums to v(full) - v(empty).
Eigen::MatrixXd interaction_matrix_from_table(std::span<const double> table, std::size_t k);

std::vector<double> shapley_exact(const CoalitionGame& game);
double interaction_exact(const CoalitionGame& game, std::size_t i, std::size_t j);

struct SampledShapley {
    std::vector<double> phi;
    std::vector<double> standard_error;
    int n_permutations = 0;
};

SampledShapley shapley_sampled(const CoalitionGame& game, int n_permutations, std::uint64_t seed);
SampledShapley shapley_sampled(const std::function<double(Coalition)>& value, std::size_t k, int n_permutations,
                               std::uint64_t seed);

/**
 * Exact coalition values for forests. Each leaf is an axis-aligned box; for a
 * target x and a background row b the hybrid point lands in the leaf iff every
 * split feature f of the leaf is satisfied by x (f in S) or by b (f not in S).
 * Leaves are therefore summarized as patterns (F, Q): F = the split features
 * whose membership in S matters, Q = those that must come from x. v(S)
 * collects the patterns with S & F == Q.
 */
class ForestCoalitionEngine {
public:
    struct Pattern {
        Coalition features = 0;  // F
        Coalition in_target = 0; // Q, subset of F
        double weight = 0.0;     // (leaf value - offset) * matching background rows, summed
    };

    ForestCoalitionEngine(const SurrogateModel& model, const RowMatrix& background);

    std::size_t k() const { return k_; }
    std::vector<Pattern> patterns(std::span<const double> x) const;

    double value(std::span<const Pattern> patterns, Coalition S) const;
    std::vector<double> table(std::span<const Pattern> patterns) const;
    std::vector<double> shapley(std::span<const Pattern> patterns) const;
    // Same values as shapley(patterns(x)) without materializing the patterns.
    std::vector<double> shapley_at(std::span<const double> x) const;
    RowMatrix shapley_rows(const RowMatrix& X) const;
    double empty_value() const { return empty_value_; } // v of the empty coalition
    SampledShapley sampled(std::span<const Pattern> patterns, int n_permutations, std::uint64_t seed) const;

private:
    struct Group {
        std::uint32_t mask = 0; // box sides satisfied, one bit per leaf dim
        std::uint32_t count = 0;
    };
    struct Leaf {
        std::vector<int> dims;
        std::vector<double> lo, hi; // box (lo, hi] per dim
        double weight = 0.0;        // leaf value - offset
        std::vector<Group> groups;  // background rows by satisfied sides
    };

    static std::uint32_t full_local(const Leaf& leaf);
    static std::uint32_t inside_mask(const Leaf& leaf, std::span<const double> x);
    static Coalition to_global(const Leaf& leaf, std::uint32_t local);
    template <class Fn>
    void visit_leaf(const Leaf& leaf, std::uint32_t inside, Fn&& fn) const;
    template <class Fn>
    void visit(std::span<const double> x, Fn&& fn) const;
    // Shapley contributions of one leaf, per leaf dim, for target sides `inside`.
    void leaf_shapley(const Leaf& leaf, std::uint32_t inside, double* local) const;

    std::size_t k_ = 0;
    std::size_t n_background_ = 0;
    double offset_ = 0.0;
    double scale_ = 1.0; // B * n_trees
    double empty_value_ = 0.0;
    std::vector<Leaf> leaves_;
    std::vector<std::vector<double>> plus_, minus_;
};

struct AttributionResult {
    std::vector<std::string> players;
    RowMatrix explained;      // n x k encoded configs
    RowMatrix per_sample_phi; // n x k
    double base_value = 0.0;
    std::vector<double> global_importance;
    std::string method = "exact";
    int n_permutations = 0;
};

struct InteractionMatrix {
    Eigen::MatrixXd values; // k x k; empty when k exceeds the interaction limit
    std::size_t sample_index = 0;
};

struct AttributionOptions {
    int n_permutations = 2000; // used when k > kMaxExactPlayers
    std::uint64_t seed = 42;
};

// Index of the explain row minimizing the summed range-scaled distance to the others.
std::size_t medoid_index(const RowMatrix& rows);

std::pair<AttributionResult, InteractionMatrix> global_attribution(const SurrogateModel& model,
                                                                   const RowMatrix& background,
                                                                   const RowMatrix& explain_set,
                                                                   const AttributionOptions& options = {});

nlohmann::json attribution_to_json(const AttributionResult& attr, const InteractionMatrix& inter,
                                   const HyperparameterSpace& space);

} // namespace metashap
