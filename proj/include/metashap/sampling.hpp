#pragma once

#include <cstdint>

#include "metashap/matrix.hpp"
#include "metashap/random.hpp"

namespace metashap {

// n points in [0,1)^d, one per stratum along every dimension.
RowMatrix latin_hypercube(std::size_t n, std::size_t d, Rng& rng);

// First n points of the Sobol sequence (Halton above 40 dimensions), with a
// Cranley-Patterson rotation drawn from `shift_seed`.
RowMatrix shifted_sobol(std::size_t n, std::size_t d, std::uint64_t shift_seed);

// First n points of the Halton sequence in [0,1)^d.
RowMatrix halton(std::size_t n, std::size_t d);

} // namespace metashap
