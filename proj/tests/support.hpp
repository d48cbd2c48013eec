#pragma once

// Generators and independent reference computations shared by the tests.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "shapbpt/coalition.hpp"
#include "shapbpt/game.hpp"
#include "shapbpt/hierarchy.hpp"
#include "shapbpt/image.hpp"

namespace shapbpt::support {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi);  // inclusive

// Worths i.i.d. uniform in [-1, 1] on all 2^n coalitions.
RecordedGame random_game(std::size_t n, Rng& rng, std::size_t classes = 1);

// nu(S) = sum of v_i over S.
FunctionGame additive_game(std::vector<double> v);

// Binary tree over n singleton leaves built by merging two random current
// roots n - 1 times; no spatial meaning.
PartitionTree random_binary_tree(std::size_t n, Rng& rng);

// Image whose channel values come from `levels` distinct intensities, which
// makes equal merge distances common.
RasterImage random_image(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
                         Rng& rng, int levels = 256);

// Binary Owen recursion evaluated directly on the tree, one player at a time:
//   Omega_i(Q, T) = (Omega_i(Q, T1) + Omega_i(Q + T2, T1)) / 2  for i in T1
// and nu(Q + T) - nu(Q) at single-pixel leaves.
double binary_owen(CharacteristicGame& game, const PartitionTree& tree, std::uint32_t player,
                   std::size_t cls = 0);

// Classical Shapley value by averaging marginals over all n! orderings.
std::vector<double> shapley_by_permutations(CharacteristicGame& game, std::size_t cls = 0);

// Complete binary tree of the given depth over 2^depth singleton leaves.
PartitionTree balanced_tree(unsigned depth);

}  // namespace shapbpt::support
