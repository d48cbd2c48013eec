#pragma once

// Exact enumeration-based Shapley and Owen values for small games. These are
// the ground truth the explainer and the hierarchy code are checked against.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "shapbpt/coalition.hpp"
#include "shapbpt/game.hpp"

namespace shapbpt {

using Rational = boost::rational<std::int64_t>;

// Largest player count shapley_exact will enumerate.
inline constexpr std::size_t kMaxExactPlayers = 20;
// Largest number of terms enumerate_marginals will materialize.
inline constexpr std::size_t kMaxMarginalTerms = std::size_t{1} << 16;

// A hierarchical coalition structure: a tree of player sets in which every
// node is either indivisible or split into an ordered list of at least two
// children that partition it.
class CoalitionStructure {
 public:
  using NodeId = std::size_t;

  struct Node {
    std::vector<Player> players;  // sorted
    std::vector<NodeId> children;  // empty <=> indivisible
    bool indivisible() const { return children.empty(); }
  };

  CoalitionStructure() = default;

  // Parses the set notation used for coalition structures, e.g.
  // "{{1,2},{3,4,5},{6}}". A braced group of two or more items splits into
  // those items, so a group of bare players is a team in which every subset
  // may form; a lone player is an indivisible singleton. Square brackets
  // "[3,4,5]" denote an indivisible block. With `one_based` the players in
  // the text are numbered from 1.
  static CoalitionStructure parse(std::string_view text, bool one_based = true);

  // The grand coalition {0..n-1} as a single indivisible block.
  static CoalitionStructure indivisible(std::size_t n);

  // Two-level structure whose teams are flat groups of players.
  static CoalitionStructure two_level(const std::vector<std::vector<Player>>& teams);

  NodeId add_leaf(std::vector<Player> players);
  NodeId add_internal(std::vector<NodeId> children);
  void set_root(NodeId root) { root_ = root; }

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return root_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  // Children partition their parent and every internal node has m >= 2.
  // Throws StructuralError otherwise.
  void validate() const;

  // Longest root-to-leaf edge count.
  std::size_t height() const;

 private:
  std::vector<Node> nodes_;
  NodeId root_ = 0;
};

// nu(S + {i}) - nu(S) for class `cls`.
double marginal(CharacteristicGame& game, const Coalition& s, Player i, std::size_t cls = 0);

// phi_i(Q, N) for every player: the Shapley value of the players outside Q,
// with Q present in every coalition. Entries for members of Q are zero.
std::vector<double> shapley_exact(CharacteristicGame& game, const Coalition& context,
                                  std::size_t cls = 0);

// Owen value of player i under a two-level structure, by direct double
// summation over team subsets H and in-team subsets S.
double owen_two_level(CharacteristicGame& game, const std::vector<std::vector<Player>>& teams,
                      Player i, std::size_t cls = 0);

// Owen value Omega_i(Q, T) of player i by the recursive m-ary formula over
// `hcs`. Indivisible blocks share their marginal uniformly.
double owen_hcs_recursive(CharacteristicGame& game, const CoalitionStructure& hcs,
                          const Coalition& context, Player i, std::size_t cls = 0);

// One weighted term of the Owen value decomposition of a player:
// weight * (nu(context + block) - nu(context)) / |block|.
struct MarginalTerm {
  Rational weight;
  Coalition context;
  std::vector<Player> block;
};

// The weighted-marginal decomposition of Omega_i(empty, root). Weights are
// exact and sum to one.
std::vector<MarginalTerm> enumerate_marginals(const CoalitionStructure& hcs, Player i);

// Sum of the terms on `game`.
double apply_marginals(CharacteristicGame& game, const std::vector<MarginalTerm>& terms,
                       std::size_t cls = 0);

// Number of nu evaluations needed to expand every node of a balanced binary
// hierarchy down to depth d: a(0) = 0, a(d) = 4 a(d-1) + 2.
std::uint64_t expected_eval_count(unsigned depth);

}  // namespace shapbpt
