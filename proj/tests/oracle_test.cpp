#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "shapbpt/errors.hpp"
#include "shapbpt/explainer.hpp"
#include "shapbpt/oracle.hpp"
#include "support.hpp"

using namespace shapbpt;
using support::Rng;

namespace {

FunctionGame dictator(std::size_t n, Player d = 0) {
  return FunctionGame::scalar(n, [d](const Coalition& c) { return c.test(d) ? 1.0 : 0.0; });
}

FunctionGame majority3() {
  return FunctionGame::scalar(3, [](const Coalition& c) { return c.count() >= 2 ? 1.0 : 0.0; });
}

// (weight, 0-based context members) for every term of a decomposition.
std::multiset<std::pair<Rational, std::vector<Player>>> term_set(
    const std::vector<MarginalTerm>& terms) {
  std::multiset<std::pair<Rational, std::vector<Player>>> out;
  for (const auto& t : terms) out.emplace(t.weight, members_of(t.context));
  return out;
}

std::vector<Player> zero_based(std::initializer_list<Player> one_based) {
  std::vector<Player> v;
  for (auto p : one_based) v.push_back(p - 1);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// marginal

TEST(Marginal, DictatorAddsOne) {
  auto g = dictator(4);
  EXPECT_EQ(marginal(g, Coalition(4), 0), 1.0);
}

TEST(Marginal, NonDictatorAddsNothing) {
  auto g = dictator(4);
  EXPECT_EQ(marginal(g, make_coalition(4, {1, 2}), 3), 0.0);
}

TEST(Marginal, AdditiveGameAddsOwnValue) {
  auto g = support::additive_game({0.1, 0.2, 0.3});
  EXPECT_DOUBLE_EQ(marginal(g, make_coalition(3, {0}), 2), 0.3);
}

TEST(Marginal, PlayerAlreadyPresentIsRejected) {
  auto g = dictator(3);
  EXPECT_THROW(marginal(g, make_coalition(3, {1}), 1), PreconditionError);
}

// ---------------------------------------------------------------------------
// shapley_exact

TEST(ShapleyExact, AdditiveGameReturnsItsValues) {
  auto g = support::additive_game({0.1, 0.2, 0.3});
  auto phi = shapley_exact(g, Coalition(3));
  EXPECT_NEAR(phi[0], 0.1, 1e-15);
  EXPECT_NEAR(phi[1], 0.2, 1e-15);
  EXPECT_NEAR(phi[2], 0.3, 1e-15);
}

TEST(ShapleyExact, MajorityGameMatchesPermutationAverage) {
  auto g = majority3();
  auto phi = shapley_exact(g, Coalition(3));
  auto ref = support::shapley_by_permutations(g);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(ref[i], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(phi[i], ref[i], 1e-15);
  }
}

TEST(ShapleyExact, DictatorTakesEverything) {
  auto g = dictator(5);
  auto phi = shapley_exact(g, Coalition(5));
  EXPECT_EQ(phi, (std::vector<double>{1, 0, 0, 0, 0}));
}

TEST(ShapleyExact, ContextMembersGetZero) {
  Rng rng(3);
  auto g = support::random_game(5, rng);
  auto q = make_coalition(5, {1, 3});
  auto phi = shapley_exact(g, q);
  EXPECT_EQ(phi[1], 0.0);
  EXPECT_EQ(phi[3], 0.0);
  Coalition full(5);
  full.set();
  const double total = phi[0] + phi[2] + phi[4];
  EXPECT_NEAR(total, worth_of(g, full) - worth_of(g, q), 1e-12);
}

TEST(ShapleyExact, CapacityGuardNamesLimit) {
  auto g = FunctionGame::scalar(21, [](const Coalition&) { return 0.0; });
  try {
    shapley_exact(g, Coalition(21));
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("20"), std::string::npos);
  }
}

TEST(ShapleyExact, EfficiencyOnRandomGames) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = support::pick(rng, 1, 10);
    auto g = support::random_game(n, rng);
    auto phi = shapley_exact(g, Coalition(n));
    Coalition full(n);
    full.set();
    const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
    EXPECT_NEAR(sum, g.at((1u << n) - 1)[0] - g.at(0)[0], 1e-9);
  }
}

TEST(ShapleyExact, MatchesPermutationOracleOnRandomGames) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = support::pick(rng, 2, 6);
    auto g = support::random_game(n, rng);
    auto phi = shapley_exact(g, Coalition(n));
    auto ref = support::shapley_by_permutations(g);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(phi[i], ref[i], 1e-12);
  }
}

// ---------------------------------------------------------------------------
// CoalitionStructure

TEST(CoalitionStructure, ParsesTeamsAsSplitNodes) {
  auto hcs = CoalitionStructure::parse("{{1,2},{3,4,5},{6}}");
  hcs.validate();
  const auto& root = hcs.node(hcs.root());
  ASSERT_EQ(root.children.size(), 3u);
  EXPECT_EQ(root.players, (std::vector<Player>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(hcs.node(root.children[1]).children.size(), 3u);
  EXPECT_TRUE(hcs.node(root.children[2]).indivisible());
  EXPECT_EQ(hcs.height(), 2u);
}

TEST(CoalitionStructure, SquareBracketsMakeABlock) {
  auto hcs = CoalitionStructure::parse("{[1,2],3}");
  const auto& root = hcs.node(hcs.root());
  ASSERT_EQ(root.children.size(), 2u);
  EXPECT_TRUE(hcs.node(root.children[0]).indivisible());
  EXPECT_EQ(hcs.node(root.children[0]).players, (std::vector<Player>{0, 1}));
}

TEST(CoalitionStructure, RejectsOverlapAndMalformedText) {
  EXPECT_THROW(CoalitionStructure::parse("{{1,2},{2,3}}"), StructuralError);
  EXPECT_THROW(CoalitionStructure::parse("{{1,2},{3}"), StructuralError);
  EXPECT_THROW(CoalitionStructure::parse("{0,1}"), StructuralError);
  EXPECT_THROW(CoalitionStructure::parse(""), StructuralError);
}

TEST(CoalitionStructure, BuilderRejectsOverlappingChildren) {
  CoalitionStructure hcs;
  auto a = hcs.add_leaf({0, 1});
  auto b = hcs.add_leaf({1, 2});
  EXPECT_THROW(hcs.add_internal({a, b}), StructuralError);
}

TEST(CoalitionStructure, ValidateCatchesDanglingRoot) {
  CoalitionStructure hcs;
  hcs.add_leaf({0});
  hcs.set_root(4);
  EXPECT_THROW(hcs.validate(), StructuralError);
  EXPECT_THROW(CoalitionStructure{}.validate(), StructuralError);
}

// ---------------------------------------------------------------------------
// enumerate_marginals: the two worked decompositions

TEST(EnumerateMarginals, ThreeTeamExampleHasEightListedTerms) {
  auto hcs = CoalitionStructure::parse("{{1,2},{3,4,5},{6}}");
  auto terms = enumerate_marginals(hcs, 0);
  ASSERT_EQ(terms.size(), 8u);
  const Rational sixth(1, 6), twelfth(1, 12);
  std::multiset<std::pair<Rational, std::vector<Player>>> expected{
      {sixth, zero_based({})},
      {sixth, zero_based({2})},
      {sixth, zero_based({3, 4, 5, 6})},
      {sixth, zero_based({3, 4, 5, 6, 2})},
      {twelfth, zero_based({6})},
      {twelfth, zero_based({6, 2})},
      {twelfth, zero_based({3, 4, 5})},
      {twelfth, zero_based({3, 4, 5, 2})},
  };
  EXPECT_EQ(term_set(terms), expected);
  for (const auto& t : terms) EXPECT_EQ(t.block, (std::vector<Player>{0}));
}

TEST(EnumerateMarginals, ThreeLevelExampleHasEightEighths) {
  auto hcs = CoalitionStructure::parse("{{{1,2},{3,4}},{{5,6},{7},{8}}}");
  auto terms = enumerate_marginals(hcs, 0);
  ASSERT_EQ(terms.size(), 8u);
  const Rational eighth(1, 8);
  std::multiset<std::pair<Rational, std::vector<Player>>> expected{
      {eighth, zero_based({})},
      {eighth, zero_based({2})},
      {eighth, zero_based({5, 6, 7, 8})},
      {eighth, zero_based({5, 6, 7, 8, 2})},
      {eighth, zero_based({3, 4})},
      {eighth, zero_based({3, 4, 2})},
      {eighth, zero_based({5, 6, 7, 8, 3, 4})},
      {eighth, zero_based({5, 6, 7, 8, 3, 4, 2})},
  };
  EXPECT_EQ(term_set(terms), expected);
}

TEST(EnumerateMarginals, SingletonStructureIsOneEmptyTerm) {
  auto hcs = CoalitionStructure::parse("{1}");
  auto terms = enumerate_marginals(hcs, 0);
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0].weight, Rational(1));
  EXPECT_TRUE(terms[0].context.none());
}

TEST(EnumerateMarginals, WeightsCloseExactlyOnRandomStructures) {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = support::pick(rng, 1, 10);
    auto tree = support::random_binary_tree(n, rng);
    auto hcs = to_coalition_structure(tree);
    for (Player i = 0; i < n; ++i) {
      Rational sum(0);
      for (const auto& t : enumerate_marginals(hcs, i)) sum += t.weight;
      EXPECT_EQ(sum, Rational(1));
    }
  }
}

TEST(EnumerateMarginals, WeightsCloseOnMaryStructures) {
  for (const char* text : {"{{1,2},{3,4,5},{6}}", "{{{1,2},{3,4}},{{5,6},{7},{8}}}",
                           "{1,2,3,4,5}", "{[1,2,3],{4,5},6,[7,8]}"}) {
    auto hcs = CoalitionStructure::parse(text);
    for (Player i = 0; i < hcs.node(hcs.root()).players.size(); ++i) {
      Rational sum(0);
      for (const auto& t : enumerate_marginals(hcs, i)) sum += t.weight;
      EXPECT_EQ(sum, Rational(1)) << text << " player " << i;
    }
  }
}

TEST(EnumerateMarginals, CapacityGuard) {
  // A flat team of 18 players has 2^17 subsets of the others.
  std::string text = "{";
  for (int p = 1; p <= 18; ++p) text += std::to_string(p) + (p < 18 ? "," : "}");
  auto hcs = CoalitionStructure::parse(text);
  EXPECT_THROW(enumerate_marginals(hcs, 0), CapacityError);
}

// ---------------------------------------------------------------------------
// owen_two_level and owen_hcs_recursive

TEST(OwenTwoLevel, DictatorGetsOne) {
  auto g = dictator(6);
  std::vector<std::vector<Player>> teams{{0, 1}, {2, 3, 4}, {5}};
  EXPECT_DOUBLE_EQ(owen_two_level(g, teams, 0), 1.0);
}

TEST(OwenTwoLevel, AdditiveCollapse) {
  auto g = support::additive_game({0.5, -0.25, 1.0, 0.125, 2.0, -1.5});
  std::vector<std::vector<Player>> teams{{0, 1}, {2, 3, 4}, {5}};
  auto hcs = CoalitionStructure::two_level(teams);
  for (Player i = 0; i < 6; ++i) {
    const double v = worth_of(g, make_coalition(6, {i}));
    EXPECT_DOUBLE_EQ(owen_two_level(g, teams, i), v);
    EXPECT_DOUBLE_EQ(owen_hcs_recursive(g, hcs, Coalition(6), i), v);
    EXPECT_DOUBLE_EQ(shapley_exact(g, Coalition(6))[i], v);
  }
}

TEST(OwenTwoLevel, RecordedGameMatchesListedTerms) {
  auto g = RecordedGame::load(SHAPBPT_FIXTURE_DIR "/recorded_game6.txt");
  std::vector<std::vector<Player>> teams{{0, 1}, {2, 3, 4}, {5}};
  // Weighted sum of the eight listed marginals, evaluated in exact decimal
  // arithmetic outside this code base.
  const double listed = -0.10166666666666661;
  EXPECT_NEAR(owen_two_level(g, teams, 0), listed, 1e-15);
  auto hcs = CoalitionStructure::parse("{{1,2},{3,4,5},{6}}");
  EXPECT_NEAR(apply_marginals(g, enumerate_marginals(hcs, 0)), listed, 1e-15);
  EXPECT_NEAR(owen_hcs_recursive(g, hcs, Coalition(6), 0), listed, 1e-15);
}

TEST(OwenTwoLevel, RejectsNonPartition) {
  auto g = dictator(4);
  EXPECT_THROW(owen_two_level(g, {{0, 1}, {1, 2, 3}}, 0), StructuralError);
  EXPECT_THROW(owen_two_level(g, {{0, 1}, {2}}, 0), StructuralError);
}

TEST(OwenTwoLevel, EqualsRecursionOnRandomTwoLevelStructures) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = support::pick(rng, 2, 9);
    auto g = support::random_game(n, rng);
    std::vector<Player> players(n);
    std::iota(players.begin(), players.end(), 0u);
    std::shuffle(players.begin(), players.end(), rng);
    std::vector<std::vector<Player>> teams;
    for (std::size_t k = 0; k < n;) {
      const std::size_t len = support::pick(rng, 1, n - k);
      teams.emplace_back(players.begin() + k, players.begin() + k + len);
      k += len;
    }
    if (teams.size() == 1) continue;
    auto hcs = CoalitionStructure::two_level(teams);
    for (Player i = 0; i < n; ++i) {
      EXPECT_NEAR(owen_two_level(g, teams, i), owen_hcs_recursive(g, hcs, Coalition(n), i),
                  1e-12);
    }
  }
}

TEST(OwenHcsRecursive, ThreeLevelEqualsEqualWeightSum) {
  Rng rng(41);
  auto g = support::random_game(8, rng);
  auto hcs = CoalitionStructure::parse("{{{1,2},{3,4}},{{5,6},{7},{8}}}");
  double listed = 0.0;
  for (auto q : {0u, 0b10u, 0b11110000u, 0b11110010u, 0b1100u, 0b1110u, 0b11111100u,
                 0b11111110u}) {
    listed += (g.at(q | 1)[0] - g.at(q)[0]) / 8.0;
  }
  EXPECT_NEAR(owen_hcs_recursive(g, hcs, Coalition(8), 0), listed, 1e-15);
}

TEST(OwenHcsRecursive, IndivisibleGrandCoalitionSharesEvenly) {
  Rng rng(42);
  auto g = support::random_game(5, rng);
  auto hcs = CoalitionStructure::indivisible(5);
  const double share = (g.at(31)[0] - g.at(0)[0]) / 5.0;
  for (Player i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(owen_hcs_recursive(g, hcs, Coalition(5), i), share);
  }
}

TEST(OwenHcsRecursive, FlatTeamIsShapley) {
  Rng rng(43);
  auto g = support::random_game(6, rng);
  auto hcs = CoalitionStructure::parse("{1,2,3,4,5,6}");
  auto phi = shapley_exact(g, Coalition(6));
  for (Player i = 0; i < 6; ++i) {
    EXPECT_NEAR(owen_hcs_recursive(g, hcs, Coalition(6), i), phi[i], 1e-12);
  }
}

TEST(OwenHcsRecursive, MatchesBinaryRecursionAndDecomposition) {
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = support::pick(rng, 2, 8);
    auto g = support::random_game(n, rng);
    auto tree = support::random_binary_tree(n, rng);
    auto hcs = to_coalition_structure(tree);
    for (Player i = 0; i < n; ++i) {
      const double rec = owen_hcs_recursive(g, hcs, Coalition(n), i);
      EXPECT_NEAR(rec, support::binary_owen(g, tree, i), 1e-12);
      EXPECT_NEAR(rec, apply_marginals(g, enumerate_marginals(hcs, i)), 1e-12);
    }
  }
}

TEST(OwenHcsRecursive, SixPlayerTreeMatchesExplainer) {
  Rng rng(45);
  auto g = support::random_game(6, rng);
  auto tree = support::random_binary_tree(6, rng);
  BudgetPolicy unlimited;
  unlimited.budget = BudgetPolicy::kUnlimited;
  auto map = owen_values(g, tree, unlimited);
  auto hcs = to_coalition_structure(tree);
  for (Player i = 0; i < 6; ++i) {
    EXPECT_NEAR(map.at(0, i), owen_hcs_recursive(g, hcs, Coalition(6), i), 1e-9);
  }
}

TEST(OwenHcsRecursive, EmptyStructureIsRejected) {
  auto g = dictator(2);
  EXPECT_THROW(owen_hcs_recursive(g, CoalitionStructure{}, Coalition(2), 0), StructuralError);
}

// ---------------------------------------------------------------------------
// expected_eval_count

TEST(ExpectedEvalCount, UnrolledRecurrence) {
  EXPECT_EQ(expected_eval_count(0), 0u);
  EXPECT_EQ(expected_eval_count(1), 2u);
  EXPECT_EQ(expected_eval_count(2), 10u);
  EXPECT_EQ(expected_eval_count(3), 42u);
  for (unsigned d = 1; d < 20; ++d) {
    EXPECT_EQ(expected_eval_count(d), 4 * expected_eval_count(d - 1) + 2);
  }
}
