#include "support.hpp"

#include <algorithm>
#include <numeric>

namespace shapbpt::support {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

RecordedGame random_game(std::size_t n, Rng& rng, std::size_t classes) {
  std::vector<Worth> table(std::size_t{1} << n, Worth(classes));
  for (auto& w : table) {
    for (auto& v : w) v = uniform(rng, -1.0, 1.0);
  }
  return RecordedGame(n, classes, std::move(table));
}

FunctionGame additive_game(std::vector<double> v) {
  const std::size_t n = v.size();
  return FunctionGame::scalar(n, [v = std::move(v)](const Coalition& c) {
    double s = 0.0;
    for (auto i = c.find_first(); i != Coalition::npos; i = c.find_next(i)) s += v[i];
    return s;
  }, "additive");
}

PartitionTree random_binary_tree(std::size_t n, Rng& rng) {
  std::vector<PartitionTree::NodeId> roots(n);
  std::iota(roots.begin(), roots.end(), 0u);
  std::vector<std::pair<PartitionTree::NodeId, PartitionTree::NodeId>> merges;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const std::size_t a = pick(rng, 0, roots.size() - 1);
    std::size_t b = pick(rng, 0, roots.size() - 2);
    if (b >= a) ++b;
    merges.emplace_back(roots[a], roots[b]);
    const auto fresh = static_cast<PartitionTree::NodeId>(n + t);
    roots[std::min(a, b)] = fresh;
    roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(std::max(a, b)));
  }
  return tree_from_merges(HierarchyKind::kBpt, n, merges);
}

RasterImage random_image(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
                         Rng& rng, int levels) {
  RasterImage img(width, height, channels);
  const int step = levels > 1 ? 255 / (levels - 1) : 0;
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(step * pick(rng, 0, levels - 1));
  return img;
}

namespace {

double owen_rec(CharacteristicGame& game, const PartitionTree& tree, const Coalition& q,
                PartitionTree::NodeId node, std::uint32_t player, std::size_t cls) {
  if (tree.is_leaf(node)) {
    Coalition with = q;
    with.set(player);
    return worth_of(game, with, cls) - worth_of(game, q, cls);
  }
  auto l = tree.left(node), r = tree.right(node);
  auto contains = [&](PartitionTree::NodeId id) {
    auto reg = tree.region(id);
    return std::find(reg.begin(), reg.end(), player) != reg.end();
  };
  const auto own = contains(l) ? l : r;
  const auto other = own == l ? r : l;
  Coalition with_other = q;
  for (auto p : tree.region(other)) with_other.set(p);
  return 0.5 * (owen_rec(game, tree, q, own, player, cls) +
                owen_rec(game, tree, with_other, own, player, cls));
}

}  // namespace

double binary_owen(CharacteristicGame& game, const PartitionTree& tree, std::uint32_t player,
                   std::size_t cls) {
  return owen_rec(game, tree, Coalition(tree.num_leaves()), tree.root(), player, cls);
}

std::vector<double> shapley_by_permutations(CharacteristicGame& game, std::size_t cls) {
  const std::size_t n = game.num_players();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<double> phi(n, 0.0);
  std::size_t count = 0;
  do {
    Coalition s(n);
    double before = worth_of(game, s, cls);
    for (auto p : order) {
      s.set(p);
      const double after = worth_of(game, s, cls);
      phi[p] += after - before;
      before = after;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& v : phi) v /= static_cast<double>(count);
  return phi;
}

PartitionTree balanced_tree(unsigned depth) {
  const std::size_t n = std::size_t{1} << depth;
  std::vector<std::pair<PartitionTree::NodeId, PartitionTree::NodeId>> merges;
  std::vector<PartitionTree::NodeId> level(n);
  std::iota(level.begin(), level.end(), 0u);
  auto next = static_cast<PartitionTree::NodeId>(n);
  while (level.size() > 1) {
    std::vector<PartitionTree::NodeId> up;
    for (std::size_t k = 0; k < level.size(); k += 2) {
      merges.emplace_back(level[k], level[k + 1]);
      up.push_back(next++);
    }
    level = std::move(up);
  }
  return tree_from_merges(HierarchyKind::kAa, n, merges);
}

}  // namespace shapbpt::support
