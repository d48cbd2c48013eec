#include "shapbpt/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <functional>
#include <limits>
#include <unordered_map>

#include "shapbpt/errors.hpp"

namespace shapbpt {

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / j;
  return r;
}

std::int64_t binomial_int(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (std::int64_t j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

// Shapley weight of a coalition of size s among m players, for a player
// outside it: 1 / (m * C(m-1, s)).
double shapley_weight(std::size_t m, std::size_t s) {
  return 1.0 / (static_cast<double>(m) * binomial(m - 1, s));
}

Rational shapley_weight_exact(std::size_t m, std::size_t s) {
  return Rational(1, static_cast<std::int64_t>(m) *
                         binomial_int(static_cast<std::int64_t>(m - 1),
                                      static_cast<std::int64_t>(s)));
}

class Parser {
 public:
  Parser(std::string_view text, bool one_based, CoalitionStructure& out)
      : text_(text), one_based_(one_based), out_(out) {}

  CoalitionStructure::NodeId parse_all() {
    auto id = parse_group();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return id;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw StructuralError("coalition structure, offset " + std::to_string(pos_) + ": " + why);
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Player parse_player() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a player number");
    auto v = std::stoull(std::string(text_.substr(start, pos_ - start)));
    if (one_based_) {
      if (v == 0) fail("players are numbered from 1");
      --v;
    }
    return static_cast<Player>(v);
  }

  CoalitionStructure::NodeId parse_item() {
    char c = peek();
    if (c == '{' || c == '[') return parse_group();
    return out_.add_leaf({parse_player()});
  }

  CoalitionStructure::NodeId parse_group() {
    char open = peek();
    if (open == '[') {
      ++pos_;
      std::vector<Player> players{parse_player()};
      while (peek() == ',') {
        ++pos_;
        players.push_back(parse_player());
      }
      expect(']');
      return out_.add_leaf(std::move(players));
    }
    expect('{');
    std::vector<CoalitionStructure::NodeId> items{parse_item()};
    while (peek() == ',') {
      ++pos_;
      items.push_back(parse_item());
    }
    expect('}');
    if (items.size() == 1) return items.front();
    return out_.add_internal(std::move(items));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  bool one_based_;
  CoalitionStructure& out_;
};

std::size_t universe_of(const CoalitionStructure& hcs) {
  const auto& players = hcs.node(hcs.root()).players;
  return players.empty() ? 0 : static_cast<std::size_t>(players.back()) + 1;
}

// Index of the child of `node` holding player i.
std::size_t child_with(const CoalitionStructure& hcs, const CoalitionStructure::Node& node,
                       Player i) {
  for (std::size_t k = 0; k < node.children.size(); ++k) {
    const auto& ps = hcs.node(node.children[k]).players;
    if (std::binary_search(ps.begin(), ps.end(), i)) return k;
  }
  throw PreconditionError("player " + std::to_string(i) + " not in coalition structure node");
}

void add_players(Coalition& c, const std::vector<Player>& ps) {
  for (Player p : ps) c.set(p);
}

}  // namespace

CoalitionStructure::NodeId CoalitionStructure::add_leaf(std::vector<Player> players) {
  if (players.empty()) throw StructuralError("empty coalition in structure");
  std::sort(players.begin(), players.end());
  if (std::adjacent_find(players.begin(), players.end()) != players.end()) {
    throw StructuralError("player repeated inside a coalition");
  }
  nodes_.push_back(Node{std::move(players), {}});
  root_ = nodes_.size() - 1;
  return root_;
}

CoalitionStructure::NodeId CoalitionStructure::add_internal(std::vector<NodeId> children) {
  if (children.size() < 2) throw StructuralError("a split needs at least two children");
  std::vector<Player> players;
  for (NodeId c : children) {
    const auto& ps = nodes_.at(c).players;
    players.insert(players.end(), ps.begin(), ps.end());
  }
  std::sort(players.begin(), players.end());
  if (std::adjacent_find(players.begin(), players.end()) != players.end()) {
    throw StructuralError("children of a coalition overlap");
  }
  nodes_.push_back(Node{std::move(players), std::move(children)});
  root_ = nodes_.size() - 1;
  return root_;
}

CoalitionStructure CoalitionStructure::parse(std::string_view text, bool one_based) {
  CoalitionStructure out;
  Parser parser(text, one_based, out);
  out.root_ = parser.parse_all();
  out.validate();
  return out;
}

CoalitionStructure CoalitionStructure::indivisible(std::size_t n) {
  CoalitionStructure out;
  std::vector<Player> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<Player>(i);
  out.add_leaf(std::move(all));
  return out;
}

CoalitionStructure CoalitionStructure::two_level(
    const std::vector<std::vector<Player>>& teams) {
  CoalitionStructure out;
  std::vector<NodeId> team_ids;
  for (const auto& team : teams) {
    if (team.size() == 1) {
      team_ids.push_back(out.add_leaf(team));
      continue;
    }
    std::vector<NodeId> singles;
    for (Player p : team) singles.push_back(out.add_leaf({p}));
    team_ids.push_back(out.add_internal(std::move(singles)));
  }
  if (team_ids.size() > 1) out.add_internal(std::move(team_ids));
  out.validate();
  return out;
}

void CoalitionStructure::validate() const {
  if (nodes_.empty()) throw StructuralError("empty coalition structure");
  std::vector<bool> seen(nodes_.size(), false);
  std::function<void(NodeId)> visit = [&](NodeId id) {
    if (id >= nodes_.size()) throw StructuralError("dangling child id");
    if (seen[id]) throw StructuralError("node reachable twice");
    seen[id] = true;
    const Node& n = nodes_[id];
    if (n.players.empty()) throw StructuralError("empty coalition in structure");
    if (n.indivisible()) return;
    if (n.children.size() < 2) throw StructuralError("a split needs at least two children");
    std::vector<Player> merged;
    for (NodeId c : n.children) {
      visit(c);
      const auto& ps = nodes_[c].players;
      merged.insert(merged.end(), ps.begin(), ps.end());
    }
    std::sort(merged.begin(), merged.end());
    if (merged != n.players) throw StructuralError("children do not partition their parent");
  };
  visit(root_);
}

std::size_t CoalitionStructure::height() const {
  if (nodes_.empty()) return 0;
  std::function<std::size_t(NodeId)> h = [&](NodeId id) -> std::size_t {
    std::size_t best = 0;
    for (NodeId c : nodes_[id].children) best = std::max(best, 1 + h(c));
    return best;
  };
  return h(root_);
}

double marginal(CharacteristicGame& game, const Coalition& s, Player i, std::size_t cls) {
  if (i >= s.size()) throw BoundsError("player outside game");
  if (s.test(i)) {
    throw PreconditionError("player " + std::to_string(i) + " already in coalition " +
                            to_string(s));
  }
  Coalition with = s;
  with.set(i);
  NormalizedGame g(game);
  const Coalition batch[] = {s, with};
  auto w = g.evaluate_batch(batch);
  return w[1].at(cls) - w[0].at(cls);
}

std::vector<double> shapley_exact(CharacteristicGame& game, const Coalition& context,
                                  std::size_t cls) {
  const std::size_t n = game.num_players();
  if (n > kMaxExactPlayers) {
    throw CapacityError("shapley_exact enumerates at most " + std::to_string(kMaxExactPlayers) +
                        " players, game has " + std::to_string(n));
  }
  if (context.size() != n) throw StructuralError("context universe does not match game");
  std::vector<Player> free;
  for (Player p = 0; p < n; ++p) {
    if (!context.test(p)) free.push_back(p);
  }
  const std::size_t m = free.size();
  std::vector<double> phi(n, 0.0);
  if (m == 0) return phi;

  // Worth of context + S for every S over the free players, indexed by a
  // local bitmask.
  NormalizedGame g(game);
  const std::size_t total = std::size_t{1} << m;
  std::vector<double> worth(total);
  constexpr std::size_t kChunk = std::size_t{1} << 14;
  std::vector<Coalition> batch;
  for (std::size_t base = 0; base < total; base += kChunk) {
    const std::size_t end = std::min(total, base + kChunk);
    batch.clear();
    for (std::size_t mask = base; mask < end; ++mask) {
      Coalition c = context;
      for (std::size_t k = 0; k < m; ++k) {
        if (mask >> k & 1U) c.set(free[k]);
      }
      batch.push_back(std::move(c));
    }
    auto out = g.evaluate_batch(batch);
    for (std::size_t mask = base; mask < end; ++mask) worth[mask] = out[mask - base].at(cls);
  }

  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) weight[s] = shapley_weight(m, s);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t bit = std::size_t{1} << k;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < total; ++mask) {
      if (mask & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(mask))] *
             (worth[mask | bit] - worth[mask]);
    }
    phi[free[k]] = acc;
  }
  return phi;
}

double owen_two_level(CharacteristicGame& game, const std::vector<std::vector<Player>>& teams,
                      Player i, std::size_t cls) {
  const std::size_t n = game.num_players();
  std::vector<int> owner(n, -1);
  for (std::size_t t = 0; t < teams.size(); ++t) {
    if (teams[t].empty()) throw StructuralError("empty team");
    for (Player p : teams[t]) {
      if (p >= n) throw StructuralError("team member outside the game");
      if (owner[p] != -1) throw StructuralError("teams overlap on player " + std::to_string(p));
      owner[p] = static_cast<int>(t);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw StructuralError("teams do not cover every player");
  }
  if (i >= n) throw PreconditionError("player outside the game");

  const auto j = static_cast<std::size_t>(owner[i]);
  const std::size_t m = teams.size();
  std::vector<std::size_t> other_teams;
  for (std::size_t t = 0; t < m; ++t) {
    if (t != j) other_teams.push_back(t);
  }
  std::vector<Player> mates;
  for (Player p : teams[j]) {
    if (p != i) mates.push_back(p);
  }
  const std::size_t tj = teams[j].size();
  if (other_teams.size() + mates.size() > 24) {
    throw CapacityError("owen_two_level enumerates at most 2^24 marginals");
  }

  std::vector<Coalition> batch;
  std::vector<double> weights;
  for (std::size_t h = 0; h < (std::size_t{1} << other_teams.size()); ++h) {
    Coalition qh(n);
    for (std::size_t k = 0; k < other_teams.size(); ++k) {
      if (h >> k & 1U) add_players(qh, teams[other_teams[k]]);
    }
    const double wh = shapley_weight(m, static_cast<std::size_t>(std::popcount(h)));
    for (std::size_t s = 0; s < (std::size_t{1} << mates.size()); ++s) {
      Coalition c = qh;
      for (std::size_t k = 0; k < mates.size(); ++k) {
        if (s >> k & 1U) c.set(mates[k]);
      }
      const double ws = shapley_weight(tj, static_cast<std::size_t>(std::popcount(s)));
      batch.push_back(c);
      c.set(i);
      batch.push_back(std::move(c));
      weights.push_back(wh * ws);
    }
  }
  NormalizedGame g(game);
  auto out = g.evaluate_batch(batch);
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k] * (out[2 * k + 1].at(cls) - out[2 * k].at(cls));
  }
  return acc;
}

double owen_hcs_recursive(CharacteristicGame& game, const CoalitionStructure& hcs,
                          const Coalition& context, Player i, std::size_t cls) {
  if (hcs.empty()) throw StructuralError("empty coalition structure");
  const std::size_t n = game.num_players();
  if (context.size() != n) throw StructuralError("context universe does not match game");
  const auto& root_players = hcs.node(hcs.root()).players;
  if (!root_players.empty() && root_players.back() >= n) {
    throw StructuralError("coalition structure references players outside the game");
  }
  if (!std::binary_search(root_players.begin(), root_players.end(), i)) {
    throw PreconditionError("player " + std::to_string(i) + " not in coalition structure");
  }
  for (Player p : root_players) {
    if (context.test(p)) throw PreconditionError("context overlaps the coalition structure");
  }

  NormalizedGame g(game);
  std::unordered_map<Coalition, double, CoalitionHash> memo;
  auto nu = [&](const Coalition& c) {
    auto it = memo.find(c);
    if (it != memo.end()) return it->second;
    double v = worth_of(g, c, cls);
    memo.emplace(c, v);
    return v;
  };

  std::function<double(CoalitionStructure::NodeId, const Coalition&)> omega =
      [&](CoalitionStructure::NodeId id, const Coalition& q) -> double {
    const auto& t = hcs.node(id);
    if (t.indivisible()) {
      Coalition qt = q;
      add_players(qt, t.players);
      return (nu(qt) - nu(q)) / static_cast<double>(t.players.size());
    }
    const std::size_t m = t.children.size();
    const std::size_t j = child_with(hcs, t, i);
    std::vector<CoalitionStructure::NodeId> others;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != j) others.push_back(t.children[k]);
    }
    if (others.size() > 20) throw CapacityError("node fan-out above 21 children");
    double acc = 0.0;
    for (std::size_t u = 0; u < (std::size_t{1} << others.size()); ++u) {
      Coalition qu = q;
      for (std::size_t k = 0; k < others.size(); ++k) {
        if (u >> k & 1U) add_players(qu, hcs.node(others[k]).players);
      }
      acc += shapley_weight(m, static_cast<std::size_t>(std::popcount(u))) *
             omega(t.children[j], qu);
    }
    return acc;
  };
  return omega(hcs.root(), context);
}

std::vector<MarginalTerm> enumerate_marginals(const CoalitionStructure& hcs, Player i) {
  if (hcs.empty()) throw StructuralError("empty coalition structure");
  const auto& root_players = hcs.node(hcs.root()).players;
  if (!std::binary_search(root_players.begin(), root_players.end(), i)) {
    throw PreconditionError("player " + std::to_string(i) + " not in coalition structure");
  }

  // Count first so that the capacity check happens before any allocation.
  std::size_t count = 1;
  for (auto id = hcs.root(); !hcs.node(id).indivisible();) {
    const auto& t = hcs.node(id);
    const std::size_t fan = t.children.size() - 1;
    if (fan >= 63 || count > (kMaxMarginalTerms >> std::min<std::size_t>(fan, 62))) {
      throw CapacityError("more than " + std::to_string(kMaxMarginalTerms) + " marginal terms");
    }
    count <<= fan;
    id = t.children[child_with(hcs, t, i)];
  }

  const std::size_t n = universe_of(hcs);
  std::vector<MarginalTerm> out;
  out.reserve(count);
  std::function<void(CoalitionStructure::NodeId, const Coalition&, const Rational&)> expand =
      [&](CoalitionStructure::NodeId id, const Coalition& q, const Rational& w) {
        const auto& t = hcs.node(id);
        if (t.indivisible()) {
          out.push_back(MarginalTerm{w, q, t.players});
          return;
        }
        const std::size_t m = t.children.size();
        const std::size_t j = child_with(hcs, t, i);
        std::vector<CoalitionStructure::NodeId> others;
        for (std::size_t k = 0; k < m; ++k) {
          if (k != j) others.push_back(t.children[k]);
        }
        for (std::size_t u = 0; u < (std::size_t{1} << others.size()); ++u) {
          Coalition qu = q;
          for (std::size_t k = 0; k < others.size(); ++k) {
            if (u >> k & 1U) add_players(qu, hcs.node(others[k]).players);
          }
          expand(t.children[j], qu,
                 w * shapley_weight_exact(m, static_cast<std::size_t>(std::popcount(u))));
        }
      };
  expand(hcs.root(), Coalition(n), Rational(1));
  return out;
}

double apply_marginals(CharacteristicGame& game, const std::vector<MarginalTerm>& terms,
                       std::size_t cls) {
  const std::size_t n = game.num_players();
  std::vector<Coalition> batch;
  batch.reserve(2 * terms.size());
  for (const auto& term : terms) {
    Coalition q = term.context;
    q.resize(n);
    Coalition qt = q;
    add_players(qt, term.block);
    batch.push_back(std::move(q));
    batch.push_back(std::move(qt));
  }
  NormalizedGame g(game);
  auto out = g.evaluate_batch(batch);
  double acc = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double w = boost::rational_cast<double>(terms[k].weight);
    acc += w * (out[2 * k + 1].at(cls) - out[2 * k].at(cls)) /
           static_cast<double>(terms[k].block.size());
  }
  return acc;
}

std::uint64_t expected_eval_count(unsigned depth) {
  // a(31) is the last value below 2^64.
  if (depth > 31) throw CapacityError("expected_eval_count overflows 64 bits above depth 31");
  std::uint64_t a = 0;
  for (unsigned d = 1; d <= depth; ++d) a = 4 * a + 2;
  return a;
}

}  // namespace shapbpt
