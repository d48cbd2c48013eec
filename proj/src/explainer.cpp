#include "shapbpt/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "shapbpt/errors.hpp"

namespace shapbpt {

using NodeId = PartitionTree::NodeId;

std::string to_string(PriorityMode mode) {
  switch (mode) {
    case PriorityMode::kWeightedGap:
      return "weighted-gap";
    case PriorityMode::kWeightOnly:
      return "weight-only";
    case PriorityMode::kSignedGap:
      return "signed-gap";
  }
  return "weighted-gap";
}

PriorityMode parse_priority_mode(const std::string& text) {
  if (text == "weighted-gap") return PriorityMode::kWeightedGap;
  if (text == "weight-only") return PriorityMode::kWeightOnly;
  if (text == "signed-gap") return PriorityMode::kSignedGap;
  throw PreconditionError("unknown priority mode '" + text + "'");
}

double priority_key(const QueueEntry& entry, PriorityMode mode, std::size_t cls) {
  switch (mode) {
    case PriorityMode::kWeightOnly:
      return entry.weight;
    case PriorityMode::kSignedGap:
      return entry.weight * (entry.v_with_node[cls] - entry.v_context[cls]);
    case PriorityMode::kWeightedGap:
      break;
  }
  return std::abs(entry.weight * (entry.v_with_node[cls] - entry.v_context[cls]));
}

std::array<QueueEntry, 4> split_entry(const PartitionTree& tree, const QueueEntry& entry,
                                      const Worth& v_with_left, const Worth& v_with_right) {
  if (tree.is_leaf(entry.node)) {
    throw StructuralError("cannot split indivisible node " + std::to_string(entry.node));
  }
  const NodeId t1 = tree.left(entry.node);
  const NodeId t2 = tree.right(entry.node);
  const double half = entry.weight / 2;
  const unsigned depth = entry.depth + 1;

  Coalition with_t1 = entry.context;
  for (auto p : tree.region(t1)) with_t1.set(p);
  Coalition with_t2 = entry.context;
  for (auto p : tree.region(t2)) with_t2.set(p);

  return {
      QueueEntry{half, depth, entry.context, t1, entry.v_context, v_with_left, 0},
      QueueEntry{half, depth, with_t2, t1, v_with_right, entry.v_with_node, 0},
      QueueEntry{half, depth, entry.context, t2, entry.v_context, v_with_right, 0},
      QueueEntry{half, depth, std::move(with_t1), t2, v_with_left, entry.v_with_node, 0},
  };
}

// ---------------------------------------------------------------------------
// SaliencyMap

SaliencyMap::SaliencyMap(std::uint32_t width, std::uint32_t height, std::size_t classes)
    : width_(width), height_(height), classes_(classes),
      values_(std::size_t{width} * height * classes, 0.0) {}

void SaliencyMap::set_shape(std::uint32_t width, std::uint32_t height) {
  if (std::size_t{width} * height != num_pixels()) {
    throw StructuralError("new shape does not preserve the pixel count");
  }
  width_ = width;
  height_ = height;
}

double SaliencyMap::conservation_residual(std::size_t cls) const {
  double sum = 0.0;
  for (double v : class_values(cls)) sum += v;
  return sum - (v_full.at(cls) - v_empty.at(cls));
}

// ---------------------------------------------------------------------------
// Expansion loop

namespace {

struct Slot {
  double key;
  QueueEntry entry;
};

// Max-heap on key; among equal keys the earlier insertion wins.
struct SlotLess {
  bool operator()(const Slot& a, const Slot& b) const {
    if (a.key != b.key) return a.key < b.key;
    return a.entry.seq > b.entry.seq;
  }
};

}  // namespace

SaliencyMap owen_values(CharacteristicGame& game, const PartitionTree& tree,
                        const BudgetPolicy& policy, ExpansionObserver* observer) {
  const std::size_t n = tree.num_leaves();
  if (n == 0) throw StructuralError("empty partition tree");
  if (game.num_players() != n) {
    throw PreconditionError("tree has " + std::to_string(n) + " leaves but the game has " +
                            std::to_string(game.num_players()) + " players");
  }
  const std::size_t classes = game.num_classes();
  const std::size_t cls = policy.explained_class;
  if (cls >= classes) throw PreconditionError("explained class out of range");

  SaliencyMap map(static_cast<std::uint32_t>(n), 1, classes);
  map.budget_requested = policy.budget;
  map.hierarchy = tree.kind();
  map.priority = policy.priority;
  map.explained_class = cls;
  map.evaluator = game.id();

  auto evaluate = [&](const std::vector<Coalition>& batch) {
    try {
      auto out = game.evaluate_batch(batch);
      if (out.size() != batch.size()) throw EvaluationError("short result batch", out.size());
      for (const auto& w : out) {
        if (w.size() != classes) throw EvaluationError("worth vector has wrong class count", 0);
      }
      return out;
    } catch (const EvaluationError& e) {
      const std::size_t at = std::min(e.index(), batch.size() - 1);
      throw PartialResultError(std::string("evaluation failed: ") + e.what(), map, batch[at]);
    } catch (const std::exception& e) {
      throw PartialResultError(std::string("evaluation failed: ") + e.what(), map, batch[0]);
    }
  };

  Coalition empty(n);
  Coalition full(n);
  full.set();
  auto boot = evaluate({empty, full});
  map.bootstrap_evaluations = 2;
  map.v_empty = boot[0];
  map.v_full = boot[1];

  std::vector<Slot> heap;
  std::uint64_t seq = 0;
  auto push = [&](QueueEntry e) {
    e.seq = seq++;
    if (observer) observer->on_push(e);
    const double key = priority_key(e, policy.priority, cls);
    heap.push_back(Slot{key, std::move(e)});
    std::push_heap(heap.begin(), heap.end(), SlotLess{});
  };
  push(QueueEntry{1.0, 0, empty, tree.root(), boot[0], boot[1], 0});

  std::uint64_t remaining = policy.budget;
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), SlotLess{});
    QueueEntry e = std::move(heap.back().entry);
    heap.pop_back();

    const bool split = !tree.is_leaf(e.node) && remaining >= 2 &&
                       (!policy.max_depth || e.depth < *policy.max_depth);
    if (observer) observer->on_pop(e, split);

    if (!split) {
      const auto region = tree.region(e.node);
      const double share = e.weight / static_cast<double>(region.size());
      for (std::size_t c = 0; c < classes; ++c) {
        const double delta = share * (e.v_with_node[c] - e.v_context[c]);
        auto values = map.class_values(c);
        for (auto p : region) values[p] += delta;
      }
      continue;
    }

    std::vector<Coalition> batch(2, e.context);
    for (auto p : tree.region(tree.left(e.node))) batch[0].set(p);
    for (auto p : tree.region(tree.right(e.node))) batch[1].set(p);
    auto fresh = evaluate(batch);
    if (remaining != BudgetPolicy::kUnlimited) remaining -= 2;
    map.budget_spent += 2;

    for (auto& child : split_entry(tree, e, fresh[0], fresh[1])) push(std::move(child));
  }
  return map;
}

std::uint64_t full_expansion_eval_count(const PartitionTree& tree, unsigned depth) {
  const auto depths = tree.depths();
  for (NodeId id = 0; id < tree.num_nodes(); ++id) {
    if (tree.is_leaf(id) && depths[id] < depth) {
      throw StructuralError("tree is not complete down to depth " + std::to_string(depth));
    }
  }
  // Worth |S| keeps every gap nonzero, though with a depth cap and no budget
  // limit the priority does not affect which entries are expanded.
  auto game = FunctionGame::scalar(tree.num_leaves(), [](const Coalition& c) {
    return static_cast<double>(c.count());
  });
  BudgetPolicy policy;
  policy.budget = BudgetPolicy::kUnlimited;
  policy.max_depth = depth;
  auto map = owen_values(game, tree, policy);
  return game.calls() - map.bootstrap_evaluations;
}

// ---------------------------------------------------------------------------
// SMP1 files

namespace {
constexpr char kSaliencyMagic[4] = {'S', 'M', 'P', '1'};
}

void write_saliency(const SaliencyMap& map, std::ostream& out) {
  std::vector<std::uint8_t> buf(kSaliencyMagic, kSaliencyMagic + 4);
  detail::put_u32(buf, map.width());
  detail::put_u32(buf, map.height());
  detail::put_u32(buf, static_cast<std::uint32_t>(map.num_classes()));
  for (std::size_t c = 0; c < map.num_classes(); ++c) {
    for (double v : map.class_values(c)) detail::put_f32(buf, static_cast<float>(v));
  }
  nlohmann::json meta = {
      {"budget_requested", map.budget_requested},
      {"budget_spent", map.budget_spent},
      {"bootstrap_evaluations", map.bootstrap_evaluations},
      {"hierarchy", to_string(map.hierarchy)},
      {"priority", to_string(map.priority)},
      {"explained_class", map.explained_class},
      {"evaluator", map.evaluator},
      {"v_empty", map.v_empty},
      {"v_full", map.v_full},
  };
  const std::string trailer = meta.dump();
  buf.insert(buf.end(), trailer.begin(), trailer.end());
  detail::write_bytes(out, buf);
}

SaliencyMap read_saliency(std::istream& in) {
  auto head = detail::read_bytes(in, 16);
  if (!std::equal(kSaliencyMagic, kSaliencyMagic + 4, head.begin())) {
    throw FormatError("not an SMP1 file");
  }
  const std::uint32_t width = detail::get_u32(head.data() + 4);
  const std::uint32_t height = detail::get_u32(head.data() + 8);
  const std::uint32_t classes = detail::get_u32(head.data() + 12);
  const std::size_t n = std::size_t{width} * height;
  if (n == 0 || n > PartitionTree::kMaxPixels || classes == 0 || classes > 1u << 16) {
    throw FormatError("saliency header out of range");
  }
  SaliencyMap map(width, height, classes);
  auto raw = detail::read_bytes(in, 4 * n * classes);
  for (std::size_t c = 0; c < classes; ++c) {
    auto values = map.class_values(c);
    for (std::size_t p = 0; p < n; ++p) values[p] = detail::get_f32(raw.data() + 4 * (c * n + p));
  }
  std::string trailer{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    auto meta = nlohmann::json::parse(trailer);
    map.budget_requested = meta.at("budget_requested").get<std::uint64_t>();
    map.budget_spent = meta.at("budget_spent").get<std::uint64_t>();
    map.bootstrap_evaluations = meta.at("bootstrap_evaluations").get<std::uint64_t>();
    map.hierarchy = parse_hierarchy_kind(meta.at("hierarchy").get<std::string>());
    map.priority = parse_priority_mode(meta.at("priority").get<std::string>());
    map.explained_class = meta.at("explained_class").get<std::size_t>();
    map.evaluator = meta.at("evaluator").get<std::string>();
    map.v_empty = meta.at("v_empty").get<Worth>();
    map.v_full = meta.at("v_full").get<Worth>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad saliency metadata: ") + e.what());
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("bad saliency metadata: ") + e.what());
  }
  return map;
}

void save_saliency(const SaliencyMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_saliency(map, out);
}

SaliencyMap load_saliency(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_saliency(in);
}

}  // namespace shapbpt
