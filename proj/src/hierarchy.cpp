#include "shapbpt/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>

#include "binary_io.hpp"
#include "shapbpt/errors.hpp"

namespace shapbpt {

using NodeId = PartitionTree::NodeId;

std::string to_string(HierarchyKind kind) {
  return kind == HierarchyKind::kBpt ? "bpt" : "aa";
}

std::string to_string(DistanceVariant variant) {
  switch (variant) {
    case DistanceVariant::kDefault:
      return "default";
    case DistanceVariant::kNoPerimeter:
      return "no-perimeter";
    case DistanceVariant::kNoColor:
      return "no-color";
  }
  return "default";
}

HierarchyKind parse_hierarchy_kind(const std::string& text) {
  if (text == "bpt") return HierarchyKind::kBpt;
  if (text == "aa") return HierarchyKind::kAa;
  throw PreconditionError("unknown hierarchy kind '" + text + "' (expected bpt or aa)");
}

DistanceVariant parse_distance_variant(const std::string& text) {
  if (text == "default") return DistanceVariant::kDefault;
  if (text == "no-perimeter") return DistanceVariant::kNoPerimeter;
  if (text == "no-color") return DistanceVariant::kNoColor;
  throw PreconditionError("unknown distance variant '" + text + "'");
}

RegionStats RegionStats::of_pixel(const RasterImage& image, std::size_t pixel) {
  RegionStats s;
  for (std::uint32_t c = 0; c < 3; ++c) s.min[c] = s.max[c] = image.rgb(pixel, c);
  s.area = 1;
  s.perimeter = 4;
  s.root = static_cast<std::uint32_t>(pixel);
  return s;
}

double region_distance(const RegionStats& a, const RegionStats& b,
                       std::uint32_t shared_boundary, DistanceVariant variant) {
  if (shared_boundary == 0) throw StructuralError("regions are not adjacent");
  double clr2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double range = std::max(a.max[c], b.max[c]) - std::min(a.min[c], b.min[c]);
    clr2 += range * range;
  }
  const double area = static_cast<double>(a.area) + b.area;
  const double perimeter =
      static_cast<double>(a.perimeter + b.perimeter - 2 * std::int64_t{shared_boundary});
  switch (variant) {
    case DistanceVariant::kDefault:
      return clr2 * area * std::sqrt(perimeter);
    case DistanceVariant::kNoPerimeter:
      return clr2 * area;
    case DistanceVariant::kNoColor:
      return area * std::sqrt(perimeter);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// PartitionTree

PartitionTree PartitionTree::from_children(HierarchyKind kind, std::vector<std::uint32_t> leaf_idx,
                                           std::vector<NodeId> left, std::vector<NodeId> right) {
  const std::size_t n = leaf_idx.size();
  if (n == 0) throw StructuralError("a partition tree needs at least one leaf");
  if (n > kMaxPixels) throw CapacityError("partition trees hold at most 2^24 pixels");
  if (left.size() != n - 1 || right.size() != n - 1) {
    throw StructuralError("a binary tree over n leaves has n-1 internal nodes");
  }
  const std::size_t total = 2 * n - 1;
  std::vector<std::uint32_t> start(n - 1), end(n - 1), pixels;
  pixels.reserve(n);

  std::vector<std::pair<NodeId, bool>> stack{{static_cast<NodeId>(total - 1), false}};
  std::size_t visits = 0;
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    if (id >= total) throw StructuralError("child id out of range");
    if (id < n) {
      pixels.push_back(leaf_idx[id]);
      if (++visits > total) throw StructuralError("tree topology revisits nodes");
      continue;
    }
    const std::size_t k = id - n;
    if (done) {
      end[k] = static_cast<std::uint32_t>(pixels.size());
      continue;
    }
    if (++visits > total) throw StructuralError("tree topology revisits nodes");
    start[k] = static_cast<std::uint32_t>(pixels.size());
    stack.emplace_back(id, true);
    stack.emplace_back(right[k], false);
    stack.emplace_back(left[k], false);
  }
  if (pixels.size() != n) throw StructuralError("tree does not reach every leaf");

  PartitionTree t;
  t.kind_ = kind;
  t.leaf_idx_ = std::move(leaf_idx);
  t.left_ = std::move(left);
  t.right_ = std::move(right);
  t.start_ = std::move(start);
  t.end_ = std::move(end);
  t.pixels_ = std::move(pixels);
  return t;
}

PartitionTree PartitionTree::from_arrays(HierarchyKind kind, std::vector<std::uint32_t> leaf_idx,
                                         std::vector<NodeId> left, std::vector<NodeId> right,
                                         std::vector<std::uint32_t> start,
                                         std::vector<std::uint32_t> end,
                                         std::vector<std::uint32_t> pixels) {
  PartitionTree t;
  t.kind_ = kind;
  t.leaf_idx_ = std::move(leaf_idx);
  t.left_ = std::move(left);
  t.right_ = std::move(right);
  t.start_ = std::move(start);
  t.end_ = std::move(end);
  t.pixels_ = std::move(pixels);
  return t;
}

std::size_t PartitionTree::internal_index(NodeId id) const {
  if (id < leaf_idx_.size() || id >= num_nodes()) {
    throw BoundsError("node " + std::to_string(id) + " is not an internal node");
  }
  return id - leaf_idx_.size();
}

std::span<const std::uint32_t> PartitionTree::region(NodeId id) const {
  if (id >= num_nodes()) throw BoundsError("node " + std::to_string(id) + " out of range");
  if (is_leaf(id)) return {&leaf_idx_[id], 1};
  const std::size_t k = id - leaf_idx_.size();
  const std::uint32_t s = start_.at(k), e = end_.at(k);
  if (s > e || e > pixels_.size()) throw BoundsError("corrupt pixel interval");
  return {pixels_.data() + s, e - s};
}

std::size_t PartitionTree::region_size(NodeId id) const { return region(id).size(); }

std::vector<std::uint32_t> PartitionTree::depths() const {
  std::vector<std::uint32_t> depth(num_nodes(), 0);
  if (num_nodes() == 0) return depth;
  // Parents may carry any id, so walk from the root.
  std::vector<NodeId> stack{root()};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (is_leaf(id)) continue;
    for (NodeId c : {left(id), right(id)}) {
      depth.at(c) = depth[id] + 1;
      stack.push_back(c);
    }
  }
  return depth;
}

std::size_t PartitionTree::storage_integers() const {
  return leaf_idx_.size() + left_.size() + right_.size() + start_.size() + end_.size() +
         pixels_.size();
}

// ---------------------------------------------------------------------------
// BPT

namespace {

struct Adjacency {
  NodeId other;
  std::uint32_t shared;
};

struct HeapEdge {
  double dist;
  NodeId a;  // a < b
  NodeId b;
  std::uint32_t shared;

  // Min-heap on (dist, a, b).
  bool operator>(const HeapEdge& o) const {
    if (dist != o.dist) return dist > o.dist;
    if (a != o.a) return a > o.a;
    return b > o.b;
  }
};

RegionStats merge_stats(const RegionStats& a, const RegionStats& b, std::uint32_t shared,
                        PerimeterRule rule, NodeId id) {
  RegionStats k;
  for (int c = 0; c < 3; ++c) {
    k.min[c] = std::min(a.min[c], b.min[c]);
    k.max[c] = std::max(a.max[c], b.max[c]);
  }
  k.area = a.area + b.area;
  k.perimeter = a.perimeter + b.perimeter;
  if (rule == PerimeterRule::kGeometric) k.perimeter -= 2 * std::int64_t{shared};
  k.root = id;
  return k;
}

}  // namespace

PartitionTree build_bpt(const RasterImage& image, const BptOptions& options,
                        std::vector<RegionStats>* stats_out) {
  const std::size_t n = image.num_pixels();
  if (n == 0) throw StructuralError("empty image");
  if (n > PartitionTree::kMaxPixels) throw CapacityError("images are limited to 2^24 pixels");
  const std::uint32_t w = image.width(), h = image.height();
  const std::size_t total = 2 * n - 1;

  std::vector<RegionStats> stats(total);
  std::vector<std::vector<Adjacency>> adj(total);
  std::vector<bool> alive(total, false);
  for (std::size_t p = 0; p < n; ++p) {
    stats[p] = RegionStats::of_pixel(image, p);
    alive[p] = true;
  }

  std::priority_queue<HeapEdge, std::vector<HeapEdge>, std::greater<>> heap;
  auto push_edge = [&](NodeId u, NodeId v, std::uint32_t shared) {
    heap.push(HeapEdge{region_distance(stats[u], stats[v], shared, options.distance),
                       std::min(u, v), std::max(u, v), shared});
  };
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const NodeId p = y * w + x;
      if (x + 1 < w) {
        adj[p].push_back({p + 1, 1});
        adj[p + 1].push_back({p, 1});
        push_edge(p, p + 1, 1);
      }
      if (y + 1 < h) {
        adj[p].push_back({p + w, 1});
        adj[p + w].push_back({p, 1});
        push_edge(p, p + w, 1);
      }
    }
  }

  std::vector<NodeId> left(n - 1), right(n - 1);
  std::vector<std::int64_t> slot(total, -1);
  NodeId next = static_cast<NodeId>(n);
  while (next < total) {
    if (heap.empty()) throw StructuralError("image graph is disconnected");
    const HeapEdge e = heap.top();
    heap.pop();
    if (!alive[e.a] || !alive[e.b]) continue;  // stale

    const NodeId k = next++;
    stats[k] = merge_stats(stats[e.a], stats[e.b], e.shared, options.perimeter, k);
    stats[e.a].root = stats[e.b].root = k;
    left[k - n] = e.a;
    right[k - n] = e.b;
    alive[e.a] = alive[e.b] = false;
    alive[k] = true;

    // Fuse both adjacency lists, summing boundaries of common neighbours.
    std::vector<Adjacency> merged;
    for (const auto* list : {&adj[e.a], &adj[e.b]}) {
      for (const Adjacency& x : *list) {
        if (x.other == e.a || x.other == e.b) continue;
        if (slot[x.other] < 0) {
          slot[x.other] = static_cast<std::int64_t>(merged.size());
          merged.push_back(x);
        } else {
          merged[static_cast<std::size_t>(slot[x.other])].shared += x.shared;
        }
      }
    }
    for (const Adjacency& x : merged) {
      slot[x.other] = -1;
      auto& lu = adj[x.other];
      std::erase_if(lu, [&](const Adjacency& y) { return y.other == e.a || y.other == e.b; });
      lu.push_back({k, x.shared});
      push_edge(k, x.other, x.shared);
    }
    adj[k] = std::move(merged);
    std::vector<Adjacency>().swap(adj[e.a]);
    std::vector<Adjacency>().swap(adj[e.b]);
  }

  std::vector<std::uint32_t> leaf_idx(n);
  for (std::size_t p = 0; p < n; ++p) leaf_idx[p] = static_cast<std::uint32_t>(p);
  auto tree = PartitionTree::from_children(HierarchyKind::kBpt, std::move(leaf_idx),
                                           std::move(left), std::move(right));
  std::string note = "distance=" + to_string(options.distance);
  if (options.perimeter == PerimeterRule::kPseudocodeLiteral) note += ";perimeter=literal";
  tree.set_note(std::move(note));
  if (stats_out) *stats_out = std::move(stats);
  return tree;
}

PartitionTree build_aa(std::uint32_t width, std::uint32_t height) {
  const std::size_t n = std::size_t{width} * height;
  if (n == 0) throw StructuralError("empty image");
  if (n > PartitionTree::kMaxPixels) throw CapacityError("images are limited to 2^24 pixels");

  std::vector<NodeId> left(n - 1), right(n - 1);
  NodeId next = static_cast<NodeId>(n);
  std::function<NodeId(std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t)> split =
      [&](std::uint32_t x0, std::uint32_t y0, std::uint32_t w, std::uint32_t h) -> NodeId {
    if (w == 1 && h == 1) return y0 * width + x0;
    NodeId a, b;
    if (w > h) {
      const std::uint32_t w1 = (w + 1) / 2;
      a = split(x0, y0, w1, h);
      b = split(x0 + w1, y0, w - w1, h);
    } else {
      const std::uint32_t h1 = (h + 1) / 2;
      a = split(x0, y0, w, h1);
      b = split(x0, y0 + h1, w, h - h1);
    }
    const NodeId k = next++;
    left[k - n] = a;
    right[k - n] = b;
    return k;
  };
  split(0, 0, width, height);

  std::vector<std::uint32_t> leaf_idx(n);
  for (std::size_t p = 0; p < n; ++p) leaf_idx[p] = static_cast<std::uint32_t>(p);
  auto tree = PartitionTree::from_children(HierarchyKind::kAa, std::move(leaf_idx),
                                           std::move(left), std::move(right));
  tree.set_note("split=longest-axis;square=top-bottom;odd=ceil-first");
  return tree;
}

PartitionTree tree_from_merges(HierarchyKind kind, std::size_t n,
                               const std::vector<std::pair<NodeId, NodeId>>& merges) {
  if (n == 0) throw StructuralError("a partition tree needs at least one leaf");
  if (merges.size() != n - 1) throw StructuralError("n leaves need exactly n-1 merges");
  std::vector<bool> alive(2 * n - 1, false);
  std::fill(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(n), true);
  std::vector<NodeId> left(n - 1), right(n - 1);
  for (std::size_t t = 0; t < merges.size(); ++t) {
    auto [a, b] = merges[t];
    const std::size_t k = n + t;
    if (a >= k || b >= k || a == b || !alive[a] || !alive[b]) {
      throw StructuralError("merge " + std::to_string(t) + " references an unavailable node");
    }
    alive[a] = alive[b] = false;
    alive[k] = true;
    left[t] = a;
    right[t] = b;
  }
  std::vector<std::uint32_t> leaf_idx(n);
  for (std::size_t p = 0; p < n; ++p) leaf_idx[p] = static_cast<std::uint32_t>(p);
  return PartitionTree::from_children(kind, std::move(leaf_idx), std::move(left),
                                      std::move(right));
}

// ---------------------------------------------------------------------------
// Validation and queries

bool ValidationReport::has(const std::string& category) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.category == category; });
}

namespace {

// True when `values` is a permutation of [0, n); reports the first problem.
bool check_permutation(const std::vector<std::uint32_t>& values, std::size_t n,
                       const std::string& what, ValidationReport& report) {
  std::vector<bool> seen(n, false);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto v = values[k];
    if (v >= n) {
      report.violations.push_back(
          {"leaf coverage", what + "[" + std::to_string(k) + "] = " + std::to_string(v) +
                                " is not a pixel"});
      return false;
    }
    if (seen[v]) {
      report.violations.push_back(
          {"leaf coverage", "pixel " + std::to_string(v) + " appears twice in " + what});
      return false;
    }
    seen[v] = true;
  }
  return true;
}

}  // namespace

ValidationReport tree_validate(const PartitionTree& tree, const RasterImage* image) {
  ValidationReport report;
  const std::size_t n = tree.leaf_idx().size();
  if (n == 0) {
    report.violations.push_back({"node count", "tree has no leaves"});
    return report;
  }
  const auto internal = n - 1;
  if (tree.left_branch().size() != internal || tree.right_branch().size() != internal ||
      tree.start().size() != internal || tree.end().size() != internal ||
      tree.pixels().size() != n) {
    report.violations.push_back(
        {"node count", "array sizes do not describe 2n-1 nodes for n = " + std::to_string(n)});
    return report;
  }
  if (image && image->num_pixels() != n) {
    report.violations.push_back({"node count", "tree has " + std::to_string(n) +
                                                   " leaves but the image has " +
                                                   std::to_string(image->num_pixels()) +
                                                   " pixels"});
    return report;
  }

  bool coverage = check_permutation(tree.leaf_idx(), n, "leaf_idx", report);
  coverage = check_permutation(tree.pixels(), n, "pixels", report) && coverage;

  // Topology: every node but the root has exactly one parent, and the root
  // reaches everything.
  const std::size_t total = 2 * n - 1;
  const NodeId root = static_cast<NodeId>(total - 1);
  std::vector<std::uint32_t> parents(total, 0);
  bool structure = true;
  for (std::size_t k = 0; k < internal; ++k) {
    const NodeId id = static_cast<NodeId>(n + k);
    for (NodeId c : {tree.left_branch()[k], tree.right_branch()[k]}) {
      if (c >= total || c == id) {
        report.violations.push_back(
            {"structure",
             "node " + std::to_string(id) + " has invalid child " + std::to_string(c)});
        structure = false;
      } else {
        ++parents[c];
      }
    }
  }
  if (structure) {
    for (std::size_t id = 0; id < total; ++id) {
      const std::uint32_t want = id == root ? 0 : 1;
      if (parents[id] != want) {
        report.violations.push_back({"structure", "node " + std::to_string(id) + " has " +
                                                      std::to_string(parents[id]) + " parents"});
        structure = false;
      }
    }
  }
  if (structure) {
    std::vector<NodeId> stack{root};
    std::size_t reached = 0;
    while (!stack.empty() && reached <= total) {
      NodeId id = stack.back();
      stack.pop_back();
      ++reached;
      if (id >= n) {
        stack.push_back(tree.left_branch()[id - n]);
        stack.push_back(tree.right_branch()[id - n]);
      }
    }
    if (reached != total) {
      report.violations.push_back({"structure", "root does not reach all nodes exactly once"});
      structure = false;
    }
  }
  if (!structure || !coverage) return report;

  // Intervals: leaves sit at the position of their pixel, internal nodes own
  // [start, end) which must be the two child intervals back to back.
  std::vector<std::uint32_t> pos(n);
  for (std::size_t k = 0; k < n; ++k) pos[tree.pixels()[k]] = static_cast<std::uint32_t>(k);
  auto interval = [&](NodeId id) -> std::pair<std::uint32_t, std::uint32_t> {
    if (id < n) {
      const auto p = pos[tree.leaf_idx()[id]];
      return {p, p + 1};
    }
    return {tree.start()[id - n], tree.end()[id - n]};
  };
  bool intervals = true;
  for (std::size_t k = 0; k < internal; ++k) {
    const NodeId id = static_cast<NodeId>(n + k);
    auto [s, e] = interval(id);
    auto [ls, le] = interval(tree.left_branch()[k]);
    auto [rs, re] = interval(tree.right_branch()[k]);
    const bool contiguous = (ls == s && le == rs && re == e) || (rs == s && re == ls && le == e);
    if (s > e || e > n || !contiguous) {
      report.violations.push_back(
          {"interval", "node " + std::to_string(id) + " interval [" + std::to_string(s) + "," +
                           std::to_string(e) + ") is not the union of its children"});
      intervals = false;
    }
  }
  if (!intervals) return report;

  if (image && tree.kind() == HierarchyKind::kBpt) {
    const std::uint32_t w = image->width(), h = image->height();
    std::vector<std::uint32_t> stamp(n, 0);
    for (std::size_t k = 0; k < internal; ++k) {
      const NodeId id = static_cast<NodeId>(n + k);
      const std::uint32_t mark = static_cast<std::uint32_t>(k + 1);
      for (auto p : tree.region(tree.left_branch()[k])) stamp[p] = mark;
      bool touching = false;
      for (auto p : tree.region(tree.right_branch()[k])) {
        const std::uint32_t x = p % w, y = p / w;
        if ((x > 0 && stamp[p - 1] == mark) || (x + 1 < w && stamp[p + 1] == mark) ||
            (y > 0 && stamp[p - w] == mark) || (y + 1 < h && stamp[p + w] == mark)) {
          touching = true;
          break;
        }
      }
      if (!touching) {
        report.violations.push_back(
            {"adjacency", "children of node " + std::to_string(id) + " are not 4-adjacent"});
      }
    }
  }
  return report;
}

std::vector<std::uint32_t> region_pixels(const PartitionTree& tree, NodeId node) {
  auto r = tree.region(node);
  std::vector<std::uint32_t> out(r.begin(), r.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t boundary_length(std::uint32_t width, std::uint32_t height,
                             const std::vector<bool>& members) {
  std::int64_t edges = 0;
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::size_t p = std::size_t{y} * width + x;
      if (!members[p]) continue;
      edges += (x == 0 || !members[p - 1]);
      edges += (x + 1 == width || !members[p + 1]);
      edges += (y == 0 || !members[p - width]);
      edges += (y + 1 == height || !members[p + width]);
    }
  }
  return edges;
}

CoalitionStructure to_coalition_structure(const PartitionTree& tree) {
  const std::size_t total = tree.num_nodes();
  if (total == 0) throw StructuralError("empty partition tree");
  CoalitionStructure hcs;
  std::vector<CoalitionStructure::NodeId> mapped(total);
  // Post-order walk so that children are added before their parent.
  std::vector<std::pair<NodeId, bool>> stack{{tree.root(), false}};
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    if (tree.is_leaf(id)) {
      mapped[id] = hcs.add_leaf({tree.leaf_idx()[id]});
      continue;
    }
    if (done) {
      mapped[id] = hcs.add_internal({mapped[tree.left(id)], mapped[tree.right(id)]});
      continue;
    }
    stack.emplace_back(id, true);
    stack.emplace_back(tree.right(id), false);
    stack.emplace_back(tree.left(id), false);
  }
  hcs.set_root(mapped[tree.root()]);
  return hcs;
}

// ---------------------------------------------------------------------------
// BPT1 files

namespace {
constexpr char kTreeMagic[4] = {'B', 'P', 'T', '1'};
}

void write_tree(const PartitionTree& tree, std::ostream& out) {
  std::vector<std::uint8_t> buf(kTreeMagic, kTreeMagic + 4);
  buf.reserve(9 + 4 * tree.storage_integers());
  buf.push_back(static_cast<std::uint8_t>(tree.kind()));
  detail::put_u32(buf, static_cast<std::uint32_t>(tree.num_leaves()));
  for (const auto* arr : {&tree.leaf_idx(), &tree.left_branch(), &tree.right_branch(),
                          &tree.start(), &tree.end(), &tree.pixels()}) {
    for (auto v : *arr) detail::put_u32(buf, v);
  }
  detail::write_bytes(out, buf);
}

PartitionTree read_tree(std::istream& in) {
  auto head = detail::read_bytes(in, 9);
  if (!std::equal(kTreeMagic, kTreeMagic + 4, head.begin())) throw FormatError("not a BPT1 file");
  if (head[4] > 1) throw FormatError("unknown hierarchy kind byte");
  const auto kind = static_cast<HierarchyKind>(head[4]);
  const std::uint32_t n = detail::get_u32(head.data() + 5);
  if (n == 0 || n > PartitionTree::kMaxPixels) throw FormatError("leaf count out of range");
  auto read_array = [&](std::size_t count) {
    auto raw = detail::read_bytes(in, 4 * count);
    std::vector<std::uint32_t> v(count);
    for (std::size_t k = 0; k < count; ++k) v[k] = detail::get_u32(raw.data() + 4 * k);
    return v;
  };
  auto leaf_idx = read_array(n);
  auto left = read_array(n - 1);
  auto right = read_array(n - 1);
  auto start = read_array(n - 1);
  auto end = read_array(n - 1);
  auto pixels = read_array(n);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after tree");
  return PartitionTree::from_arrays(kind, std::move(leaf_idx), std::move(left), std::move(right),
                                    std::move(start), std::move(end), std::move(pixels));
}

void save_tree(const PartitionTree& tree, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_tree(tree, out);
}

PartitionTree load_tree(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_tree(in);
}

}  // namespace shapbpt
