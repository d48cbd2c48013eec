#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shapbpt/image.hpp"
#include "shapbpt/oracle.hpp"

namespace shapbpt {

enum class HierarchyKind : std::uint8_t { kBpt = 0, kAa = 1 };

// Which factors of the merge distance are active.
enum class DistanceVariant { kDefault, kNoPerimeter, kNoColor };

// How the perimeter of a merged region is tracked. kGeometric subtracts the
// shared boundary twice (the true perimeter); kPseudocodeLiteral adds the two
// perimeters unchanged, which overestimates it. The distance itself always
// subtracts the shared boundary.
enum class PerimeterRule { kGeometric, kPseudocodeLiteral };

std::string to_string(HierarchyKind kind);
std::string to_string(DistanceVariant variant);
HierarchyKind parse_hierarchy_kind(const std::string& text);
DistanceVariant parse_distance_variant(const std::string& text);

struct RegionStats {
  std::uint8_t min[3] = {255, 255, 255};
  std::uint8_t max[3] = {0, 0, 0};
  std::uint32_t area = 0;
  std::int64_t perimeter = 0;  // in unit pixel edges, 4-connectivity
  std::uint32_t root = 0;      // current representative region id

  static RegionStats of_pixel(const RasterImage& image, std::size_t pixel);
};

// Merge distance of two adjacent regions: squared color range of the union
// summed over channels, times the union area, times the square root of the
// union perimeter. Throws StructuralError when shared_boundary is zero.
double region_distance(const RegionStats& a, const RegionStats& b,
                       std::uint32_t shared_boundary,
                       DistanceVariant variant = DistanceVariant::kDefault);

// Binary hierarchy over n pixels stored as six flat arrays.
//
// Node ids 0..n-1 are the leaves (leaf i holds pixel leaf_idx[i]); ids
// n..2n-2 are the internal nodes, each with exactly two children, and the
// root is 2n-2 (or 0 when n == 1). Internal node k owns the half-open range
// [start, end) of `pixels`, which is the concatenation of its children's
// ranges.
class PartitionTree {
 public:
  using NodeId = std::uint32_t;
  static constexpr std::size_t kMaxPixels = std::size_t{1} << 24;

  PartitionTree() = default;

  // Lays out start/end/pixels from the topology. `left` and `right` are
  // indexed by internal node (k - n).
  static PartitionTree from_children(HierarchyKind kind, std::vector<std::uint32_t> leaf_idx,
                                     std::vector<NodeId> left, std::vector<NodeId> right);

  // Adopts all six arrays as given, without checking them. Use
  // tree_validate to inspect the result.
  static PartitionTree from_arrays(HierarchyKind kind, std::vector<std::uint32_t> leaf_idx,
                                   std::vector<NodeId> left, std::vector<NodeId> right,
                                   std::vector<std::uint32_t> start,
                                   std::vector<std::uint32_t> end,
                                   std::vector<std::uint32_t> pixels);

  HierarchyKind kind() const { return kind_; }
  std::size_t num_leaves() const { return leaf_idx_.size(); }
  std::size_t num_nodes() const { return leaf_idx_.empty() ? 0 : 2 * leaf_idx_.size() - 1; }
  NodeId root() const { return static_cast<NodeId>(num_nodes() - 1); }

  bool is_leaf(NodeId id) const { return id < leaf_idx_.size(); }
  NodeId left(NodeId id) const { return left_.at(internal_index(id)); }
  NodeId right(NodeId id) const { return right_.at(internal_index(id)); }

  // Pixels of a node, in layout order (not sorted).
  std::span<const std::uint32_t> region(NodeId id) const;
  std::size_t region_size(NodeId id) const;

  const std::vector<std::uint32_t>& leaf_idx() const { return leaf_idx_; }
  const std::vector<NodeId>& left_branch() const { return left_; }
  const std::vector<NodeId>& right_branch() const { return right_; }
  const std::vector<std::uint32_t>& start() const { return start_; }
  const std::vector<std::uint32_t>& end() const { return end_; }
  const std::vector<std::uint32_t>& pixels() const { return pixels_; }

  // Free-form provenance, e.g. the AA tie rule or the BPT distance variant.
  // Not part of the file format.
  const std::string& note() const { return note_; }
  void set_note(std::string note) { note_ = std::move(note); }

  // Depth of every node (root = 0).
  std::vector<std::uint32_t> depths() const;

  // Total integers held by the six arrays.
  std::size_t storage_integers() const;

  bool operator==(const PartitionTree& o) const {
    return kind_ == o.kind_ && leaf_idx_ == o.leaf_idx_ && left_ == o.left_ &&
           right_ == o.right_ && start_ == o.start_ && end_ == o.end_ && pixels_ == o.pixels_;
  }

 private:
  std::size_t internal_index(NodeId id) const;

  HierarchyKind kind_ = HierarchyKind::kBpt;
  std::vector<std::uint32_t> leaf_idx_;
  std::vector<NodeId> left_;
  std::vector<NodeId> right_;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> end_;
  std::vector<std::uint32_t> pixels_;
  std::string note_;
};

struct BptOptions {
  DistanceVariant distance = DistanceVariant::kDefault;
  PerimeterRule perimeter = PerimeterRule::kGeometric;
};

// Greedy bottom-up merging of 4-adjacent regions in increasing distance
// order. Equal distances are resolved by the smaller id in the pair, then
// the larger. When `stats` is given it receives the final statistics of all
// 2n-1 regions.
PartitionTree build_bpt(const RasterImage& image, const BptOptions& options = {},
                        std::vector<RegionStats>* stats = nullptr);

// Axis-aligned hierarchy: each rectangle is halved along its longer side
// (first half gets the extra row/column); squares split into top and bottom.
PartitionTree build_aa(std::uint32_t width, std::uint32_t height);

// Binary tree from an explicit merge sequence over n leaves (leaf i = pixel
// i). Merge t creates node n + t. Useful for synthetic hierarchies.
PartitionTree tree_from_merges(HierarchyKind kind, std::size_t n,
                               const std::vector<std::pair<PartitionTree::NodeId,
                                                           PartitionTree::NodeId>>& merges);

struct Violation {
  std::string category;  // "node count", "structure", "interval", "leaf coverage", "adjacency"
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(const std::string& category) const;
};

// Checks every layout invariant. With an image, BPT trees are also checked
// for 4-adjacency of sibling regions and for matching pixel count.
ValidationReport tree_validate(const PartitionTree& tree, const RasterImage* image = nullptr);

// Sorted pixel indices of a node. Throws BoundsError for an unknown node.
std::vector<std::uint32_t> region_pixels(const PartitionTree& tree, PartitionTree::NodeId node);

// Number of unit edges between the set and its complement (image border
// edges included), for a set given as a membership mask.
std::int64_t boundary_length(std::uint32_t width, std::uint32_t height,
                             const std::vector<bool>& members);

// The tree as a coalition structure whose leaves are single pixels.
CoalitionStructure to_coalition_structure(const PartitionTree& tree);

// "BPT1" binary format: magic, kind byte, u32 n, then leaf_idx, left_branch,
// right_branch, start, end, pixels as little-endian u32.
void write_tree(const PartitionTree& tree, std::ostream& out);
PartitionTree read_tree(std::istream& in);
void save_tree(const PartitionTree& tree, const std::string& path);
PartitionTree load_tree(const std::string& path);

}  // namespace shapbpt
