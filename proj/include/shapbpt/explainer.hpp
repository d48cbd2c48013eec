#pragma once

// Budgeted Owen values over a binary partition tree.
//
// Starting from the root with context Q = {} the explainer keeps a priority
// queue of pending expansions <w, Q, T>. Splitting T = {T1, T2} costs two
// evaluations, nu(Q + T1) and nu(Q + T2), and replaces the entry with four
// half-weight entries:
//
//   <w/2, Q, T1>  <w/2, Q + T2, T1>  <w/2, Q, T2>  <w/2, Q + T1, T2>
//
// An entry that is not split hands w * (nu(Q + T) - nu(Q)) to its region,
// split evenly among the pixels. With unlimited budget this equals the Owen
// value of every pixel under the tree.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapbpt/coalition.hpp"
#include "shapbpt/game.hpp"
#include "shapbpt/hierarchy.hpp"

namespace shapbpt {

enum class PriorityMode {
  kWeightedGap,  // |w * (v_QT - v_Q)|
  kWeightOnly,   // w
  kSignedGap,    // w * (v_QT - v_Q)
};

std::string to_string(PriorityMode mode);
PriorityMode parse_priority_mode(const std::string& text);

struct BudgetPolicy {
  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

  std::uint64_t budget = 100;  // nu evaluations available for splits
  PriorityMode priority = PriorityMode::kWeightedGap;
  std::size_t explained_class = 0;  // class whose worths drive the priority
  std::optional<unsigned> max_depth;  // never split entries at this depth or deeper
};

struct QueueEntry {
  double weight = 1.0;  // always a power of two, so exact in binary
  unsigned depth = 0;   // depth of `node` in the tree
  Coalition context;    // Q, disjoint from the region of `node`
  PartitionTree::NodeId node = 0;
  Worth v_context;       // nu(Q)
  Worth v_with_node;     // nu(Q + T)
  std::uint64_t seq = 0; // insertion order, breaks priority ties
};

double priority_key(const QueueEntry& entry, PriorityMode mode, std::size_t cls);

// The four entries produced by splitting `entry`, given the two fresh worths
// nu(Q + T1) and nu(Q + T2). Sequence numbers are left at zero. Throws
// StructuralError when the node is a leaf.
std::array<QueueEntry, 4> split_entry(const PartitionTree& tree, const QueueEntry& entry,
                                      const Worth& v_with_left, const Worth& v_with_right);

class SaliencyMap {
 public:
  SaliencyMap() = default;
  SaliencyMap(std::uint32_t width, std::uint32_t height, std::size_t classes);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t num_pixels() const { return std::size_t{width_} * height_; }
  std::size_t num_classes() const { return classes_; }

  // Reinterprets the pixel count as a width x height raster.
  void set_shape(std::uint32_t width, std::uint32_t height);

  double& at(std::size_t cls, std::size_t pixel) { return values_[cls * num_pixels() + pixel]; }
  double at(std::size_t cls, std::size_t pixel) const {
    return values_[cls * num_pixels() + pixel];
  }
  std::span<const double> class_values(std::size_t cls) const {
    return {values_.data() + cls * num_pixels(), num_pixels()};
  }
  std::span<double> class_values(std::size_t cls) {
    return {values_.data() + cls * num_pixels(), num_pixels()};
  }

  // Sum of attributions minus (nu(N) - nu(empty)) for a class.
  double conservation_residual(std::size_t cls) const;

  // Provenance.
  std::uint64_t budget_requested = 0;
  std::uint64_t budget_spent = 0;           // split evaluations, charged to the budget
  std::uint64_t bootstrap_evaluations = 0;  // nu(empty) and nu(N), not charged
  HierarchyKind hierarchy = HierarchyKind::kBpt;
  PriorityMode priority = PriorityMode::kWeightedGap;
  std::size_t explained_class = 0;
  std::string evaluator;
  Worth v_empty;
  Worth v_full;

  bool operator==(const SaliencyMap&) const = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> values_;
};

// Raised when the game fails mid-run. Carries everything distributed so far
// and the coalition that could not be evaluated.
class PartialResultError : public std::runtime_error {
 public:
  PartialResultError(const std::string& what, SaliencyMap partial, Coalition failing)
      : std::runtime_error(what), partial_(std::move(partial)), failing_(std::move(failing)) {}

  const SaliencyMap& partial() const { return partial_; }
  const Coalition& failing() const { return failing_; }

 private:
  SaliencyMap partial_;
  Coalition failing_;
};

// Hooks into the expansion loop, for tests and tracing.
class ExpansionObserver {
 public:
  virtual ~ExpansionObserver() = default;
  virtual void on_push(const QueueEntry& entry) { (void)entry; }
  // `split` tells whether the popped entry is expanded or finalized.
  virtual void on_pop(const QueueEntry& entry, bool split) { (void)entry, (void)split; }
};

// Owen values of every pixel for every class. The resulting map is shaped
// n x 1; callers that know the image use set_shape.
SaliencyMap owen_values(CharacteristicGame& game, const PartitionTree& tree,
                        const BudgetPolicy& policy, ExpansionObserver* observer = nullptr);

// Split evaluations spent when every node above depth d of a tree that is
// complete down to depth d is expanded. Throws StructuralError when some node
// above depth d is a leaf.
std::uint64_t full_expansion_eval_count(const PartitionTree& tree, unsigned depth);

// "SMP1" files: magic, u32 width, height, classes, then f32 values class by
// class in row-major order, then a UTF-8 JSON metadata trailer.
void write_saliency(const SaliencyMap& map, std::ostream& out);
SaliencyMap read_saliency(std::istream& in);
void save_saliency(const SaliencyMap& map, const std::string& path);
SaliencyMap load_saliency(const std::string& path);

}  // namespace shapbpt
