#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "shapbpt/errors.hpp"
#include "shapbpt/hierarchy.hpp"
#include "support.hpp"

using namespace shapbpt;
using support::Rng;
using NodeId = PartitionTree::NodeId;

namespace {

RasterImage gray_row(std::vector<std::uint8_t> values) {
  const auto w = static_cast<std::uint32_t>(values.size());
  return RasterImage(w, 1, 1, std::move(values));
}

RegionStats pixel_stats(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RasterImage img(1, 1, 3, std::vector<std::uint8_t>{r, g, b});
  return RegionStats::of_pixel(img, 0);
}

// True when some pixel of `a` and some pixel of `b` are 4-neighbours.
bool touching(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
              std::uint32_t w) {
  std::set<std::uint32_t> sb(b.begin(), b.end());
  for (auto p : a) {
    const std::uint32_t x = p % w;
    if (x > 0 && sb.count(p - 1)) return true;
    if (x + 1 < w && sb.count(p + 1)) return true;
    if (p >= w && sb.count(p - w)) return true;
    if (sb.count(p + w)) return true;
  }
  return false;
}

std::string tree_bytes(const PartitionTree& tree) {
  std::ostringstream out;
  write_tree(tree, out);
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// region_distance

TEST(RegionDistance, IdenticalGrayPixelsAreAtZero) {
  auto a = pixel_stats(128, 128, 128);
  EXPECT_EQ(region_distance(a, a, 1), 0.0);
}

TEST(RegionDistance, BlackWhitePair) {
  auto black = pixel_stats(0, 0, 0);
  auto white = pixel_stats(255, 255, 255);
  // clr^2 = 3 * 255^2, area = 2, perimeter = 4 + 4 - 2 = 6.
  const double expected = 3.0 * 65025.0 * 2.0 * std::sqrt(6.0);
  EXPECT_DOUBLE_EQ(region_distance(black, white, 1), expected);
  EXPECT_NEAR(region_distance(black, white, 1), 955668.4231468568, 1e-6);
}

TEST(RegionDistance, Variants) {
  auto a = pixel_stats(10, 20, 30);
  auto b = pixel_stats(40, 20, 0);
  const double clr2 = 30.0 * 30 + 0 + 30.0 * 30;
  EXPECT_DOUBLE_EQ(region_distance(a, b, 1, DistanceVariant::kNoColor), 2.0 * std::sqrt(6.0));
  EXPECT_DOUBLE_EQ(region_distance(a, b, 1, DistanceVariant::kNoPerimeter), clr2 * 2.0);
  EXPECT_DOUBLE_EQ(region_distance(a, b, 1), clr2 * 2.0 * std::sqrt(6.0));
}

TEST(RegionDistance, UsesMergedRangeNotChildRanges) {
  RegionStats a = pixel_stats(100, 0, 0);
  a.max[0] = 110;
  RegionStats b = pixel_stats(105, 0, 0);
  b.max[0] = 130;
  // Merged red range is 130 - 100 = 30.
  EXPECT_DOUBLE_EQ(region_distance(a, b, 1, DistanceVariant::kNoPerimeter), 900.0 * 2);
}

TEST(RegionDistance, NonAdjacentIsRejected) {
  auto a = pixel_stats(0, 0, 0);
  EXPECT_THROW(region_distance(a, a, 0), StructuralError);
}

// ---------------------------------------------------------------------------
// build_bpt

TEST(BuildBpt, TwoIdenticalPixels) {
  auto tree = build_bpt(gray_row({9, 9}));
  EXPECT_EQ(tree.num_nodes(), 3u);
  EXPECT_EQ(tree.root(), 2u);
  EXPECT_EQ(tree.left(2), 0u);
  EXPECT_EQ(tree.right(2), 1u);
}

TEST(BuildBpt, BlackBlackWhiteWhiteSplitsByColor) {
  auto image = gray_row({0, 0, 255, 255});
  auto tree = build_bpt(image);
  const auto root = tree.root();
  std::set<std::vector<std::uint32_t>> halves{region_pixels(tree, tree.left(root)),
                                              region_pixels(tree, tree.right(root))};
  EXPECT_EQ(halves, (std::set<std::vector<std::uint32_t>>{{0, 1}, {2, 3}}));
  // The two zero-distance pairs are the first two merges.
  EXPECT_EQ(region_pixels(tree, 4), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(region_pixels(tree, 5), (std::vector<std::uint32_t>{2, 3}));
  EXPECT_TRUE(tree_validate(tree, &image).ok());
}

TEST(BuildBpt, UniformTwoByTwo) {
  RasterImage image(2, 2, 3, 77);
  auto tree = build_bpt(image);
  EXPECT_EQ(tree.num_nodes(), 7u);
  EXPECT_TRUE(tree_validate(tree, &image).ok());
}

TEST(BuildBpt, SinglePixel) {
  RasterImage image(1, 1, 1, 5);
  auto tree = build_bpt(image);
  EXPECT_EQ(tree.num_nodes(), 1u);
  EXPECT_EQ(tree.root(), 0u);
  EXPECT_EQ(region_pixels(tree, 0), (std::vector<std::uint32_t>{0}));
}

TEST(BuildBpt, GrayMatchesReplicatedRgb) {
  Rng rng(5);
  auto gray = support::random_image(6, 5, 1, rng, 4);
  RasterImage rgb(6, 5, 3);
  for (std::size_t p = 0; p < gray.num_pixels(); ++p) {
    for (std::uint32_t c = 0; c < 3; ++c) rgb.at(p, c) = gray.at(p, 0);
  }
  EXPECT_EQ(build_bpt(gray), build_bpt(rgb));
}

TEST(BuildBpt, StructuralPropertiesOnRandomImages) {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto w = static_cast<std::uint32_t>(support::pick(rng, 1, 12));
    const auto h = static_cast<std::uint32_t>(support::pick(rng, 1, 12));
    const auto ch = support::pick(rng, 0, 1) ? 3u : 1u;
    auto image = support::random_image(w, h, ch, rng, trial % 2 ? 3 : 256);
    std::vector<RegionStats> stats;
    auto tree = build_bpt(image, {}, &stats);
    const std::size_t n = image.num_pixels();
    ASSERT_EQ(tree.num_nodes(), 2 * n - 1);
    EXPECT_TRUE(tree_validate(tree, &image).ok());
    EXPECT_LE(tree.storage_integers(), 6 * n);

    for (NodeId id = 0; id < tree.num_nodes(); ++id) {
      const auto pixels = region_pixels(tree, id);
      std::vector<bool> members(n, false);
      for (auto p : pixels) members[p] = true;
      // Tracked perimeter equals a direct recount of the region boundary.
      EXPECT_EQ(stats[id].perimeter, boundary_length(w, h, members));
      EXPECT_EQ(stats[id].area, pixels.size());
      if (tree.is_leaf(id)) continue;
      const auto& l = stats[tree.left(id)];
      const auto& r = stats[tree.right(id)];
      EXPECT_EQ(stats[id].area, l.area + r.area);
      for (int c = 0; c < 3; ++c) {
        EXPECT_LE(stats[id].min[c], std::min(l.min[c], r.min[c]));
        EXPECT_GE(stats[id].max[c], std::max(l.max[c], r.max[c]));
      }
      EXPECT_TRUE(touching(region_pixels(tree, tree.left(id)),
                           region_pixels(tree, tree.right(id)), w));
    }
  }
}

TEST(BuildBpt, MergeDistancesFollowHeapOrderWhenNoneAreStale) {
  // On a row, every region has at most two neighbours and the distance of a
  // fresh pair can only grow, so merges come out in nondecreasing order.
  Rng rng(9);
  auto image = support::random_image(24, 1, 1, rng);
  std::vector<RegionStats> stats;
  auto tree = build_bpt(image, {}, &stats);
  const std::size_t n = image.num_pixels();
  double last = -1.0;
  for (NodeId k = static_cast<NodeId>(n); k < tree.num_nodes(); ++k) {
    // Two intervals on a row share exactly one edge.
    const double d = region_distance(stats[tree.left(k)], stats[tree.right(k)], 1);
    EXPECT_GE(d, last);
    last = d;
  }
}

TEST(BuildBpt, VariantsProduceValidTrees) {
  Rng rng(10);
  auto image = support::random_image(9, 7, 3, rng, 5);
  for (auto v : {DistanceVariant::kNoColor, DistanceVariant::kNoPerimeter}) {
    BptOptions o;
    o.distance = v;
    auto tree = build_bpt(image, o);
    EXPECT_TRUE(tree_validate(tree, &image).ok()) << to_string(v);
    EXPECT_EQ(tree.note(), "distance=" + to_string(v));
  }
}

TEST(BuildBpt, LiteralPerimeterRuleOverestimates) {
  Rng rng(11);
  auto image = support::random_image(6, 6, 3, rng, 3);
  BptOptions o;
  o.perimeter = PerimeterRule::kPseudocodeLiteral;
  std::vector<RegionStats> stats;
  auto tree = build_bpt(image, o, &stats);
  EXPECT_TRUE(tree_validate(tree, &image).ok());
  // Perimeters simply add up: the root carries 4 per pixel.
  EXPECT_EQ(stats[tree.root()].perimeter, 4 * 36);
}

TEST(BuildBpt, DeterministicBytes) {
  Rng rng(12);
  auto image = support::random_image(16, 16, 3, rng, 4);
  EXPECT_EQ(tree_bytes(build_bpt(image)), tree_bytes(build_bpt(image)));
}

// ---------------------------------------------------------------------------
// build_aa

TEST(BuildAa, OneByTwo) {
  auto tree = build_aa(2, 1);
  EXPECT_EQ(tree.left(2), 0u);
  EXPECT_EQ(tree.right(2), 1u);
}

TEST(BuildAa, WideRectangleSplitsAlongWidth) {
  auto tree = build_aa(4, 2);
  const auto root = tree.root();
  EXPECT_EQ(region_pixels(tree, tree.left(root)), (std::vector<std::uint32_t>{0, 1, 4, 5}));
  EXPECT_EQ(region_pixels(tree, tree.right(root)), (std::vector<std::uint32_t>{2, 3, 6, 7}));
}

TEST(BuildAa, OddLengthGivesTheFirstHalfTheExtraPixel) {
  auto tree = build_aa(3, 1);
  const auto root = tree.root();
  EXPECT_EQ(region_pixels(tree, tree.left(root)), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(region_pixels(tree, tree.right(root)), (std::vector<std::uint32_t>{2}));
}

TEST(BuildAa, SquaresSplitTopBottom) {
  auto tree = build_aa(2, 2);
  const auto root = tree.root();
  EXPECT_EQ(region_pixels(tree, tree.left(root)), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(region_pixels(tree, tree.right(root)), (std::vector<std::uint32_t>{2, 3}));
  EXPECT_NE(tree.note().find("square=top-bottom"), std::string::npos);
}

TEST(BuildAa, RegionsAreRectanglesHalvedAlongTheLongerSide) {
  for (auto [w, h] : {std::pair{7u, 5u}, {1u, 9u}, {8u, 8u}, {13u, 2u}}) {
    auto tree = build_aa(w, h);
    EXPECT_TRUE(tree_validate(tree).ok());
    for (NodeId id = static_cast<NodeId>(w * h); id < tree.num_nodes(); ++id) {
      auto bbox = [&](NodeId node) {
        std::uint32_t x0 = w, y0 = h, x1 = 0, y1 = 0;
        auto px = region_pixels(tree, node);
        for (auto p : px) {
          x0 = std::min(x0, p % w), x1 = std::max(x1, p % w);
          y0 = std::min(y0, p / w), y1 = std::max(y1, p / w);
        }
        const std::uint32_t bw = x1 - x0 + 1, bh = y1 - y0 + 1;
        EXPECT_EQ(px.size(), std::size_t{bw} * bh);
        return std::pair{bw, bh};
      };
      auto [pw, ph] = bbox(id);
      auto [lw, lh] = bbox(tree.left(id));
      auto [rw, rh] = bbox(tree.right(id));
      if (pw > ph) {
        EXPECT_EQ(lh, ph);
        EXPECT_EQ(lw, (pw + 1) / 2);
        EXPECT_EQ(rw, pw / 2);
      } else {
        EXPECT_EQ(lw, pw);
        EXPECT_EQ(lh, (ph + 1) / 2);
        EXPECT_EQ(rh, ph / 2);
      }
    }
  }
}

TEST(BuildAa, IgnoresPixelData) {
  EXPECT_EQ(tree_bytes(build_aa(11, 6)), tree_bytes(build_aa(11, 6)));
}

// ---------------------------------------------------------------------------
// tree_validate

TEST(TreeValidate, RepeatedLeafInPixelsIsLeafCoverage) {
  auto good = build_aa(2, 2);
  auto pixels = good.pixels();
  pixels[1] = pixels[0];
  auto bad = PartitionTree::from_arrays(good.kind(), good.leaf_idx(), good.left_branch(),
                                        good.right_branch(), good.start(), good.end(), pixels);
  EXPECT_TRUE(tree_validate(bad).has("leaf coverage"));
}

TEST(TreeValidate, WrongNodeCount) {
  auto good = build_aa(2, 2);
  auto left = good.left_branch();
  left.pop_back();
  auto bad = PartitionTree::from_arrays(good.kind(), good.leaf_idx(), left, good.right_branch(),
                                        good.start(), good.end(), good.pixels());
  EXPECT_FALSE(tree_validate(bad).ok());
}

TEST(TreeValidate, BrokenIntervalIsReported) {
  auto good = build_aa(4, 1);
  auto start = good.start();
  start.back() += 1;  // root no longer covers its first child
  auto bad = PartitionTree::from_arrays(good.kind(), good.leaf_idx(), good.left_branch(),
                                        good.right_branch(), start, good.end(), good.pixels());
  EXPECT_TRUE(tree_validate(bad).has("interval"));
}

TEST(TreeValidate, NonAdjacentSiblingsInHandBuiltTree) {
  auto image = gray_row({0, 0, 0});
  auto bad = tree_from_merges(HierarchyKind::kBpt, 3, {{0, 2}, {3, 1}});
  EXPECT_TRUE(tree_validate(bad, &image).has("adjacency"));
  EXPECT_TRUE(tree_validate(bad).ok());  // no image, no adjacency check
}

TEST(TreeValidate, MutatedBptAgreesWithBruteForceAdjacency) {
  Rng rng(13);
  int flagged = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto image = support::random_image(5, 5, 3, rng, 3);
    auto tree = build_bpt(image);
    const std::size_t n = image.num_pixels();
    auto left = tree.left_branch();
    auto right = tree.right_branch();
    // Swap two leaf children that hang under different internal nodes.
    std::vector<std::pair<std::size_t, bool>> leaf_slots;
    for (std::size_t k = 0; k < left.size(); ++k) {
      if (left[k] < n) leaf_slots.emplace_back(k, true);
      if (right[k] < n) leaf_slots.emplace_back(k, false);
    }
    auto [ka, sa] = leaf_slots[support::pick(rng, 0, leaf_slots.size() - 1)];
    auto [kb, sb] = leaf_slots[support::pick(rng, 0, leaf_slots.size() - 1)];
    if (ka == kb) continue;
    std::swap(sa ? left[ka] : right[ka], sb ? left[kb] : right[kb]);
    auto mutated = PartitionTree::from_children(HierarchyKind::kBpt, tree.leaf_idx(), left, right);

    bool expect_bad = false;
    for (NodeId id = static_cast<NodeId>(n); id < mutated.num_nodes(); ++id) {
      if (!touching(region_pixels(mutated, mutated.left(id)),
                    region_pixels(mutated, mutated.right(id)), 5)) {
        expect_bad = true;
      }
    }
    const auto report = tree_validate(mutated, &image);
    EXPECT_EQ(report.has("adjacency"), expect_bad);
    EXPECT_FALSE(report.has("leaf coverage"));
    flagged += expect_bad;
  }
  EXPECT_GT(flagged, 0);
}

TEST(TreeValidate, PixelCountMismatchWithImage) {
  auto tree = build_aa(3, 3);
  RasterImage other(2, 2, 1);
  EXPECT_FALSE(tree_validate(tree, &other).ok());
}

// ---------------------------------------------------------------------------
// region_pixels and the file format

TEST(RegionPixels, LeafRootAndBounds) {
  auto tree = build_bpt(gray_row({0, 0, 255, 255}));
  EXPECT_EQ(region_pixels(tree, 2), (std::vector<std::uint32_t>{2}));
  EXPECT_EQ(region_pixels(tree, tree.root()), (std::vector<std::uint32_t>{0, 1, 2, 3}));
  EXPECT_THROW(region_pixels(tree, 7), BoundsError);
}

TEST(BoundaryLength, SmallShapes) {
  EXPECT_EQ(boundary_length(3, 3, {false, false, false, false, true, false, false, false, false}),
            4);
  EXPECT_EQ(boundary_length(2, 1, {true, true}), 6);
  EXPECT_EQ(boundary_length(2, 2, {true, false, false, true}), 8);
}

TEST(TreeFile, RoundTripIsBitExact) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = static_cast<std::uint32_t>(support::pick(rng, 1, 9));
    const auto h = static_cast<std::uint32_t>(support::pick(rng, 1, 9));
    auto image = support::random_image(w, h, 3, rng, 4);
    for (const auto& tree : {build_bpt(image), build_aa(w, h)}) {
      const auto bytes = tree_bytes(tree);
      std::istringstream in(bytes);
      auto back = read_tree(in);
      EXPECT_EQ(back, tree);
      EXPECT_EQ(tree_bytes(back), bytes);
      const std::size_t n = image.num_pixels();
      EXPECT_EQ(bytes.size(), 4 + 1 + 4 + 4 * (6 * n - 4));
    }
  }
}

TEST(TreeFile, RejectsCorruptInput) {
  const auto bytes = tree_bytes(build_aa(3, 2));
  std::istringstream bad_magic("XPT1" + bytes.substr(4));
  EXPECT_THROW(read_tree(bad_magic), FormatError);
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_tree(truncated), FormatError);
  std::istringstream trailing(bytes + "x");
  EXPECT_THROW(read_tree(trailing), FormatError);
}

TEST(CoalitionStructureOfTree, MirrorsTopology) {
  auto tree = build_aa(3, 1);
  auto hcs = to_coalition_structure(tree);
  hcs.validate();
  EXPECT_EQ(hcs.node(hcs.root()).players, (std::vector<Player>{0, 1, 2}));
  EXPECT_EQ(hcs.height(), 2u);
}
