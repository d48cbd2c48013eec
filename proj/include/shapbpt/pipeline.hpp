#pragma once

// End-to-end helpers shared by the command-line tool and the corpus runs.

#include <cstddef>
#include <cstdint>

#include "shapbpt/explainer.hpp"
#include "shapbpt/hierarchy.hpp"
#include "shapbpt/image.hpp"
#include "shapbpt/masking.hpp"
#include "shapbpt/metrics.hpp"

namespace shapbpt {

// BPT with the given distance, or the axis-aligned tree (which ignores the
// pixel data and the distance).
PartitionTree build_hierarchy(const RasterImage& image, HierarchyKind kind,
                              DistanceVariant distance = DistanceVariant::kDefault);

struct ExplainedRun {
  SaliencyMap saliency;
  ScoreReport report;
};

// Owen values under `policy`, shaped like the image, then scored against the
// same game. `grid` of zero means the default grid.
ExplainedRun explain_and_score(CharacteristicGame& game, const RasterImage& image,
                               const PartitionTree& tree, const BudgetPolicy& policy,
                               const GroundTruth* truth, std::size_t grid = 0);

// The ideal-linear run on an image with known G.
ExplainedRun explain_ideal(const RasterImage& image, const GroundTruth& truth,
                           const PartitionTree& tree, std::uint64_t budget,
                           PriorityMode priority = PriorityMode::kWeightedGap,
                           std::size_t grid = 0);

}  // namespace shapbpt
