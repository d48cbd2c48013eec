#include "shapbpt/pipeline.hpp"

#include "shapbpt/errors.hpp"

namespace shapbpt {

PartitionTree build_hierarchy(const RasterImage& image, HierarchyKind kind,
                              DistanceVariant distance) {
  if (kind == HierarchyKind::kAa) return build_aa(image.width(), image.height());
  BptOptions options;
  options.distance = distance;
  return build_bpt(image, options);
}

ExplainedRun explain_and_score(CharacteristicGame& game, const RasterImage& image,
                               const PartitionTree& tree, const BudgetPolicy& policy,
                               const GroundTruth* truth, std::size_t grid) {
  if (tree.num_leaves() != image.num_pixels()) {
    throw StructuralError("tree does not match the image size");
  }
  ExplainedRun run;
  run.saliency = owen_values(game, tree, policy);
  run.saliency.set_shape(image.width(), image.height());
  if (grid == 0) grid = default_grid(image.num_pixels());
  run.report = score_report(run.saliency, game, truth, grid, policy.explained_class);
  return run;
}

ExplainedRun explain_ideal(const RasterImage& image, const GroundTruth& truth,
                           const PartitionTree& tree, std::uint64_t budget,
                           PriorityMode priority, std::size_t grid) {
  auto game = ideal_linear_game(truth, image.num_pixels());
  BudgetPolicy policy;
  policy.budget = budget;
  policy.priority = priority;
  return explain_and_score(game, image, tree, policy, &truth, grid);
}

}  // namespace shapbpt
