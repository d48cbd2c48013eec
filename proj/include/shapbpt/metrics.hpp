#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shapbpt/coalition.hpp"
#include "shapbpt/explainer.hpp"
#include "shapbpt/game.hpp"
#include "shapbpt/masking.hpp"

namespace shapbpt {

// Pixels by descending saliency; equal values keep ascending pixel order.
std::vector<std::uint32_t> rank_pixels(std::span<const double> saliency);

// |S^[k/grid]| = ceil(k * n / grid) for k = 0..grid.
std::vector<std::size_t> quantile_sizes(std::size_t n, std::size_t grid);

// min(n, 100).
std::size_t default_grid(std::size_t n);

struct Curve {
  std::vector<double> q;
  std::vector<double> value;
  bool operator==(const Curve&) const = default;
};

// Trapezoidal area of a curve sampled on increasing q.
double trapezoid(const Curve& curve);

struct AucResult {
  double auc_plus = 0.0;
  double auc_minus = 0.0;
  Curve insertion;  // rescaled nu(S^[q])
  Curve deletion;   // rescaled nu(N \ S^[q])
  double rescale_lo = 0.0;
  double rescale_hi = 0.0;
};

// Insertion/deletion areas on the grid q = 0, 1/grid, ..., 1. Both curves are
// rescaled jointly to [0, 1] by their common min and max before integrating.
AucResult auc_curves(std::span<const double> saliency, CharacteristicGame& game,
                     std::size_t grid, std::size_t cls = 0);
AucResult auc_curves(const SaliencyMap& saliency, CharacteristicGame& game, std::size_t grid,
                     std::size_t cls = 0);

// |A intersect B| / |A union B|. Throws PreconditionError when both are empty.
double iou(const Coalition& a, const Coalition& b);

struct IouResult {
  double au_iou = 0.0;
  double max_iou = 0.0;
  Curve curve;
};

// J(S^[q], G) on the grid, its trapezoidal area and its sampled maximum.
IouResult iou_curve(std::span<const double> saliency, const GroundTruth& truth, std::size_t grid);
IouResult iou_curve(const SaliencyMap& saliency, const GroundTruth& truth, std::size_t grid,
                    std::size_t cls = 0);

struct ScoreReport {
  std::size_t grid = 0;
  std::size_t cls = 0;
  double auc_plus = 0.0;
  double auc_minus = 0.0;
  std::optional<double> au_iou;
  std::optional<double> max_iou;
  double rescale_lo = 0.0;
  double rescale_hi = 0.0;
  Curve insertion;
  Curve deletion;
  std::optional<Curve> iou;

  bool operator==(const ScoreReport&) const = default;
};

ScoreReport score_report(const SaliencyMap& saliency, CharacteristicGame& game,
                         const GroundTruth* truth, std::size_t grid, std::size_t cls = 0);

nlohmann::json to_json(const ScoreReport& report);
ScoreReport report_from_json(const nlohmann::json& j);

// "q,value" header followed by one sample per line.
void write_curve_csv(const Curve& curve, std::ostream& out);

}  // namespace shapbpt
