#include "shapbpt/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "shapbpt/errors.hpp"

namespace shapbpt {

std::vector<std::uint32_t> rank_pixels(std::span<const double> saliency) {
  std::vector<std::uint32_t> order(saliency.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return saliency[a] > saliency[b]; });
  return order;
}

std::vector<std::size_t> quantile_sizes(std::size_t n, std::size_t grid) {
  if (grid < 2) throw PreconditionError("quantile grid needs at least 2 steps");
  std::vector<std::size_t> sizes(grid + 1);
  for (std::size_t k = 0; k <= grid; ++k) sizes[k] = (k * n + grid - 1) / grid;
  return sizes;
}

std::size_t default_grid(std::size_t n) { return std::min<std::size_t>(n, 100); }

double trapezoid(const Curve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.q.size(); ++k) {
    area += 0.5 * (curve.value[k] + curve.value[k - 1]) * (curve.q[k] - curve.q[k - 1]);
  }
  return area;
}

namespace {

std::vector<double> grid_points(std::size_t grid) {
  std::vector<double> q(grid + 1);
  for (std::size_t k = 0; k <= grid; ++k) q[k] = static_cast<double>(k) / grid;
  return q;
}

}  // namespace

AucResult auc_curves(std::span<const double> saliency, CharacteristicGame& game,
                     std::size_t grid, std::size_t cls) {
  const std::size_t n = saliency.size();
  if (game.num_players() != n) throw PreconditionError("saliency size does not match game");
  if (cls >= game.num_classes()) throw PreconditionError("class out of range");
  const auto sizes = quantile_sizes(n, grid);
  const auto order = rank_pixels(saliency);

  // Insertion coalitions first, then the matching deletion complements.
  std::vector<Coalition> batch;
  batch.reserve(2 * (grid + 1));
  Coalition top(n);
  std::size_t filled = 0;
  for (std::size_t k = 0; k <= grid; ++k) {
    for (; filled < sizes[k]; ++filled) top.set(order[filled]);
    batch.push_back(top);
  }
  for (std::size_t k = 0; k <= grid; ++k) batch.push_back(~batch[k]);
  auto worths = game.evaluate_batch(batch);

  std::vector<double> raw(worths.size());
  for (std::size_t k = 0; k < worths.size(); ++k) raw[k] = worths[k].at(cls);
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it, hi = *hi_it;
  auto rescale = [&](double v) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };

  AucResult r;
  r.rescale_lo = lo;
  r.rescale_hi = hi;
  r.insertion.q = grid_points(grid);
  r.deletion.q = r.insertion.q;
  for (std::size_t k = 0; k <= grid; ++k) {
    r.insertion.value.push_back(rescale(raw[k]));
    r.deletion.value.push_back(rescale(raw[grid + 1 + k]));
  }
  r.auc_plus = trapezoid(r.insertion);
  r.auc_minus = trapezoid(r.deletion);
  return r;
}

AucResult auc_curves(const SaliencyMap& saliency, CharacteristicGame& game, std::size_t grid,
                     std::size_t cls) {
  return auc_curves(saliency.class_values(cls), game, grid, cls);
}

double iou(const Coalition& a, const Coalition& b) {
  if (a.size() != b.size()) throw StructuralError("sets over different universes");
  const auto uni = (a | b).count();
  if (uni == 0) throw PreconditionError("IoU of two empty sets is undefined");
  return static_cast<double>((a & b).count()) / static_cast<double>(uni);
}

IouResult iou_curve(std::span<const double> saliency, const GroundTruth& truth,
                    std::size_t grid) {
  const std::size_t n = saliency.size();
  if (truth.mask.size() != n) throw StructuralError("ground truth sized for another image");
  const auto g = truth.mask.count();
  if (g == 0) throw PreconditionError("IoU curve needs a nonempty ground truth");
  const auto sizes = quantile_sizes(n, grid);
  const auto order = rank_pixels(saliency);

  IouResult r;
  r.curve.q = grid_points(grid);
  std::size_t filled = 0, inter = 0;
  for (std::size_t k = 0; k <= grid; ++k) {
    for (; filled < sizes[k]; ++filled) inter += truth.mask.test(order[filled]);
    const double j = static_cast<double>(inter) / static_cast<double>(filled + g - inter);
    r.curve.value.push_back(j);
  }
  r.au_iou = trapezoid(r.curve);
  r.max_iou = *std::max_element(r.curve.value.begin(), r.curve.value.end());
  return r;
}

IouResult iou_curve(const SaliencyMap& saliency, const GroundTruth& truth, std::size_t grid,
                    std::size_t cls) {
  return iou_curve(saliency.class_values(cls), truth, grid);
}

ScoreReport score_report(const SaliencyMap& saliency, CharacteristicGame& game,
                         const GroundTruth* truth, std::size_t grid, std::size_t cls) {
  ScoreReport report;
  report.grid = grid;
  report.cls = cls;
  auto auc = auc_curves(saliency, game, grid, cls);
  report.auc_plus = auc.auc_plus;
  report.auc_minus = auc.auc_minus;
  report.rescale_lo = auc.rescale_lo;
  report.rescale_hi = auc.rescale_hi;
  report.insertion = std::move(auc.insertion);
  report.deletion = std::move(auc.deletion);
  if (truth) {
    auto r = iou_curve(saliency, *truth, grid, cls);
    report.au_iou = r.au_iou;
    report.max_iou = r.max_iou;
    report.iou = std::move(r.curve);
  }
  return report;
}

namespace {

nlohmann::json curve_json(const Curve& c) {
  auto j = nlohmann::json::array();
  for (std::size_t k = 0; k < c.q.size(); ++k) j.push_back({c.q[k], c.value[k]});
  return j;
}

Curve curve_from_json(const nlohmann::json& j) {
  Curve c;
  for (const auto& pt : j) {
    c.q.push_back(pt.at(0).get<double>());
    c.value.push_back(pt.at(1).get<double>());
  }
  return c;
}

}  // namespace

nlohmann::json to_json(const ScoreReport& report) {
  nlohmann::json j;
  j["grid"] = report.grid;
  j["class"] = report.cls;
  j["auc_plus"] = report.auc_plus;
  j["auc_minus"] = report.auc_minus;
  j["au_iou"] = report.au_iou ? nlohmann::json(*report.au_iou) : nlohmann::json(nullptr);
  j["max_iou"] = report.max_iou ? nlohmann::json(*report.max_iou) : nlohmann::json(nullptr);
  j["rescale"] = {{"lo", report.rescale_lo}, {"hi", report.rescale_hi}};
  j["curves"]["insertion"] = curve_json(report.insertion);
  j["curves"]["deletion"] = curve_json(report.deletion);
  if (report.iou) j["curves"]["iou"] = curve_json(*report.iou);
  return j;
}

ScoreReport report_from_json(const nlohmann::json& j) {
  ScoreReport r;
  r.grid = j.at("grid").get<std::size_t>();
  r.cls = j.at("class").get<std::size_t>();
  r.auc_plus = j.at("auc_plus").get<double>();
  r.auc_minus = j.at("auc_minus").get<double>();
  if (!j.at("au_iou").is_null()) r.au_iou = j.at("au_iou").get<double>();
  if (!j.at("max_iou").is_null()) r.max_iou = j.at("max_iou").get<double>();
  r.rescale_lo = j.at("rescale").at("lo").get<double>();
  r.rescale_hi = j.at("rescale").at("hi").get<double>();
  const auto& curves = j.at("curves");
  r.insertion = curve_from_json(curves.at("insertion"));
  r.deletion = curve_from_json(curves.at("deletion"));
  if (curves.contains("iou")) r.iou = curve_from_json(curves.at("iou"));
  return r;
}

void write_curve_csv(const Curve& curve, std::ostream& out) {
  out << "q,value\n";
  char line[64];
  for (std::size_t k = 0; k < curve.q.size(); ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", curve.q[k], curve.value[k]);
    out << line;
  }
}

}  // namespace shapbpt
