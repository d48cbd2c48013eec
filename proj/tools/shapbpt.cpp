// shapbpt: build hierarchies, explain, score, sweep and render.
//
// Exit codes: 0 success, 2 usage or input error, 3 evaluator or transport
// error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "shapbpt/bridge.hpp"
#include "shapbpt/errors.hpp"
#include "shapbpt/explainer.hpp"
#include "shapbpt/hierarchy.hpp"
#include "shapbpt/image.hpp"
#include "shapbpt/masking.hpp"
#include "shapbpt/metrics.hpp"
#include "shapbpt/pipeline.hpp"
#include "shapbpt/render.hpp"
#include "shapbpt/synthetic.hpp"

namespace fs = std::filesystem;
using namespace shapbpt;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitEvaluator = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string image;
  std::string tree;
  std::string kind = "bpt";
  std::string distance = "default";
  bool literal_perimeter = false;
  std::uint64_t budget = 100;
  std::string priority = "weighted-gap";
  std::string evaluator;
  std::vector<std::uint32_t> classes;
  std::size_t class_index = 0;
  std::size_t grid = 0;
  std::string ground_truth;
  bool want_iou = false;
  std::string saliency;
  std::string out;
  std::uint64_t seed = 1;
  unsigned background = 128;
  // sweep
  std::string corpus;
  std::size_t synthetic = 0;
  std::vector<std::uint64_t> budgets{100};
  std::vector<std::string> kinds{"bpt", "aa"};
  unsigned threads = 0;
  // synth
  std::size_t count = 1;
  std::uint32_t size = 64;
  std::string pattern = "blobs";
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

RasterImage read_image(const Options& o) {
  if (o.image.empty()) throw UsageError("--image is required");
  return load_png(o.image);
}

PartitionTree obtain_tree(const Options& o, const RasterImage& image) {
  if (!o.tree.empty()) {
    auto tree = load_tree(o.tree);
    if (tree.num_leaves() != image.num_pixels()) {
      throw StructuralError("tree has " + std::to_string(tree.num_leaves()) +
                            " leaves but the image has " + std::to_string(image.num_pixels()) +
                            " pixels");
    }
    return tree;
  }
  const auto kind = parse_hierarchy_kind(o.kind);
  if (kind == HierarchyKind::kAa) return build_aa(image.width(), image.height());
  BptOptions bpt;
  bpt.distance = parse_distance_variant(o.distance);
  if (o.literal_perimeter) bpt.perimeter = PerimeterRule::kPseudocodeLiteral;
  return build_bpt(image, bpt);
}

// The evaluator named on the command line, bound to one image. The ideal
// game keeps its ground truth for scoring.
struct Evaluator {
  std::unique_ptr<CharacteristicGame> game;
  std::optional<GroundTruth> truth;
};

Evaluator make_evaluator(const Options& o, const RasterImage& image,
                         const GroundTruth* corpus_truth = nullptr) {
  std::string choice = o.evaluator;
  const char* env = std::getenv("SHAPBPT_BRIDGE");
  if (env && *env && (choice.empty() || choice.rfind("bridge:", 0) == 0)) {
    choice = std::string("bridge:") + env;
  }
  if (choice.empty()) choice = corpus_truth ? "ideal" : "";
  if (choice.empty()) throw UsageError("--evaluator is required (ideal:PATH or bridge:HOST:PORT)");

  Evaluator ev;
  if (choice == "ideal" || choice.rfind("ideal:", 0) == 0) {
    if (choice == "ideal") {
      if (!corpus_truth) throw UsageError("evaluator 'ideal' needs a ground-truth path");
      ev.truth = *corpus_truth;
    } else {
      ev.truth = load_ground_truth(choice.substr(6), image.width(), image.height());
    }
    ev.game = std::make_unique<IdealLinearGame>(ideal_linear_game(*ev.truth, image.num_pixels()));
    return ev;
  }
  if (choice.rfind("bridge:", 0) == 0) {
    if (o.background > 255) throw UsageError("--background must lie in [0, 255]");
    const auto bg = Background::gray(static_cast<std::uint8_t>(o.background));
    ev.game = std::make_unique<bridge::BridgeGame>(bridge::connect_tcp(choice.substr(7)), image,
                                                   o.classes, bg);
    return ev;
  }
  throw UsageError("unknown evaluator '" + choice + "'");
}

std::optional<GroundTruth> read_truth(const Options& o, const RasterImage& image) {
  if (o.ground_truth.empty()) return std::nullopt;
  return load_ground_truth(o.ground_truth, image.width(), image.height());
}

// ---------------------------------------------------------------------------

int cmd_build_tree(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto image = read_image(o);
  const auto t0 = Clock::now();
  Options built = o;
  built.tree.clear();
  const auto tree = obtain_tree(built, image);
  const double ms = elapsed_ms(t0);
  ensure_parent(o.out);
  save_tree(tree, o.out);
  std::printf("nodes=%zu build_ms=%.2f\n", tree.num_nodes(), ms);
  return 0;
}

int cmd_explain(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto image = read_image(o);
  const auto tree = obtain_tree(o, image);
  auto ev = make_evaluator(o, image);
  BudgetPolicy policy;
  policy.budget = o.budget;
  policy.priority = parse_priority_mode(o.priority);
  policy.explained_class = o.class_index;
  auto map = owen_values(*ev.game, tree, policy);
  map.set_shape(image.width(), image.height());
  ensure_parent(o.out);
  save_saliency(map, o.out);
  double worst = 0.0;
  for (std::size_t c = 0; c < map.num_classes(); ++c) {
    worst = std::max(worst, std::abs(map.conservation_residual(c)));
  }
  std::printf("budget_spent=%llu conservation_residual=%.3g\n",
              static_cast<unsigned long long>(map.budget_spent), worst);
  return 0;
}

int cmd_metrics(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  if (o.saliency.empty()) throw UsageError("--saliency is required");
  const auto image = read_image(o);
  auto map = load_saliency(o.saliency);
  if (map.width() != image.width() || map.height() != image.height()) {
    throw StructuralError("saliency is " + std::to_string(map.width()) + "x" +
                          std::to_string(map.height()) + " but the image is " +
                          std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  auto truth = read_truth(o, image);
  if (o.want_iou && !truth) throw UsageError("--iou needs --ground-truth");
  auto ev = make_evaluator(o, image);
  if (o.class_index >= map.num_classes()) throw UsageError("--class-index out of range");
  const std::size_t grid = o.grid ? o.grid : default_grid(image.num_pixels());
  const auto report = score_report(map, *ev.game, truth ? &*truth : nullptr, grid, o.class_index);

  fs::create_directories(o.out);
  std::ofstream(fs::path(o.out) / "report.json") << to_json(report).dump(2) << "\n";
  auto csv = [&](const char* name, const Curve& c) {
    std::ofstream f(fs::path(o.out) / name);
    write_curve_csv(c, f);
  };
  csv("insertion.csv", report.insertion);
  csv("deletion.csv", report.deletion);
  if (report.iou) csv("iou.csv", *report.iou);
  std::printf("auc_plus=%.6f auc_minus=%.6f", report.auc_plus, report.auc_minus);
  if (report.au_iou) std::printf(" au_iou=%.6f max_iou=%.6f", *report.au_iou, *report.max_iou);
  std::printf("\n");
  return 0;
}

struct CorpusItem {
  std::string name;
  RasterImage image;
  GroundTruth truth;
};

// Every NAME.png in the directory whose ground truth sits next to it as
// NAME.gt.png or NAME.gt.rle.
std::vector<CorpusItem> load_corpus_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("corpus directory " + dir + " does not exist");
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    const auto name = p.filename().string();
    if (p.extension() == ".png" && name.find(".gt.") == std::string::npos) images.push_back(p);
  }
  std::sort(images.begin(), images.end());
  std::vector<CorpusItem> corpus;
  for (const auto& p : images) {
    CorpusItem item;
    item.name = p.stem().string();
    item.image = load_png(p.string());
    auto gt = p.parent_path() / (item.name + ".gt.png");
    if (!fs::exists(gt)) gt = p.parent_path() / (item.name + ".gt.rle");
    if (!fs::exists(gt)) throw UsageError("no ground truth for " + p.string());
    item.truth = load_ground_truth(gt.string(), item.image.width(), item.image.height());
    corpus.push_back(std::move(item));
  }
  return corpus;
}

int cmd_sweep(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  if (o.budgets.empty()) throw UsageError("--budgets needs at least one value");
  if (o.kinds.empty()) throw UsageError("--kinds needs at least one value");
  std::vector<HierarchyKind> kinds;
  for (const auto& k : o.kinds) kinds.push_back(parse_hierarchy_kind(k));
  const auto distance = parse_distance_variant(o.distance);
  const auto priority = parse_priority_mode(o.priority);

  std::vector<CorpusItem> corpus;
  if (!o.corpus.empty()) {
    corpus = load_corpus_dir(o.corpus);
  } else {
    for (auto& s : make_blob_corpus(o.synthetic, o.seed)) {
      corpus.push_back({"seed-" + std::to_string(o.seed + corpus.size()), std::move(s.image),
                        std::move(s.truth)});
    }
  }
  if (corpus.empty()) {
    std::fprintf(stderr, "shapbpt: empty corpus\n");
    return kExitInput;
  }

  struct Row {
    bool ok = false;
    std::string error;
    ScoreReport report;
  };
  const std::size_t per_image = kinds.size() * o.budgets.size();
  std::vector<Row> rows(corpus.size() * per_image);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < corpus.size();) {
      const auto& item = corpus[i];
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        std::optional<PartitionTree> tree;
        std::string tree_error;
        try {
          tree = build_hierarchy(item.image, kinds[k], distance);
        } catch (const std::exception& e) {
          tree_error = e.what();
        }
        for (std::size_t b = 0; b < o.budgets.size(); ++b) {
          auto& row = rows[i * per_image + k * o.budgets.size() + b];
          if (!tree) {
            row.error = tree_error;
            continue;
          }
          try {
            auto ev = make_evaluator(o, item.image, &item.truth);
            BudgetPolicy policy;
            policy.budget = o.budgets[b];
            policy.priority = priority;
            policy.explained_class = o.class_index;
            row.report = explain_and_score(*ev.game, item.image, *tree, policy, &item.truth,
                                           o.grid)
                             .report;
            row.ok = true;
          } catch (const std::exception& e) {
            row.error = e.what();
          }
        }
      }
    }
  };
  unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, corpus.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(o.out);
  std::ofstream runs(fs::path(o.out) / "runs.csv");
  runs << "image,kind,budget,status,auc_plus,auc_minus,au_iou,max_iou,error\n";
  std::ofstream agg(fs::path(o.out) / "sweep.csv");
  agg << "kind,budget,images,failures,auc_plus,auc_minus,au_iou,max_iou\n";
  char buf[256];
  std::size_t failures = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    for (std::size_t b = 0; b < o.budgets.size(); ++b) {
      double sums[4] = {0, 0, 0, 0};
      std::size_t ok = 0, failed = 0;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& row = rows[i * per_image + k * o.budgets.size() + b];
        runs << corpus[i].name << ',' << to_string(kinds[k]) << ',' << o.budgets[b] << ',';
        if (!row.ok) {
          ++failed;
          std::string msg = row.error;
          std::replace(msg.begin(), msg.end(), '"', '\'');
          runs << "failed,,,,,\"" << msg << "\"\n";
          continue;
        }
        ++ok;
        const double v[4] = {row.report.auc_plus, row.report.auc_minus, *row.report.au_iou,
                             *row.report.max_iou};
        for (int m = 0; m < 4; ++m) sums[m] += v[m];
        std::snprintf(buf, sizeof buf, "ok,%.17g,%.17g,%.17g,%.17g,\n", v[0], v[1], v[2], v[3]);
        runs << buf;
      }
      failures += failed;
      agg << to_string(kinds[k]) << ',' << o.budgets[b] << ',' << ok << ',' << failed;
      for (double s : sums) {
        if (ok) {
          std::snprintf(buf, sizeof buf, ",%.17g", s / static_cast<double>(ok));
          agg << buf;
        } else {
          agg << ",";
        }
      }
      agg << "\n";
    }
  }
  std::printf("images=%zu rows=%zu failures=%zu\n", corpus.size(), rows.size(), failures);
  return 0;
}

int cmd_render(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  if (o.saliency.empty()) throw UsageError("--saliency is required");
  const auto image = read_image(o);
  const auto map = load_saliency(o.saliency);
  if (map.width() != image.width() || map.height() != image.height()) {
    throw StructuralError("saliency does not match the image dimensions");
  }
  if (o.class_index >= map.num_classes()) throw UsageError("--class-index out of range");
  const auto truth = read_truth(o, image);
  const auto overlay =
      render_overlay(image, map.class_values(o.class_index), truth ? &truth->mask : nullptr);
  ensure_parent(o.out);
  save_png(overlay, o.out);
  return 0;
}

int cmd_synth(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  for (std::size_t k = 0; k < o.count; ++k) {
    const auto seed = o.seed + k;
    SyntheticSample s;
    if (o.pattern == "blobs") {
      s = make_blob_image(seed, o.size, o.size);
    } else if (o.pattern == "quadrant") {
      s = make_quadrant_image(o.size, o.size);
    } else {
      throw UsageError("unknown pattern '" + o.pattern + "'");
    }
    const std::string stem = (fs::path(o.out) / ("seed-" + std::to_string(seed))).string();
    save_png(s.image, stem + ".png");
    RasterImage gt(s.image.width(), s.image.height(), 1);
    for (std::size_t p = 0; p < gt.num_pixels(); ++p) gt.at(p, 0) = s.truth.mask.test(p) ? 255 : 0;
    save_png(gt, stem + ".gt.png");
  }
  std::printf("images=%zu\n", o.count);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Owen-value saliency for image classifiers"};
  app.require_subcommand(1);
  Options o;

  auto image = [&](CLI::App* c) { c->add_option("--image", o.image, "8-bit gray or RGB PNG"); };
  auto hierarchy = [&](CLI::App* c) {
    c->add_option("--kind", o.kind, "bpt or aa")->check(CLI::IsMember({"bpt", "aa"}));
    c->add_option("--distance", o.distance, "default, no-perimeter or no-color")
        ->check(CLI::IsMember({"default", "no-perimeter", "no-color"}));
  };
  auto evaluator = [&](CLI::App* c) {
    c->add_option("--evaluator", o.evaluator, "ideal:GT_PATH or bridge:HOST:PORT");
    c->add_option("--classes", o.classes, "class ids requested from a bridge")->delimiter(',');
    c->add_option("--background", o.background, "gray level of removed pixels (bridge)");
  };

  auto* build = app.add_subcommand("build-tree", "Build a BPT or AA hierarchy");
  image(build);
  hierarchy(build);
  build->add_flag("--literal-perimeter", o.literal_perimeter,
                  "track merged perimeters without subtracting the shared boundary");
  build->add_option("--out", o.out, "BPT1 tree file");

  auto* explain = app.add_subcommand("explain", "Compute a saliency map");
  image(explain);
  explain->add_option("--tree", o.tree, "BPT1 tree file (built on the fly when absent)");
  hierarchy(explain);
  explain->add_option("--budget", o.budget, "model evaluations for splits");
  explain->add_option("--priority", o.priority, "weighted-gap, weight-only or signed-gap")
      ->check(CLI::IsMember({"weighted-gap", "weight-only", "signed-gap"}));
  evaluator(explain);
  explain->add_option("--class-index", o.class_index, "class that drives the priority");
  explain->add_option("--out", o.out, "SMP1 saliency file");

  auto* metrics = app.add_subcommand("metrics", "Score a saliency map");
  image(metrics);
  metrics->add_option("--saliency", o.saliency, "SMP1 saliency file");
  evaluator(metrics);
  metrics->add_option("--ground-truth", o.ground_truth, "PNG or run-length ground truth");
  metrics->add_flag("--iou", o.want_iou, "fail unless IoU scores can be computed");
  metrics->add_option("--grid", o.grid, "quantile steps (default min(n, 100))");
  metrics->add_option("--class-index", o.class_index, "class to score");
  metrics->add_option("--out", o.out, "output directory");

  auto* sweep = app.add_subcommand("sweep", "Mean scores per hierarchy and budget over a corpus");
  sweep->add_option("--corpus", o.corpus, "directory of NAME.png with NAME.gt.png or NAME.gt.rle");
  sweep->add_option("--synthetic", o.synthetic, "use N seeded blob images instead");
  sweep->add_option("--seed", o.seed, "first synthetic seed");
  sweep->add_option("--budgets", o.budgets, "comma-separated budgets")->delimiter(',');
  sweep->add_option("--kinds", o.kinds, "comma-separated hierarchy kinds")->delimiter(',');
  sweep->add_option("--distance", o.distance, "BPT distance variant")
      ->check(CLI::IsMember({"default", "no-perimeter", "no-color"}));
  sweep->add_option("--priority", o.priority, "priority mode")
      ->check(CLI::IsMember({"weighted-gap", "weight-only", "signed-gap"}));
  evaluator(sweep);
  sweep->add_option("--grid", o.grid, "quantile steps (default min(n, 100))");
  sweep->add_option("--class-index", o.class_index, "class to explain and score");
  sweep->add_option("--threads", o.threads, "worker threads (default: all cores)");
  sweep->add_option("--out", o.out, "output directory");

  auto* render = app.add_subcommand("render", "Overlay a saliency map on its image");
  image(render);
  render->add_option("--saliency", o.saliency, "SMP1 saliency file");
  render->add_option("--ground-truth", o.ground_truth, "draw this region's contour");
  render->add_option("--class-index", o.class_index, "class to render");
  render->add_option("--out", o.out, "output PNG");

  auto* synth = app.add_subcommand("synth", "Write seeded synthetic images with ground truth");
  synth->add_option("--seed", o.seed, "first seed");
  synth->add_option("--count", o.count, "number of images");
  synth->add_option("--size", o.size, "image side in pixels");
  synth->add_option("--pattern", o.pattern, "blobs or quadrant")
      ->check(CLI::IsMember({"blobs", "quadrant"}));
  synth->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*build) return cmd_build_tree(o);
    if (*explain) return cmd_explain(o);
    if (*metrics) return cmd_metrics(o);
    if (*sweep) return cmd_sweep(o);
    if (*render) return cmd_render(o);
    if (*synth) return cmd_synth(o);
  } catch (const TransportError& e) {
    std::fprintf(stderr, "shapbpt: %s\n", e.what());
    return kExitEvaluator;
  } catch (const EvaluationError& e) {
    std::fprintf(stderr, "shapbpt: %s\n", e.what());
    return kExitEvaluator;
  } catch (const PartialResultError& e) {
    std::fprintf(stderr, "shapbpt: %s\n", e.what());
    return kExitEvaluator;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "shapbpt: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
