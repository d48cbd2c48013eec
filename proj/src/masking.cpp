#include "shapbpt/masking.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "shapbpt/errors.hpp"

namespace shapbpt {

std::vector<Span> encode_spans(const Coalition& kept) {
  std::vector<Span> out;
  for (auto i = kept.find_first(); i != Coalition::npos;) {
    auto j = i;
    while (j + 1 < kept.size() && kept.test(j + 1)) ++j;
    out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j - i + 1)});
    i = kept.find_next(j);
  }
  return out;
}

Coalition decode_spans(std::size_t n, std::span<const Span> spans) {
  Coalition out(n);
  std::uint64_t floor = 0;
  for (const Span& s : spans) {
    if (s.length == 0) throw StructuralError("empty span");
    if (s.start < floor) throw StructuralError("spans are unsorted or overlapping");
    const std::uint64_t end = std::uint64_t{s.start} + s.length;
    if (end > n) throw StructuralError("span runs past the last pixel");
    for (std::uint64_t p = s.start; p < end; ++p) out.set(p);
    floor = end;
  }
  return out;
}

RasterImage apply_mask(const RasterImage& image, const Coalition& kept, const Background& bg) {
  const std::size_t n = image.num_pixels();
  if (kept.size() != n) throw StructuralError("mask size does not match image");
  const std::uint32_t ch = image.channels();
  if (bg.mode == Background::Mode::kReference &&
      (bg.reference.width() != image.width() || bg.reference.height() != image.height() ||
       bg.reference.channels() != ch)) {
    throw StructuralError("reference background does not match image");
  }
  RasterImage out = image;
  for (std::size_t p = 0; p < n; ++p) {
    if (kept.test(p)) continue;
    for (std::uint32_t c = 0; c < ch; ++c) {
      out.at(p, c) = bg.mode == Background::Mode::kUniform ? bg.color[c] : bg.reference.at(p, c);
    }
  }
  return out;
}

GroundTruth load_ground_truth_png(const std::string& path, std::uint32_t width,
                                  std::uint32_t height) {
  RasterImage img = load_png(path);
  if (img.width() != width || img.height() != height) {
    throw StructuralError("ground truth " + path + " is " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + ", image is " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  Coalition mask(img.num_pixels());
  for (std::size_t p = 0; p < img.num_pixels(); ++p) {
    for (std::uint32_t c = 0; c < img.channels(); ++c) {
      if (img.at(p, c) != 0) mask.set(p);
    }
  }
  if (mask.none()) throw StructuralError("ground truth " + path + " is empty");
  return GroundTruth{std::move(mask), path};
}

GroundTruth parse_ground_truth_rle(std::istream& in, std::size_t n, std::string source) {
  std::vector<Span> spans;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::uint64_t start = 0, length = 0;
    if (!(ls >> start >> length) || start > UINT32_MAX || length > UINT32_MAX) {
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected start,length");
    }
    spans.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(length)});
  }
  Coalition mask = decode_spans(n, spans);
  if (mask.none()) throw StructuralError("ground truth " + source + " is empty");
  return GroundTruth{std::move(mask), std::move(source)};
}

GroundTruth load_ground_truth_rle(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return parse_ground_truth_rle(in, n, path);
}

void write_ground_truth_rle(const Coalition& mask, std::ostream& out) {
  for (const Span& s : encode_spans(mask)) out << s.start << ',' << s.length << '\n';
}

GroundTruth load_ground_truth(const std::string& path, std::uint32_t width, std::uint32_t height) {
  const bool png = path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0;
  return png ? load_ground_truth_png(path, width, height)
             : load_ground_truth_rle(path, std::size_t{width} * height);
}

IdealLinearGame::IdealLinearGame(Coalition truth, std::size_t n)
    : truth_(std::move(truth)), n_(n), size_(static_cast<double>(truth_.count())) {
  if (truth_.size() != n_) throw StructuralError("ground truth sized for another image");
  if (truth_.none()) throw StructuralError("ideal linear game needs a nonempty ground truth");
}

std::vector<Worth> IdealLinearGame::evaluate_batch(std::span<const Coalition> coalitions) {
  std::vector<Worth> out;
  out.reserve(coalitions.size());
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    if (coalitions[i].size() != n_) {
      throw EvaluationError("coalition universe does not match game size", i);
    }
    out.push_back({static_cast<double>((coalitions[i] & truth_).count()) / size_});
  }
  return out;
}

IdealLinearGame ideal_linear_game(const GroundTruth& truth, std::size_t n) {
  return IdealLinearGame(truth.mask, n);
}

std::vector<Worth> MeanIntensityModel::predict(std::span<const RasterImage> images) {
  std::vector<Worth> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    double sum = 0.0;
    for (auto v : img.data()) sum += v;
    out.push_back({sum / (static_cast<double>(img.data().size()) * 255.0)});
  }
  return out;
}

MaskedModelGame::MaskedModelGame(RasterImage image, Background background, ImageModel& model)
    : image_(std::move(image)), background_(std::move(background)), model_(model) {}

std::vector<Worth> MaskedModelGame::evaluate_batch(std::span<const Coalition> coalitions) {
  std::vector<RasterImage> masked;
  masked.reserve(coalitions.size());
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    if (coalitions[i].size() != image_.num_pixels()) {
      throw EvaluationError("coalition universe does not match image", i);
    }
    masked.push_back(apply_mask(image_, coalitions[i], background_));
  }
  auto out = model_.predict(masked);
  if (out.size() != coalitions.size()) {
    throw EvaluationError("model returned " + std::to_string(out.size()) + " results for " +
                              std::to_string(coalitions.size()) + " images",
                          std::min(out.size(), coalitions.size()));
  }
  return out;
}

CachedGame::CachedGame(CharacteristicGame& inner, std::size_t capacity)
    : inner_(inner), capacity_(capacity) {
  if (capacity_ == 0) throw PreconditionError("cache capacity must be positive");
}

std::vector<Worth> CachedGame::evaluate_batch(std::span<const Coalition> coalitions) {
  std::vector<Worth> out(coalitions.size());
  // Distinct uncached coalitions, and for each request which miss serves it.
  std::vector<Coalition> missing;
  std::vector<std::size_t> first_request;
  std::vector<std::ptrdiff_t> served_by(coalitions.size(), -1);
  {
    std::lock_guard lock(mu_);
    std::unordered_map<Coalition, std::size_t, CoalitionHash> pending;
    for (std::size_t i = 0; i < coalitions.size(); ++i) {
      auto it = index_.find(coalitions[i]);
      if (it != index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        out[i] = it->second->second;
        ++hits_;
        continue;
      }
      auto [slot, fresh] = pending.try_emplace(coalitions[i], missing.size());
      if (fresh) {
        missing.push_back(coalitions[i]);
        first_request.push_back(i);
        ++misses_;
      } else {
        ++hits_;
      }
      served_by[i] = static_cast<std::ptrdiff_t>(slot->second);
    }
  }
  if (missing.empty()) return out;

  std::vector<Worth> fresh;
  try {
    fresh = inner_.evaluate_batch(missing);
  } catch (const EvaluationError& e) {
    const std::size_t at = e.index() < first_request.size() ? first_request[e.index()] : 0;
    throw EvaluationError(e.what(), at);
  } catch (const std::exception& e) {
    throw EvaluationError(e.what(), first_request.front());
  }
  if (fresh.size() != missing.size()) {
    throw EvaluationError("evaluator returned a short batch", first_request.front());
  }

  {
    std::lock_guard lock(mu_);
    for (std::size_t k = 0; k < missing.size(); ++k) {
      if (index_.contains(missing[k])) continue;
      lru_.emplace_front(missing[k], fresh[k]);
      index_.emplace(missing[k], lru_.begin());
      if (lru_.size() > capacity_) {
        index_.erase(lru_.back().first);
        lru_.pop_back();
      }
    }
  }
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    if (served_by[i] >= 0) out[i] = fresh[static_cast<std::size_t>(served_by[i])];
  }
  return out;
}

std::size_t CachedGame::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t CachedGame::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

std::size_t CachedGame::size() const {
  std::lock_guard lock(mu_);
  return lru_.size();
}

std::vector<Worth> cached_batch_evaluate(CachedGame& game, std::span<const Coalition> specs) {
  return game.evaluate_batch(specs);
}

}  // namespace shapbpt
