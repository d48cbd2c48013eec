#include "shapbpt/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "shapbpt/errors.hpp"

namespace shapbpt {

namespace {

// std::uniform_*_distribution output differs between standard libraries, so
// draws are built directly from the engine.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double real(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 rng_;
};

using Color = std::array<int, 3>;

int color_distance(const Color& a, const Color& b) {
  int d = 0;
  for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(a[c] - b[c]));
  return d;
}

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct Blob {
  double cx, cy, rx, ry, angle;
  double wobble_amp, wobble_phase;
  int wobble_freq;
  Color color;

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double u = (dx * ca + dy * sa) / rx;
    const double v = (-dx * sa + dy * ca) / ry;
    const double theta = std::atan2(v, u);
    const double limit = 1.0 + wobble_amp * std::sin(wobble_freq * theta + wobble_phase);
    return u * u + v * v <= limit * limit;
  }
};

}  // namespace

SyntheticSample make_blob_image(std::uint64_t seed, std::uint32_t width, std::uint32_t height) {
  if (width < 8 || height < 8) throw PreconditionError("blob images need at least 8x8 pixels");
  Draw draw(seed);
  const std::size_t n = std::size_t{width} * height;
  const double scale = std::min(width, height) / 64.0;

  // Background: a base color, a slow two-axis ramp, and per-pixel noise.
  Color base;
  for (auto& c : base) c = static_cast<int>(draw.integer(60, 190));
  const double ramp_x = draw.real(-30, 30), ramp_y = draw.real(-30, 30);
  const double noise = draw.real(12, 28);

  RasterImage image(width, height, 3);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const double tx = static_cast<double>(x) / width - 0.5;
      const double ty = static_cast<double>(y) / height - 0.5;
      const std::size_t p = std::size_t{y} * width + x;
      for (std::uint32_t c = 0; c < 3; ++c) {
        const double v = base[c] + ramp_x * tx + ramp_y * ty + draw.real(-noise, noise);
        image.at(p, c) = clamp8(v);
      }
    }
  }

  const auto count = static_cast<std::uint32_t>(draw.integer(2, 5));
  std::vector<Blob> blobs;
  std::vector<Color> used{base};
  for (std::uint32_t b = 0; b < count; ++b) {
    Blob blob;
    blob.rx = draw.real(6, 15) * scale;
    blob.ry = draw.real(6, 15) * scale;
    const double margin = std::max(blob.rx, blob.ry);
    blob.cx = draw.real(margin * 0.6, width - margin * 0.6);
    blob.cy = draw.real(margin * 0.6, height - margin * 0.6);
    blob.angle = draw.real(0, std::numbers::pi);
    blob.wobble_amp = draw.real(0, 0.25);
    blob.wobble_freq = static_cast<int>(draw.integer(2, 5));
    blob.wobble_phase = draw.real(0, 2 * std::numbers::pi);
    // Keep every blob visibly distinct from the background and earlier blobs.
    for (int attempt = 0;; ++attempt) {
      for (auto& c : blob.color) c = static_cast<int>(draw.integer(0, 255));
      const bool distinct = std::all_of(used.begin(), used.end(), [&](const Color& u) {
        return color_distance(u, blob.color) >= 70;
      });
      if (distinct || attempt == 64) break;
    }
    used.push_back(blob.color);
    blobs.push_back(blob);
  }

  // Each blob is sampled at 4x4 points per pixel. Fully covered pixels take
  // the blob color; partially covered ones blend it with what lies beneath,
  // as an anti-aliased renderer would. G holds the designated blob's pixels
  // with at least half coverage.
  Coalition truth(n);
  constexpr int kSub = 4;
  for (std::uint32_t b = 0; b < count; ++b) {
    const bool designated = b + 1 == count;
    for (std::uint32_t y = 0; y < height; ++y) {
      for (std::uint32_t x = 0; x < width; ++x) {
        int hits = 0;
        for (int sy = 0; sy < kSub; ++sy) {
          for (int sx = 0; sx < kSub; ++sx) {
            hits += blobs[b].contains(x + (sx + 0.5) / kSub, y + (sy + 0.5) / kSub);
          }
        }
        if (hits == 0) continue;
        const double cover = static_cast<double>(hits) / (kSub * kSub);
        const std::size_t p = std::size_t{y} * width + x;
        for (std::uint32_t c = 0; c < 3; ++c) {
          image.at(p, c) = clamp8(cover * blobs[b].color[c] + (1 - cover) * image.at(p, c));
        }
        if (designated && 2 * hits >= kSub * kSub) truth.set(p);
      }
    }
  }
  // A degenerate footprint is impossible with the radius bounds above, but G
  // must never be empty.
  if (truth.none()) truth.set(std::size_t{height / 2} * width + width / 2);

  SyntheticSample s;
  s.image = std::move(image);
  s.truth = GroundTruth{std::move(truth), "blob:seed=" + std::to_string(seed)};
  s.num_blobs = count;
  return s;
}

std::vector<SyntheticSample> make_blob_corpus(std::size_t count, std::uint64_t seed,
                                              std::uint32_t width, std::uint32_t height) {
  std::vector<SyntheticSample> corpus;
  corpus.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    corpus.push_back(make_blob_image(seed + k, width, height));
  }
  return corpus;
}

SyntheticSample make_quadrant_image(std::uint32_t width, std::uint32_t height) {
  if (width < 2 || height < 2) throw PreconditionError("quadrant image needs at least 2x2 pixels");
  const std::uint32_t qw = width / 2, qh = height / 2;
  RasterImage image(width, height, 3, 40);
  Coalition truth(image.num_pixels());
  for (std::uint32_t y = 0; y < qh; ++y) {
    for (std::uint32_t x = 0; x < qw; ++x) {
      const std::size_t p = std::size_t{y} * width + x;
      image.at(p, 0) = 220;
      image.at(p, 1) = 60;
      image.at(p, 2) = 60;
      truth.set(p);
    }
  }
  SyntheticSample s;
  s.image = std::move(image);
  s.truth = GroundTruth{std::move(truth), "quadrant"};
  s.num_blobs = 1;
  return s;
}

}  // namespace shapbpt
