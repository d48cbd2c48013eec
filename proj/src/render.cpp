#include "shapbpt/render.hpp"

#include <algorithm>
#include <cmath>

#include "shapbpt/errors.hpp"

namespace shapbpt {

std::array<std::uint8_t, 3> diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(t))));
  if (t >= 0) return {255, fade, fade};
  return {fade, fade, 255};
}

RasterImage render_overlay(const RasterImage& image, std::span<const double> saliency,
                           const Coalition* contour, double alpha) {
  const std::size_t n = image.num_pixels();
  if (saliency.size() != n) throw StructuralError("saliency does not match the image size");
  if (contour && contour->size() != n) throw StructuralError("contour does not match the image");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in [0, 1]");

  double scale = 0.0;
  for (double v : saliency) scale = std::max(scale, std::abs(v));

  const std::uint32_t w = image.width(), h = image.height();
  RasterImage out(w, h, 3);
  for (std::size_t p = 0; p < n; ++p) {
    const double gray =
        0.299 * image.rgb(p, 0) + 0.587 * image.rgb(p, 1) + 0.114 * image.rgb(p, 2);
    const auto color = diverging_color(scale > 0 ? saliency[p] / scale : 0.0);
    for (std::uint32_t c = 0; c < 3; ++c) {
      const double v = (1.0 - alpha) * gray + alpha * color[c];
      out.at(p, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }

  if (contour) {
    auto inside = [&](std::int64_t x, std::int64_t y) {
      return x >= 0 && y >= 0 && x < w && y < h && contour->test(std::size_t(y) * w + x);
    };
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        if (!inside(x, y)) continue;
        const bool edge = !inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) ||
                          !inside(x, y + 1);
        if (!edge) continue;
        const std::size_t p = std::size_t{y} * w + x;
        for (std::uint32_t c = 0; c < 3; ++c) out.at(p, c) = 0;
      }
    }
  }
  return out;
}

}  // namespace shapbpt
