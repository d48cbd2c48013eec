#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "shapbpt/coalition.hpp"
#include "shapbpt/image.hpp"

namespace shapbpt {

// Blue-white-red color for a value in [-1, 1]; 0 maps to white.
std::array<std::uint8_t, 3> diverging_color(double t);

// Signed saliency scaled by max |v|, alpha-blended over a gray copy of the
// image. When `contour` is given, its boundary pixels are drawn in black.
RasterImage render_overlay(const RasterImage& image, std::span<const double> saliency,
                           const Coalition* contour = nullptr, double alpha = 0.65);

}  // namespace shapbpt
