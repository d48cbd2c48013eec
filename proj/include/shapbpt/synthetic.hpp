#pragma once

// Seeded blob images with exact ground truth.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shapbpt/image.hpp"
#include "shapbpt/masking.hpp"

namespace shapbpt {

struct SyntheticSample {
  RasterImage image;
  GroundTruth truth;  // pixels of the designated blob
  std::uint32_t num_blobs = 0;
};

// RGB image of 2 to 5 uniformly colored blobs over a textured noise
// background. The designated blob is drawn last, so G is exactly its visible
// footprint. The same seed always gives the same bytes.
SyntheticSample make_blob_image(std::uint64_t seed, std::uint32_t width = 64,
                                std::uint32_t height = 64);

// `count` images seeded from `seed`, seed + 1, ...
std::vector<SyntheticSample> make_blob_corpus(std::size_t count, std::uint64_t seed,
                                              std::uint32_t width = 64, std::uint32_t height = 64);

// Image whose ground truth is the top-left quadrant block, for closed-form
// metric checks.
SyntheticSample make_quadrant_image(std::uint32_t width, std::uint32_t height);

}  // namespace shapbpt
