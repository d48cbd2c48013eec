#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace shapbpt {

// 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels. Pixel p is the
// row-major index y * width + x.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
              std::uint8_t fill = 0);
  RasterImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
              std::vector<std::uint8_t> data);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t channels() const { return channels_; }
  std::size_t num_pixels() const { return std::size_t{width_} * height_; }

  std::uint8_t at(std::size_t pixel, std::uint32_t channel) const {
    return data_[pixel * channels_ + channel];
  }
  std::uint8_t& at(std::size_t pixel, std::uint32_t channel) {
    return data_[pixel * channels_ + channel];
  }

  // Channel c of an RGB view: gray images repeat their single channel.
  std::uint8_t rgb(std::size_t pixel, std::uint32_t c) const {
    return channels_ == 1 ? data_[pixel] : data_[pixel * 3 + c];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const RasterImage&) const = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::uint32_t channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// 8-bit gray or RGB PNG. Throws FormatError for anything else (16-bit,
// palette, alpha) and for unreadable files.
RasterImage load_png(const std::string& path);

// Writes an 8-bit PNG. Output bytes depend only on the image.
void save_png(const RasterImage& image, const std::string& path);

}  // namespace shapbpt
