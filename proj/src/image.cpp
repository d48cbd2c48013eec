#include "shapbpt/image.hpp"

#include <png.h>

#include <cstring>

#include "shapbpt/errors.hpp"

namespace shapbpt {

RasterImage::RasterImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
                         std::uint8_t fill)
    : RasterImage(width, height, channels,
                  std::vector<std::uint8_t>(std::size_t{width} * height * channels, fill)) {}

RasterImage::RasterImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
                         std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width_ == 0 || height_ == 0) throw StructuralError("image needs at least one pixel");
  if (channels_ != 1 && channels_ != 3) throw StructuralError("image must have 1 or 3 channels");
  if (data_.size() != std::size_t{width_} * height_ * channels_) {
    throw StructuralError("pixel buffer size does not match image dimensions");
  }
}

RasterImage load_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("cannot read PNG " + path + ": " + img.message);
  }
  const auto fmt = img.format;
  if (fmt & (PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_COLORMAP | PNG_FORMAT_FLAG_ALPHA)) {
    png_image_free(&img);
    throw FormatError(path + ": only 8-bit gray or RGB PNG input is supported");
  }
  const std::uint32_t channels = (fmt & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, data.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot decode PNG " + path + ": " + msg);
  }
  return RasterImage(img.width, img.height, channels, std::move(data));
}

void save_png(const RasterImage& image, const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = image.width();
  img.height = image.height();
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.data().data(), 0, nullptr)) {
    throw FormatError("cannot write PNG " + path + ": " + img.message);
  }
}

}  // namespace shapbpt
