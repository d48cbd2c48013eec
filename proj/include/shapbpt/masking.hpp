#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <list>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shapbpt/coalition.hpp"
#include "shapbpt/game.hpp"
#include "shapbpt/image.hpp"

namespace shapbpt {

// A run of consecutive kept pixels in row-major order.
struct Span {
  std::uint32_t start = 0;
  std::uint32_t length = 0;
  bool operator==(const Span&) const = default;
};

// Canonical run-length encoding: sorted, disjoint, maximal runs.
std::vector<Span> encode_spans(const Coalition& kept);

// Inverse of encode_spans. Spans must be sorted, non-overlapping, nonempty,
// and inside [0, n); touching spans are accepted. Throws StructuralError.
Coalition decode_spans(std::size_t n, std::span<const Span> spans);

struct Background {
  enum class Mode { kUniform, kReference };

  Mode mode = Mode::kUniform;
  std::array<std::uint8_t, 3> color{128, 128, 128};
  RasterImage reference;  // used in kReference mode

  static Background uniform(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return Background{Mode::kUniform, {r, g, b}, {}};
  }
  static Background gray(std::uint8_t v = 128) { return uniform(v, v, v); }
  static Background from_reference(RasterImage reference) {
    return Background{Mode::kReference, {0, 0, 0}, std::move(reference)};
  }
};

// Pixels in `kept` are copied from `image`, all others come from the
// background. Gray images use the first channel of a uniform color.
RasterImage apply_mask(const RasterImage& image, const Coalition& kept, const Background& bg);

struct GroundTruth {
  Coalition mask;
  std::string source;
};

// 8-bit PNG of the image's size; nonzero pixels belong to the set.
GroundTruth load_ground_truth_png(const std::string& path, std::uint32_t width,
                                  std::uint32_t height);
// One "start,length" span per line over row-major pixel indices.
GroundTruth load_ground_truth_rle(const std::string& path, std::size_t n);
GroundTruth parse_ground_truth_rle(std::istream& in, std::size_t n, std::string source);
void write_ground_truth_rle(const Coalition& mask, std::ostream& out);
// Dispatches on the extension: ".png" is read as an image, anything else as
// run-length text.
GroundTruth load_ground_truth(const std::string& path, std::uint32_t width, std::uint32_t height);

// nu(S) = |S intersect G| / |G|. Single class, additive.
class IdealLinearGame final : public CharacteristicGame {
 public:
  IdealLinearGame(Coalition truth, std::size_t n);

  std::size_t num_players() const override { return n_; }
  std::size_t num_classes() const override { return 1; }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return "ideal-linear"; }

  const Coalition& truth() const { return truth_; }

 private:
  Coalition truth_;
  std::size_t n_;
  double size_;
};

// Throws StructuralError when G is empty or sized for another universe.
IdealLinearGame ideal_linear_game(const GroundTruth& truth, std::size_t n);

// Image classifier seen as a batch scoring function.
class ImageModel {
 public:
  virtual ~ImageModel() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<Worth> predict(std::span<const RasterImage> images) = 0;
  virtual std::string id() const { return "model"; }
};

// Mean intensity of the whole image over all channels, scaled to [0, 1].
class MeanIntensityModel final : public ImageModel {
 public:
  std::size_t num_classes() const override { return 1; }
  std::vector<Worth> predict(std::span<const RasterImage> images) override;
  std::string id() const override { return "mean-intensity"; }
};

// nu_{f,x}(S): the model's scores on x with the pixels outside S replaced by
// the background.
class MaskedModelGame final : public CharacteristicGame {
 public:
  MaskedModelGame(RasterImage image, Background background, ImageModel& model);

  std::size_t num_players() const override { return image_.num_pixels(); }
  std::size_t num_classes() const override { return model_.num_classes(); }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return model_.id(); }

 private:
  RasterImage image_;
  Background background_;
  ImageModel& model_;
};

// LRU memo in front of another game. Repeated coalitions, within a batch or
// across batches, reach the inner game once while they stay cached.
class CachedGame final : public CharacteristicGame {
 public:
  static constexpr std::size_t kDefaultCapacity = std::size_t{1} << 20;

  explicit CachedGame(CharacteristicGame& inner, std::size_t capacity = kDefaultCapacity);

  std::size_t num_players() const override { return inner_.num_players(); }
  std::size_t num_classes() const override { return inner_.num_classes(); }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return inner_.id(); }

  std::size_t hits() const;
  std::size_t misses() const;
  std::size_t size() const;

 private:
  using Lru = std::list<std::pair<Coalition, Worth>>;

  CharacteristicGame& inner_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  Lru lru_;
  std::unordered_map<Coalition, Lru::iterator, CoalitionHash> index_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Evaluates `specs` through the cache; results are order-aligned.
std::vector<Worth> cached_batch_evaluate(CachedGame& game, std::span<const Coalition> specs);

}  // namespace shapbpt
