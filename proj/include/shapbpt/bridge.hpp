#pragma once

// Client side of the evaluator bridge: a remote process owns the model and
// scores masked versions of one image. Frames on the byte stream are
//
//   u32 length | u8 type | payload
//
// little-endian, where `length` counts the type byte plus the payload.
//
//   HELLO  (client) u32 width, u32 height, u8 channels, u32 k, k x u32 class
//                   ids, u8 background mode (0 uniform, 1 reference), then
//                   3 x u8 color or the reference pixels, then the image
//                   pixels (width * height * channels bytes).
//   HELLO  (server) u32 class count, UTF-8 model id.
//   EVAL   u32 request id, u32 mask count, then per mask u32 span count and
//          that many (u32 start, u32 length) runs over row-major pixels.
//   RESULT u32 request id, u32 mask count, u32 class count, then
//          mask count x class count f32 scores.
//   ERROR  u32 code, UTF-8 message.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapbpt/game.hpp"
#include "shapbpt/image.hpp"
#include "shapbpt/masking.hpp"

namespace shapbpt::bridge {

enum class FrameType : std::uint8_t { kHello = 1, kEval = 2, kResult = 3, kError = 4 };

struct Frame {
  FrameType type = FrameType::kError;
  std::vector<std::uint8_t> payload;
  bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);

// Parses one frame from the front of `bytes`. Returns nullopt when more
// bytes are needed; `consumed` receives the frame size otherwise.
std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed);

struct Hello {
  RasterImage image;
  std::vector<std::uint32_t> classes;
  Background background;
};

struct HelloAck {
  std::uint32_t num_classes = 0;
  std::string model_id;
  bool operator==(const HelloAck&) const = default;
};

struct EvalRequest {
  std::uint32_t request_id = 0;
  std::vector<std::vector<Span>> masks;
  bool operator==(const EvalRequest&) const = default;
};

struct EvalResult {
  std::uint32_t request_id = 0;
  std::uint32_t num_masks = 0;
  std::uint32_t num_classes = 0;
  std::vector<float> scores;  // row-major, mask by mask
  bool operator==(const EvalResult&) const = default;
};

struct ErrorReply {
  std::uint32_t code = 0;
  std::string message;
  bool operator==(const ErrorReply&) const = default;
};

Frame encode(const Hello& hello);
Frame encode(const HelloAck& ack);
Frame encode(const EvalRequest& request);
Frame encode(const EvalResult& result);
Frame encode(const ErrorReply& error);

Hello decode_hello(const Frame& frame);
HelloAck decode_hello_ack(const Frame& frame);
EvalRequest decode_eval(const Frame& frame);
EvalResult decode_result(const Frame& frame);
ErrorReply decode_error(const Frame& frame);

// A bidirectional byte stream.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
  virtual void read_exact(std::span<std::uint8_t> out) = 0;
};

// Blocking TCP connection to "host:port". Throws TransportError when the
// address cannot be reached.
std::unique_ptr<Transport> connect_tcp(const std::string& address);

void send_frame(Transport& transport, const Frame& frame);
Frame receive_frame(Transport& transport);

// CharacteristicGame whose worths come from a bridge server. The handshake
// happens in the constructor; each evaluate_batch is one EVAL round trip.
class BridgeGame final : public CharacteristicGame {
 public:
  BridgeGame(std::unique_ptr<Transport> transport, const RasterImage& image,
             std::vector<std::uint32_t> classes, Background background);

  std::size_t num_players() const override { return num_players_; }
  std::size_t num_classes() const override { return num_classes_; }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return "bridge:" + model_id_; }

 private:
  std::unique_ptr<Transport> transport_;
  std::size_t num_players_;
  std::size_t num_classes_ = 0;
  std::string model_id_;
  std::uint32_t next_request_ = 1;
  std::map<std::uint32_t, EvalResult> early_;  // results that arrived out of order
};

}  // namespace shapbpt::bridge
