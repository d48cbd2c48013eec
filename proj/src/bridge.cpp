#include "shapbpt/bridge.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>

#include "binary_io.hpp"
#include "shapbpt/errors.hpp"

namespace shapbpt::bridge {

namespace {

constexpr std::uint32_t kMaxFrame = 1u << 30;

void expect_type(const Frame& frame, FrameType type, const char* what) {
  if (frame.type != type) throw FormatError(std::string("expected a ") + what + " frame");
}

void expect_consumed(const detail::ByteReader& r, const char* what) {
  if (r.remaining() != 0) throw FormatError(std::string("trailing bytes in ") + what + " frame");
}

bool known_type(std::uint8_t t) { return t >= 1 && t <= 4; }

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(5 + frame.payload.size());
  detail::put_u32(out, static_cast<std::uint32_t>(frame.payload.size() + 1));
  out.push_back(static_cast<std::uint8_t>(frame.type));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
  if (bytes.size() < 5) return std::nullopt;
  const std::uint32_t length = detail::get_u32(bytes.data());
  if (length == 0 || length > kMaxFrame) throw FormatError("bad frame length");
  if (!known_type(bytes[4])) throw FormatError("unknown frame type " + std::to_string(bytes[4]));
  if (bytes.size() - 4 < length) return std::nullopt;
  Frame f;
  f.type = static_cast<FrameType>(bytes[4]);
  f.payload.assign(bytes.begin() + 5, bytes.begin() + 4 + length);
  consumed = 4 + std::size_t{length};
  return f;
}

Frame encode(const Hello& hello) {
  const auto& img = hello.image;
  Frame f{FrameType::kHello, {}};
  auto& p = f.payload;
  detail::put_u32(p, img.width());
  detail::put_u32(p, img.height());
  p.push_back(static_cast<std::uint8_t>(img.channels()));
  detail::put_u32(p, static_cast<std::uint32_t>(hello.classes.size()));
  for (auto c : hello.classes) detail::put_u32(p, c);
  if (hello.background.mode == Background::Mode::kUniform) {
    p.push_back(0);
    p.insert(p.end(), hello.background.color.begin(), hello.background.color.end());
  } else {
    const auto& ref = hello.background.reference;
    if (ref.width() != img.width() || ref.height() != img.height() ||
        ref.channels() != img.channels()) {
      throw StructuralError("reference background does not match the image");
    }
    p.push_back(1);
    p.insert(p.end(), ref.data().begin(), ref.data().end());
  }
  p.insert(p.end(), img.data().begin(), img.data().end());
  return f;
}

Hello decode_hello(const Frame& frame) {
  expect_type(frame, FrameType::kHello, "HELLO");
  detail::ByteReader r(frame.payload);
  const auto width = r.u32();
  const auto height = r.u32();
  const auto channels = r.u8();
  if (channels != 1 && channels != 3) throw FormatError("HELLO channels must be 1 or 3");
  const std::size_t bytes = std::size_t{width} * height * channels;
  if (width == 0 || height == 0 || bytes > frame.payload.size()) {
    throw FormatError("HELLO dimensions out of range");
  }
  Hello h;
  const auto k = r.u32();
  if (k > r.remaining() / 4) throw FormatError("truncated payload");
  for (std::uint32_t c = 0; c < k; ++c) h.classes.push_back(r.u32());
  const auto mode = r.u8();
  if (mode == 0) {
    const auto* c = r.take(3);
    h.background = Background::uniform(c[0], c[1], c[2]);
  } else if (mode == 1) {
    const auto* ref = r.take(bytes);
    h.background = Background::from_reference(
        RasterImage(width, height, channels, std::vector<std::uint8_t>(ref, ref + bytes)));
  } else {
    throw FormatError("unknown background mode");
  }
  const auto* px = r.take(bytes);
  h.image = RasterImage(width, height, channels, std::vector<std::uint8_t>(px, px + bytes));
  expect_consumed(r, "HELLO");
  return h;
}

Frame encode(const HelloAck& ack) {
  Frame f{FrameType::kHello, {}};
  detail::put_u32(f.payload, ack.num_classes);
  f.payload.insert(f.payload.end(), ack.model_id.begin(), ack.model_id.end());
  return f;
}

HelloAck decode_hello_ack(const Frame& frame) {
  expect_type(frame, FrameType::kHello, "HELLO");
  detail::ByteReader r(frame.payload);
  HelloAck a;
  a.num_classes = r.u32();
  a.model_id = r.rest_as_string();
  return a;
}

Frame encode(const EvalRequest& request) {
  Frame f{FrameType::kEval, {}};
  auto& p = f.payload;
  detail::put_u32(p, request.request_id);
  detail::put_u32(p, static_cast<std::uint32_t>(request.masks.size()));
  for (const auto& spans : request.masks) {
    detail::put_u32(p, static_cast<std::uint32_t>(spans.size()));
    for (const auto& s : spans) {
      detail::put_u32(p, s.start);
      detail::put_u32(p, s.length);
    }
  }
  return f;
}

EvalRequest decode_eval(const Frame& frame) {
  expect_type(frame, FrameType::kEval, "EVAL");
  detail::ByteReader r(frame.payload);
  EvalRequest e;
  e.request_id = r.u32();
  const auto count = r.u32();
  if (count > r.remaining() / 4) throw FormatError("truncated payload");
  e.masks.resize(count);
  for (auto& spans : e.masks) {
    const auto m = r.u32();
    if (m > r.remaining() / 8) throw FormatError("truncated payload");
    spans.resize(m);
    for (auto& s : spans) {
      s.start = r.u32();
      s.length = r.u32();
    }
  }
  expect_consumed(r, "EVAL");
  return e;
}

Frame encode(const EvalResult& result) {
  if (result.scores.size() != std::size_t{result.num_masks} * result.num_classes) {
    throw StructuralError("RESULT score count does not match its shape");
  }
  Frame f{FrameType::kResult, {}};
  detail::put_u32(f.payload, result.request_id);
  detail::put_u32(f.payload, result.num_masks);
  detail::put_u32(f.payload, result.num_classes);
  for (float s : result.scores) detail::put_f32(f.payload, s);
  return f;
}

EvalResult decode_result(const Frame& frame) {
  expect_type(frame, FrameType::kResult, "RESULT");
  detail::ByteReader r(frame.payload);
  EvalResult e;
  e.request_id = r.u32();
  e.num_masks = r.u32();
  e.num_classes = r.u32();
  const std::uint64_t count = std::uint64_t{e.num_masks} * e.num_classes;
  if (count * 4 != r.remaining()) throw FormatError("RESULT payload has the wrong size");
  e.scores.resize(count);
  for (auto& s : e.scores) s = r.f32();
  return e;
}

Frame encode(const ErrorReply& error) {
  Frame f{FrameType::kError, {}};
  detail::put_u32(f.payload, error.code);
  f.payload.insert(f.payload.end(), error.message.begin(), error.message.end());
  return f;
}

ErrorReply decode_error(const Frame& frame) {
  expect_type(frame, FrameType::kError, "ERROR");
  detail::ByteReader r(frame.payload);
  ErrorReply e;
  e.code = r.u32();
  e.message = r.rest_as_string();
  return e;
}

// ---------------------------------------------------------------------------
// Transport

namespace {

namespace asio = boost::asio;
using asio::ip::tcp;

class TcpTransport final : public Transport {
 public:
  TcpTransport(const std::string& host, const std::string& port) : socket_(io_) {
    boost::system::error_code ec;
    tcp::resolver resolver(io_);
    auto endpoints = resolver.resolve(host, port, ec);
    if (!ec) asio::connect(socket_, endpoints, ec);
    if (ec) {
      throw TransportError("cannot reach bridge at " + host + ":" + port + ": " + ec.message());
    }
    socket_.set_option(tcp::no_delay(true), ec);
  }

  void write_all(std::span<const std::uint8_t> bytes) override {
    boost::system::error_code ec;
    asio::write(socket_, asio::buffer(bytes.data(), bytes.size()), ec);
    if (ec) throw TransportError("bridge write failed: " + ec.message());
  }

  void read_exact(std::span<std::uint8_t> out) override {
    boost::system::error_code ec;
    asio::read(socket_, asio::buffer(out.data(), out.size()), ec);
    if (ec) throw TransportError("bridge read failed: " + ec.message());
  }

 private:
  asio::io_context io_;
  tcp::socket socket_;
};

}  // namespace

std::unique_ptr<Transport> connect_tcp(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw TransportError("bridge address must look like host:port, got '" + address + "'");
  }
  return std::make_unique<TcpTransport>(address.substr(0, colon), address.substr(colon + 1));
}

void send_frame(Transport& transport, const Frame& frame) {
  transport.write_all(encode_frame(frame));
}

Frame receive_frame(Transport& transport) {
  std::uint8_t head[5];
  transport.read_exact(head);
  const std::uint32_t length = detail::get_u32(head);
  if (length == 0 || length > kMaxFrame) throw TransportError("bad frame length from bridge");
  if (!known_type(head[4])) throw TransportError("unknown frame type from bridge");
  Frame f;
  f.type = static_cast<FrameType>(head[4]);
  f.payload.resize(length - 1);
  transport.read_exact(f.payload);
  return f;
}

// ---------------------------------------------------------------------------
// BridgeGame

namespace {

[[noreturn]] void raise_remote(const Frame& frame) {
  auto err = decode_error(frame);
  throw TransportError("bridge error " + std::to_string(err.code) + ": " + err.message);
}

}  // namespace

BridgeGame::BridgeGame(std::unique_ptr<Transport> transport, const RasterImage& image,
                       std::vector<std::uint32_t> classes, Background background)
    : transport_(std::move(transport)), num_players_(image.num_pixels()) {
  if (!transport_) throw PreconditionError("bridge needs a transport");
  send_frame(*transport_, encode(Hello{image, classes, std::move(background)}));
  auto reply = receive_frame(*transport_);
  if (reply.type == FrameType::kError) raise_remote(reply);
  if (reply.type != FrameType::kHello) throw TransportError("bridge did not acknowledge HELLO");
  try {
    auto ack = decode_hello_ack(reply);
    num_classes_ = ack.num_classes;
    model_id_ = ack.model_id;
  } catch (const FormatError& e) {
    throw TransportError(std::string("malformed HELLO reply: ") + e.what());
  }
  if (num_classes_ == 0) throw TransportError("bridge model reports zero classes");
  if (!classes.empty() && num_classes_ != classes.size()) {
    throw TransportError("bridge returned " + std::to_string(num_classes_) + " classes, expected " +
                         std::to_string(classes.size()));
  }
}

std::vector<Worth> BridgeGame::evaluate_batch(std::span<const Coalition> coalitions) {
  if (coalitions.empty()) return {};
  EvalRequest req;
  req.request_id = next_request_++;
  req.masks.reserve(coalitions.size());
  for (const auto& c : coalitions) {
    if (c.size() != num_players_) throw StructuralError("coalition sized for another image");
    req.masks.push_back(encode_spans(c));
  }
  send_frame(*transport_, encode(req));

  EvalResult result;
  if (auto it = early_.find(req.request_id); it != early_.end()) {
    result = std::move(it->second);
    early_.erase(it);
  } else {
    while (true) {
      auto frame = receive_frame(*transport_);
      if (frame.type == FrameType::kError) raise_remote(frame);
      if (frame.type != FrameType::kResult) throw TransportError("unexpected frame from bridge");
      EvalResult r;
      try {
        r = decode_result(frame);
      } catch (const FormatError& e) {
        throw TransportError(std::string("malformed RESULT: ") + e.what());
      }
      if (r.request_id == req.request_id) {
        result = std::move(r);
        break;
      }
      early_.emplace(r.request_id, std::move(r));
    }
  }
  if (result.num_masks != coalitions.size() || result.num_classes != num_classes_) {
    throw TransportError("RESULT shape does not match the request");
  }
  std::vector<Worth> out(coalitions.size(), Worth(num_classes_));
  for (std::size_t m = 0; m < coalitions.size(); ++m) {
    for (std::size_t c = 0; c < num_classes_; ++c) {
      out[m][c] = result.scores[m * num_classes_ + c];
    }
  }
  return out;
}

}  // namespace shapbpt::bridge
