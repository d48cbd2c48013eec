#pragma once

// Little-endian primitives shared by the binary file formats and the bridge
// wire protocol.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "shapbpt/errors.hpp"

namespace shapbpt::detail {

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_f32(std::vector<std::uint8_t>& buf, float v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

inline void write_bytes(std::ostream& out, const std::vector<std::uint8_t>& buf) {
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("write failed");
}

inline std::vector<std::uint8_t> read_bytes(std::istream& in, std::size_t count) {
  std::vector<std::uint8_t> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) throw FormatError("unexpected end of data");
  return buf;
}

inline std::uint32_t read_u32(std::istream& in) { return get_u32(read_bytes(in, 4).data()); }

// Cursor over an in-memory payload.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<std::uint8_t>& buf) : ByteReader(buf.data(), buf.size()) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    auto v = get_u32(data_ + pos_);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string rest_as_string() {
    std::string s(reinterpret_cast<const char*>(data_ + pos_), size_ - pos_);
    pos_ = size_;
    return s;
  }
  const std::uint8_t* take(std::size_t count) {
    need(count);
    auto p = data_ + pos_;
    pos_ += count;
    return p;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t count) const {
    if (size_ - pos_ < count) throw FormatError("truncated payload");
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace shapbpt::detail
