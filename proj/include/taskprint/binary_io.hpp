#pragma once

// Little-endian primitive encoding shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "taskprint/errors.hpp"

namespace taskprint::binary {

class Writer {
 public:
  void bytes(std::string_view raw) { buffer_.append(raw); }

  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  /// u16 length prefix followed by the raw UTF-8 bytes.
  void short_string(std::string_view s, std::string_view what) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError(std::string(what), "string longer than 65535 bytes");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }

  const std::string& data() const noexcept { return buffer_; }
  std::string take() && { return std::move(buffer_); }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
  }

  std::string buffer_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string format_name)
      : data_(data), format_(std::move(format_name)) {}

  void expect_magic(std::string_view magic) {
    if (data_.size() < magic.size() || data_.substr(0, magic.size()) != magic) {
      throw FormatError(format_ + ": bad magic, expected \"" + std::string(magic) + "\"");
    }
    pos_ = magic.size();
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string short_string() {
    const auto n = u16();
    return std::string(take(n));
  }

  /// Guards element counts read from headers before allocating.
  void require_remaining(std::uint64_t count, std::uint64_t element_size, std::string_view what) {
    const auto left = static_cast<std::uint64_t>(data_.size() - pos_);
    if (element_size != 0 && count > left / element_size) {
      throw FormatError(format_ + ": truncated " + std::string(what));
    }
  }

  void expect_end() const {
    if (pos_ != data_.size()) {
      throw FormatError(format_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
    }
  }

 private:
  std::string_view take(std::size_t n) {
    if (data_.size() - pos_ < n) throw FormatError(format_ + ": unexpected end of data");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename U>
  U get_le() {
    const auto raw = take(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(raw[i])) << (8 * i));
    }
    return v;
  }

  std::string_view data_;
  std::string format_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace taskprint::binary
