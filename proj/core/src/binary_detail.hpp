#pragma once

// Little-endian readers and writers for the binary formats; not installed.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "muses/error.hpp"

namespace muses::detail {

class ByteWriter {
 public:
  void raw(std::string_view s) { out_.append(s); }
  template <typename T>
  void le(T value) {
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    auto u = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, const char* format) : data_(data), format_(format) {}

  void expect(std::string_view magic) {
    if (data_.substr(pos_, magic.size()) != magic) fail("bad magic");
    pos_ += magic.size();
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    if (data_.size() - pos_ < sizeof(T)) fail("truncated");
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(u);
  }
  [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
  void finish() {
    if (pos_ != data_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::FormatError, std::string(format_) + ": " + what);
  }

 private:
  std::string_view data_;
  const char* format_;
  std::size_t pos_ = 0;
};

}  // namespace muses::detail
