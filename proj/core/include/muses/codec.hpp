#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace muses {

std::string base64_encode(std::string_view bytes);
// Throws FormatError on malformed input.
std::string base64_decode(std::string_view text);

std::string sha256_hex(std::string_view bytes);

// 8-bit RGBA, row-major, top row first.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  friend bool operator==(const Image&, const Image&) = default;
};

std::string encode_png(const Image& image);
Image decode_png(std::string_view bytes);

}  // namespace muses
