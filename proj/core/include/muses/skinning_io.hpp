#pragma once

#include <string>
#include <string_view>

#include "muses/region_mapper.hpp"

namespace muses {

inline constexpr std::uint8_t kSkinningVersion = 1;

// "MUSW", u8 version, u32 Q, u32 J, u32 count, then (u32 vertex, u32 joint, f32 weight)
// for every nonzero entry, sorted by (vertex, joint). Weights are stored as f32.
std::string encode_skinning(const SkinningMatrix& w);
// Columns map to joints 0..J-1.
SkinningMatrix decode_skinning(std::string_view bytes);

}  // namespace muses
