#pragma once

#include <string>
#include <string_view>

#include "muses/voxel.hpp"

namespace muses {

inline constexpr std::uint8_t kSlatVersion = 1;

// "SLAT", u8 version, u16 N, u16 C, u32 L, L x 3 u16 positions, L x C f32 features.
std::string encode_slat(const SparseLatent& latent);
SparseLatent decode_slat(std::string_view bytes);

}  // namespace muses
