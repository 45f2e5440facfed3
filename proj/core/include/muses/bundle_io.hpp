#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "muses/gateway.hpp"

namespace muses {

// {"prompt", "mesh": {"vertices", "faces"}, "skeleton": {...},
//  "skinning": base64 MUSW, "slat": base64 SLAT}
std::string bundle_to_json(const AssetBundle& bundle);
AssetBundle bundle_from_json(std::string_view text);

std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace muses
