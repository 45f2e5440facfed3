#include "muses/bundle_io.hpp"

#include <fstream>
#include <sstream>

#include "json_detail.hpp"
#include "muses/codec.hpp"
#include "muses/skinning_io.hpp"
#include "muses/slat_io.hpp"

namespace muses {

namespace detail {

ojson mesh_json(const Mesh& mesh) {
  ojson v = ojson::array();
  for (const auto& p : mesh.vertices) v.push_back(vec_json(p));
  ojson f = ojson::array();
  for (const auto& t : mesh.faces) f.push_back(ojson::array({t[0], t[1], t[2]}));
  return {{"vertices", std::move(v)}, {"faces", std::move(f)}};
}

Mesh mesh_from(const ojson& j) {
  Mesh mesh;
  try {
    for (const auto& p : require(j, "vertices")) mesh.vertices.push_back(vec_from(p, "vertex"));
    for (const auto& t : require(j, "faces")) {
      if (!t.is_array() || t.size() != 3) throw Error(Errc::FormatError, "face must be an index triple");
      std::array<int, 3> face{t[0].get<int>(), t[1].get<int>(), t[2].get<int>()};
      for (int i : face) {
        if (i < 0 || i >= static_cast<int>(mesh.vertices.size())) throw Error(Errc::FormatError, "face index out of range");
      }
      mesh.faces.push_back(face);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::FormatError, std::string("bad mesh JSON: ") + e.what());
  }
  return mesh;
}

}  // namespace detail

std::string bundle_to_json(const AssetBundle& bundle) {
  bundle.validate();
  detail::ojson j;
  j["prompt"] = bundle.prompt;
  j["mesh"] = detail::mesh_json(bundle.mesh);
  j["skeleton"] = detail::skeleton_json(bundle.skeleton);
  j["skinning"] = base64_encode(encode_skinning(bundle.skinning));
  j["slat"] = base64_encode(encode_slat(bundle.slat));
  return j.dump() + "\n";
}

AssetBundle bundle_from_json(std::string_view text) {
  auto j = detail::parse(text);
  AssetBundle b;
  const auto& prompt = detail::require(j, "prompt");
  if (!prompt.is_string()) throw Error(Errc::FormatError, "'prompt' must be a string");
  b.prompt = prompt.get<std::string>();
  b.mesh = detail::mesh_from(detail::require(j, "mesh"));
  try {
    b.skeleton = detail::skeleton_from(detail::require(j, "skeleton"));
  } catch (const Error& e) {
    throw Error(Errc::FormatError, e.what());
  }
  const auto& skin = detail::require(j, "skinning");
  const auto& slat = detail::require(j, "slat");
  if (!skin.is_string() || !slat.is_string()) throw Error(Errc::FormatError, "binary payloads must be base64 strings");
  b.skinning = decode_skinning(base64_decode(skin.get<std::string>()));
  b.slat = decode_slat(base64_decode(slat.get<std::string>()));
  try {
    b.validate();
  } catch (const Error& e) {
    throw Error(Errc::FormatError, e.what());
  }
  return b;
}

std::string mesh_to_json(const Mesh& mesh) { return detail::mesh_json(mesh).dump() + "\n"; }

Mesh mesh_from_json(std::string_view text) { return detail::mesh_from(detail::parse(text)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::InvalidInput, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::InvalidInput, "short write to " + path.string());
}

}  // namespace muses
