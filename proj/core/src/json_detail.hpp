#pragma once

// Internal JSON conversions shared by the serializers; not installed.

#include <string>

#include <json.hpp>

#include "muses/error.hpp"
#include "muses/geometry.hpp"
#include "muses/skeleton.hpp"

namespace muses::detail {

using ojson = nlohmann::ordered_json;

inline ojson vec_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from(const ojson& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::FormatError, std::string(what) + " must be a 3-vector");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(Errc::FormatError, std::string(what) + " must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline const ojson& require(const ojson& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::FormatError, std::string("missing key '") + key + "'");
  return j.at(key);
}

inline ojson parse(std::string_view text) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::FormatError, std::string("invalid JSON: ") + e.what());
  }
}

ojson skeleton_json(const Skeleton& s);
Skeleton skeleton_from(const ojson& j);

}  // namespace muses::detail

namespace muses {
struct Mesh;
}

namespace muses::detail {
ojson mesh_json(const Mesh& mesh);
Mesh mesh_from(const ojson& j);
}  // namespace muses::detail
