#include "muses/skeleton_io.hpp"

#include "json_detail.hpp"

namespace muses {

namespace detail {

ojson skeleton_json(const Skeleton& s) {
  ojson j;
  ojson joints = ojson::array();
  for (const auto& p : s.joints) joints.push_back(vec_json(p));
  ojson bones = ojson::array();
  for (const auto& b : s.bones) bones.push_back(ojson::array({b.a, b.b}));
  j["joints"] = std::move(joints);
  j["bones"] = std::move(bones);
  j["root"] = s.root;
  j["names"] = s.names ? ojson(*s.names) : ojson(nullptr);
  return j;
}

Skeleton skeleton_from(const ojson& j) {
  Skeleton s;
  try {
    for (const auto& p : require(j, "joints")) s.joints.push_back(vec_from(p, "joint"));
    for (const auto& b : require(j, "bones")) {
      if (!b.is_array() || b.size() != 2) throw Error(Errc::FormatError, "bone must be an index pair");
      s.bones.push_back({b[0].get<int>(), b[1].get<int>()});
    }
    s.root = require(j, "root").get<int>();
    if (j.contains("names") && !j.at("names").is_null()) {
      s.names = j.at("names").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::FormatError, std::string("bad skeleton JSON: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace detail

std::string skeleton_to_json(const Skeleton& s) { return detail::skeleton_json(s).dump(2) + "\n"; }

Skeleton skeleton_from_json(std::string_view text) { return detail::skeleton_from(detail::parse(text)); }

std::string classification_to_json(const CleanSkeleton& clean, const Classification& result) {
  using detail::ojson;
  const auto originals = original_region_joints(clean, result.partition);
  ojson j;
  j["begin_node"] = result.partition.begin_node;
  j["trunk_junction"] =
      result.partition.trunk_junction ? ojson(*result.partition.trunk_junction) : ojson(nullptr);
  j["forward"] = detail::vec_json(result.frame.forward);
  j["score"] = result.score;
  ojson regions = ojson::array();
  for (std::size_t i = 0; i < result.partition.regions.size(); ++i) {
    const auto& r = result.partition.regions[i];
    ojson rj;
    rj["label"] = std::string(to_string(r.label));
    rj["instance"] = r.instance;
    rj["anchor"] = r.anchor;
    rj["joints"] = r.joints;
    rj["bones"] = r.bones;
    rj["original_joints"] = originals[i];
    regions.push_back(std::move(rj));
  }
  j["regions"] = std::move(regions);
  j["skeleton"] = detail::skeleton_json(clean.skeleton);
  return j.dump(2) + "\n";
}

}  // namespace muses
