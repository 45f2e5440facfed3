#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "muses/error.hpp"
#include "muses/layout.hpp"

namespace muses {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<RegionLabel> region_word(const std::string& w) {
  try {
    return parse_region_label(w);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<int> count_word(const std::string& w) {
  static const std::map<std::string, int> named = {
      {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},
      {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10},
  };
  if (auto it = named.find(w); it != named.end()) return it->second;
  if (!w.empty() && w.size() <= 3 && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::stoi(w);
  }
  return std::nullopt;
}

const PlannerPart& base_of(const PlanRequest& request) {
  if (request.parts.empty()) throw Error(Errc::InvalidInput, "plan request has no parts");
  const PlannerPart* base = nullptr;
  for (const auto& p : request.parts) {
    if (p.geometry.ref.label != RegionLabel::Body) continue;
    if (base) throw Error(Errc::InvalidInput, "plan request has more than one body part");
    base = &p;
  }
  if (!base) throw Error(Errc::InvalidInput, "plan request has no body part");
  return *base;
}

const Socket& socket_for(const PlannerPart& base, const PartRef& ref) {
  const Socket* any = nullptr;
  for (const auto& s : base.sockets) {
    if (s.label != ref.label) continue;
    if (s.instance == ref.instance) return s;
    if (s.instance == 0 && !any) any = &s;
  }
  if (any) return *any;
  for (const auto& s : base.sockets) {
    if (s.label == ref.label) return s;
  }
  throw Error(Errc::InvalidInput, "body has no socket for " + ref.key());
}

// Length of the bone from `anchor` into the region's own joints.
double anchor_bone_length(const Skeleton& s, const Region& r) {
  for (int bi : r.bones) {
    const Bone& b = s.bones[bi];
    if (b.a == r.anchor || b.b == r.anchor) return (s.joints[b.a] - s.joints[b.b]).norm();
  }
  return 0.0;
}

double trunk_length(const CleanSkeleton& clean, const Classification& c) {
  const auto& p = c.partition;
  if (!p.trunk_junction) return 0.0;
  return (clean.skeleton.joints[p.begin_node] - clean.skeleton.joints[*p.trunk_junction]).norm();
}

}  // namespace

PartAttributes PlannerPart::attributes() const {
  const auto& joints = geometry.skeleton.joints;
  return {geometry.ref.label, centroid(joints), bounds(joints).extent(), geometry.frame.forward};
}

std::vector<PartGeometry> geometry_of(std::span<const PlannerPart> parts) {
  std::vector<PartGeometry> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(p.geometry);
  return out;
}

std::map<RegionLabel, int> parse_multiplicity(std::string_view text) {
  std::map<RegionLabel, int> out;
  auto w = words(text);
  for (std::size_t i = 1; i < w.size(); ++i) {
    auto label = region_word(w[i]);
    auto n = count_word(w[i - 1]);
    if (label && n && *n >= 1) out[*label] = std::max(out[*label], *n);
  }
  return out;
}

std::vector<RegionLabel> mentioned_regions(std::string_view text) {
  std::vector<RegionLabel> out;
  for (const auto& w : words(text)) {
    auto label = region_word(w);
    if (label && std::find(out.begin(), out.end(), *label) == out.end()) out.push_back(*label);
  }
  return out;
}

AssemblyPlan RulePlanner::plan(const PlanRequest& request) {
  const PlannerPart& base = base_of(request);
  auto counts = parse_multiplicity(request.text);
  std::map<RegionLabel, int> donors;
  for (const auto& p : request.parts) {
    if (&p != &base) ++donors[p.geometry.ref.label];
  }

  AssemblyPlan plan;
  plan.parts.push_back({base.geometry.ref, 1, false});
  for (const auto& part : request.parts) {
    if (&part == &base) continue;
    const PartRef& ref = part.geometry.ref;
    PlanPart decl{ref, 1, false};
    if (auto it = counts.find(ref.label); it != counts.end() && it->second >= 2 && donors[ref.label] == 1) {
      decl.copies = it->second;
      decl.symmetric = true;
    }
    plan.parts.push_back(decl);

    const Socket& socket = socket_for(base, ref);
    const Vec3& root = part.geometry.skeleton.joints.at(0);
    const Vec3& target = base.geometry.skeleton.joints.at(socket.joint);

    double alpha = 1.0;
    if (socket.bone_length > 0.0 && part.root_bone_length > 0.0) {
      alpha = socket.bone_length / part.root_bone_length;
    } else if (base.trunk_length > 0.0 && part.trunk_length > 0.0) {
      alpha = base.trunk_length / part.trunk_length;
    }

    const Vec3& from = part.geometry.frame.forward;
    const Vec3& to = base.geometry.frame.forward;
    double theta = std::atan2(from.cross(to).dot(Vec3::UnitY()), from.dot(to)) * 180.0 / kPi;

    Vec3 delta = target - root;
    double dist = delta.norm();
    Vec3 dir = dist > 0.0 ? Vec3(delta / dist) : Vec3(Vec3::UnitX());

    plan.ops.push_back(EditOp::scale(ref, alpha, root));
    plan.ops.push_back(EditOp::rotate(ref, Vec3::UnitY(), root, theta));
    plan.ops.push_back(EditOp::translate(ref, dir, dist));
    plan.attachments.push_back({{base.geometry.ref, socket.joint}, {ref, 0}});
  }
  return plan;
}

AssemblyPlan plan_assembly(const PlanRequest& request, PlannerBackend& backend) {
  base_of(request);
  AssemblyPlan plan = backend.plan(request);
  auto geometry = geometry_of(request.parts);
  auto violations = validate_plan(plan, geometry);
  if (!violations.empty()) throw Error(Errc::PlanRejected, "plan rejected: " + violations.front(), violations);
  return plan;
}

PlannerPart base_part(const std::string& asset, const CleanSkeleton& clean, const Classification& c,
                      std::span<const RegionLabel> removed) {
  const Skeleton& s = clean.skeleton;
  const auto& partition = c.partition;
  auto is_removed = [&](RegionLabel l) { return std::find(removed.begin(), removed.end(), l) != removed.end(); };

  std::set<int> keep;
  for (const auto& r : partition.regions) {
    if (r.label == RegionLabel::Body || !is_removed(r.label)) keep.insert(r.joints.begin(), r.joints.end());
  }
  std::vector<int> order{partition.begin_node};
  for (int j : keep) {
    if (j != partition.begin_node) order.push_back(j);
  }
  std::vector<int> local(s.joint_count(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) local[order[i]] = static_cast<int>(i);

  PlannerPart out;
  out.geometry.ref = {asset, RegionLabel::Body, 1};
  out.geometry.frame = c.frame;
  out.geometry.source_joints = order;
  for (int j : order) out.geometry.skeleton.joints.push_back(s.joints[j]);
  for (const auto& b : s.bones) {
    if (local[b.a] >= 0 && local[b.b] >= 0) out.geometry.skeleton.bones.push_back({local[b.a], local[b.b]});
  }
  if (s.names) {
    out.geometry.skeleton.names.emplace();
    for (int j : order) out.geometry.skeleton.names->push_back((*s.names)[j]);
  }
  out.trunk_length = trunk_length(clean, c);

  int b = local[partition.begin_node];
  int d = partition.trunk_junction ? local[*partition.trunk_junction] : b;
  for (const auto& r : partition.regions) {
    if (r.label == RegionLabel::Body) continue;
    out.sockets.push_back({r.label, r.instance, local[r.anchor], anchor_bone_length(s, r)});
  }
  // Defaults for labels the base never had.
  auto first_length = [&](RegionLabel l) {
    const Region* r = partition.find(l, 1);
    return r ? anchor_bone_length(s, *r) : 0.0;
  };
  out.sockets.push_back({RegionLabel::Head, 0, d, first_length(RegionLabel::Head)});
  out.sockets.push_back({RegionLabel::Tail, 0, b, first_length(RegionLabel::Tail)});
  out.sockets.push_back({RegionLabel::Leg, 0, b, first_length(RegionLabel::Leg)});
  out.sockets.push_back({RegionLabel::Wing, 0, d, first_length(RegionLabel::Wing)});
  return out;
}

PlannerPart region_part(const std::string& asset, const CleanSkeleton& clean, const Classification& c,
                        const Region& region) {
  if (region.label == RegionLabel::Body || region.anchor < 0) {
    throw Error(Errc::InvalidInput, "region_part expects a non-body region");
  }
  const Skeleton& s = clean.skeleton;
  std::vector<int> order{region.anchor};
  order.insert(order.end(), region.joints.begin(), region.joints.end());
  std::vector<int> local(s.joint_count(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) local[order[i]] = static_cast<int>(i);

  PlannerPart out;
  out.geometry.ref = {asset, region.label, region.instance};
  out.geometry.frame = c.frame;
  out.geometry.source_joints = order;
  for (int j : order) out.geometry.skeleton.joints.push_back(s.joints[j]);
  for (int bi : region.bones) {
    const Bone& b = s.bones[bi];
    out.geometry.skeleton.bones.push_back({local[b.a], local[b.b]});
  }
  if (s.names) {
    out.geometry.skeleton.names.emplace();
    for (int j : order) out.geometry.skeleton.names->push_back((*s.names)[j]);
  }
  out.root_bone_length = anchor_bone_length(s, region);
  out.trunk_length = trunk_length(clean, c);
  return out;
}

}  // namespace muses
