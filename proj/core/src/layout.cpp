#include "muses/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "muses/error.hpp"

namespace muses {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUnitTol = 1e-9;

bool finite(const Vec3& v) { return v.allFinite(); }

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_int(const std::string& s, std::string_view what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidInput, "bad " + std::string(what) + " '" + s + "'");
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

const PartGeometry* lookup(std::span<const PartGeometry> parts, const PartRef& ref) {
  for (const auto& p : parts) {
    if (p.ref == ref) return &p;
  }
  return nullptr;
}

// Ops of the plan targeting `ref`, applied in order. Unset pivots resolve against the
// current attachment joint. Returns the accumulated transform.
Affine run_ops(const AssemblyPlan& plan, const PartRef& ref, std::vector<Vec3>& joints) {
  Affine total = Affine::Identity();
  for (const auto& op : plan.ops) {
    if (op.target != ref) continue;
    Vec3 anchor = joints.empty() ? Vec3::Zero() : joints[0];
    Affine a = op.affine(anchor);
    for (auto& p : joints) p = a * p;
    total = a * total;
  }
  return total;
}

bool connected(const Skeleton& s) {
  if (s.joints.empty()) return true;
  UnionFind uf(s.joint_count());
  int groups = s.joint_count();
  for (const auto& b : s.bones) {
    if (uf.unite(b.a, b.b)) --groups;
  }
  return groups == 1;
}

const char* kDisconnected = "attachment graph is disconnected";

}  // namespace

std::string PartRef::key() const {
  std::ostringstream os;
  os << asset << '/' << to_string(label) << '/' << instance;
  return os.str();
}

PartRef PartRef::parse(std::string_view text) {
  auto tokens = split(text, '/');
  PartRef ref;
  if (tokens.size() == 1) {
    ref.label = parse_region_label(tokens[0]);
  } else if (tokens.size() == 2 || tokens.size() == 3) {
    if (tokens[0].empty()) throw Error(Errc::InvalidInput, "empty asset id in '" + std::string(text) + "'");
    ref.asset = tokens[0];
    ref.label = parse_region_label(tokens[1]);
    if (tokens.size() == 3) ref.instance = parse_int(tokens[2], "instance");
  } else {
    throw Error(Errc::InvalidInput, "bad part reference '" + std::string(text) + "'");
  }
  return ref;
}

EditOp EditOp::rotate(PartRef target, const Vec3& axis, std::optional<Vec3> pivot, double angle_deg) {
  return {std::move(target), RotateOp{axis, pivot, angle_deg}};
}

EditOp EditOp::translate(PartRef target, const Vec3& direction, double distance) {
  return {std::move(target), TranslateOp{direction, distance}};
}

EditOp EditOp::scale(PartRef target, double factor, std::optional<Vec3> pivot) {
  return {std::move(target), ScaleOp{factor, pivot}};
}

Affine EditOp::affine(const Vec3& default_pivot) const {
  Affine a = Affine::Identity();
  if (const auto* r = std::get_if<RotateOp>(&action)) {
    if (r->angle_deg == 0.0) return a;
    Vec3 pivot = r->pivot.value_or(default_pivot);
    a.translate(pivot);
    a.rotate(Eigen::AngleAxisd(r->angle_deg * kPi / 180.0, r->axis));
    a.translate(-pivot);
  } else if (const auto* t = std::get_if<TranslateOp>(&action)) {
    a.translation() = t->distance * t->direction;
  } else if (const auto* s = std::get_if<ScaleOp>(&action)) {
    if (s->factor == 1.0) return a;
    Vec3 pivot = s->pivot.value_or(default_pivot);
    a.linear() = Eigen::Matrix3d::Identity() * s->factor;
    a.translation() = pivot - s->factor * pivot;
  }
  return a;
}

std::vector<std::string> EditOp::violations() const {
  std::vector<std::string> out;
  auto unit = [&](const Vec3& v, const char* what) {
    if (!finite(v) || std::abs(v.norm() - 1.0) > kUnitTol) out.push_back(std::string("non-unit ") + what);
  };
  auto pivot_ok = [&](const std::optional<Vec3>& p) {
    if (p && !finite(*p)) out.push_back("non-finite pivot");
  };
  if (const auto* r = std::get_if<RotateOp>(&action)) {
    unit(r->axis, "rotation axis");
    if (!std::isfinite(r->angle_deg)) out.push_back("non-finite angle");
    pivot_ok(r->pivot);
  } else if (const auto* t = std::get_if<TranslateOp>(&action)) {
    unit(t->direction, "translation direction");
    if (!std::isfinite(t->distance)) out.push_back("non-finite distance");
  } else if (const auto* s = std::get_if<ScaleOp>(&action)) {
    if (!(s->factor > 0.0)) out.push_back("non-positive scale");
    else if (!std::isfinite(s->factor)) out.push_back("non-finite scale");
    pivot_ok(s->pivot);
  }
  return out;
}

EditOp EditOp::inverse() const {
  EditOp inv = *this;
  if (auto* r = std::get_if<RotateOp>(&inv.action)) r->angle_deg = -r->angle_deg;
  else if (auto* t = std::get_if<TranslateOp>(&inv.action)) t->distance = -t->distance;
  else if (auto* s = std::get_if<ScaleOp>(&inv.action)) s->factor = 1.0 / s->factor;
  return inv;
}

std::vector<Vec3> apply_op(std::span<const Vec3> joints, const EditOp& op) {
  auto bad = op.violations();
  if (!bad.empty()) throw Error(Errc::InvalidInput, "invalid op: " + bad.front(), bad);
  Affine a = op.affine(joints.empty() ? Vec3::Zero() : joints[0]);
  std::vector<Vec3> out;
  out.reserve(joints.size());
  for (const auto& p : joints) out.push_back(a * p);
  return out;
}

std::vector<Affine> copy_transforms(std::span<const Vec3> joints, int copies, const OrientationFrame& frame,
                                    const Vec3& plane_origin) {
  if (copies < 1) throw Error(Errc::InvalidInput, "copies must be >= 1");
  std::vector<Affine> out;
  if (copies % 2 == 1) out.push_back(Affine::Identity());
  if (copies == 1) return out;

  const Vec3& lat = frame.lateral;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : joints) {
    double s = p.dot(lat);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // A part lying in the mid-plane has no lateral width; fall back to half its size so
  // neighbouring copies do not coincide.
  double width = joints.empty() ? 0.0 : hi - lo;
  width = std::max(width, 0.5 * bounds(joints).diagonal());

  Affine mirror = Affine::Identity();
  mirror.linear() = Eigen::Matrix3d::Identity() - 2.0 * lat * lat.transpose();
  mirror.translation() = 2.0 * plane_origin.dot(lat) * lat;

  for (int k = 1; static_cast<int>(out.size()) < copies; ++k) {
    Affine shifted = Affine::Identity();
    shifted.translation() = k * width * lat;
    out.push_back(shifted);
    out.push_back(mirror * shifted);
  }
  return out;
}

std::vector<std::vector<Vec3>> instantiate_copies(std::span<const Vec3> joints, int copies,
                                                  const OrientationFrame& frame, const Vec3& plane_origin) {
  std::vector<std::vector<Vec3>> out;
  for (const auto& t : copy_transforms(joints, copies, frame, plane_origin)) {
    auto& c = out.emplace_back();
    c.reserve(joints.size());
    for (const auto& p : joints) c.push_back(t * p);
  }
  return out;
}

const PlanPart* AssemblyPlan::find(const PartRef& ref) const {
  for (const auto& p : parts) {
    if (p.ref == ref) return &p;
  }
  return nullptr;
}

std::vector<std::string> validate_plan(const AssemblyPlan& plan, std::span<const PartGeometry> parts) {
  std::vector<std::string> out;
  if (plan.parts.empty()) out.push_back("plan declares no parts");

  std::vector<int> unique;
  for (std::size_t i = 0; i < plan.parts.size(); ++i) {
    const auto& p = plan.parts[i];
    bool dup = false;
    for (std::size_t j = 0; j < i; ++j) dup = dup || plan.parts[j].ref == p.ref;
    if (dup) out.push_back("duplicate part " + p.ref.key());
    if (p.copies < 1) out.push_back("part " + p.ref.key() + ": copies must be >= 1");
    if (!lookup(parts, p.ref)) out.push_back("part " + p.ref.key() + " has no geometry");
  }

  std::vector<bool> op_ok(plan.parts.size(), true);
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const auto& op = plan.ops[i];
    const PlanPart* target = plan.find(op.target);
    if (!target) out.push_back("op " + std::to_string(i) + " targets undeclared part " + op.target.key());
    for (const auto& v : op.violations()) {
      out.push_back("op " + std::to_string(i) + ": " + v);
      if (target) op_ok[target - plan.parts.data()] = false;
    }
  }

  UnionFind uf(static_cast<int>(plan.parts.size()));
  int groups = static_cast<int>(plan.parts.size());
  bool cycle = false;
  for (std::size_t i = 0; i < plan.attachments.size(); ++i) {
    const auto& at = plan.attachments[i];
    std::string tag = "attachment " + std::to_string(i);
    const PlanPart* from = plan.find(at.from.part);
    const PlanPart* to = plan.find(at.to.part);
    bool ok = true;
    for (const auto* end : {&at.from, &at.to}) {
      if (!plan.find(end->part)) {
        out.push_back(tag + " references undeclared part " + end->part.key());
        ok = false;
        continue;
      }
      const PartGeometry* g = lookup(parts, end->part);
      if (g && (end->joint < 0 || end->joint >= g->skeleton.joint_count())) {
        out.push_back(tag + ": joint " + std::to_string(end->joint) + " out of range for " + end->part.key());
      }
    }
    if (!ok) continue;
    if (from == to) {
      out.push_back(tag + " joins " + at.from.part.key() + " to itself");
      continue;
    }
    if (!uf.unite(static_cast<int>(from - plan.parts.data()), static_cast<int>(to - plan.parts.data()))) {
      cycle = true;
    } else {
      --groups;
    }
  }
  if (cycle) out.push_back("attachment cycle");
  if (groups > 1) out.push_back(kDisconnected);

  // Geometric sanity: every copy of every part must stay within twice the canonical cube.
  const OrientationFrame* base_frame = nullptr;
  for (const auto& p : plan.parts) {
    if (const auto* g = lookup(parts, p.ref); g && !base_frame) base_frame = &g->frame;
  }
  for (std::size_t i = 0; i < plan.parts.size(); ++i) {
    const auto& p = plan.parts[i];
    const PartGeometry* g = lookup(parts, p.ref);
    if (!g || !op_ok[i] || p.copies < 1) continue;
    std::vector<Vec3> joints = g->skeleton.joints;
    run_ops(plan, p.ref, joints);
    Vec3 origin = joints.empty() ? Vec3::Zero() : joints[0];
    for (const auto& copy : instantiate_copies(joints, p.copies, *base_frame, origin)) {
      bool inside = std::all_of(copy.begin(), copy.end(), [](const Vec3& q) {
        return q.allFinite() && (q.array().abs() <= 1.0).all();
      });
      if (!inside) {
        out.push_back("part " + p.ref.key() + " leaves the [-1, 1]^3 bounds");
        break;
      }
    }
  }
  return out;
}

AssembledSkeleton execute_plan(std::span<const PartGeometry> parts, const AssemblyPlan& plan) {
  auto violations = validate_plan(plan, parts);
  bool disconnected = std::erase(violations, std::string(kDisconnected)) > 0;
  if (!violations.empty()) throw Error(Errc::PlanRejected, "plan rejected: " + violations.front(), violations);

  // Copies mirror about the base part's (forward, up) plane orientation.
  const PartGeometry* base = lookup(parts, plan.parts.front().ref);
  for (const auto& p : plan.parts) {
    if (p.ref.label == RegionLabel::Body) {
      base = lookup(parts, p.ref);
      break;
    }
  }

  AssembledSkeleton out;
  std::vector<std::vector<int>> first_of(plan.parts.size());  // first merged joint per copy
  for (std::size_t i = 0; i < plan.parts.size(); ++i) {
    const auto& p = plan.parts[i];
    const PartGeometry& g = *lookup(parts, p.ref);
    std::vector<Vec3> joints = g.skeleton.joints;
    Affine ops = run_ops(plan, p.ref, joints);
    Vec3 origin = joints.empty() ? Vec3::Zero() : joints[0];
    auto transforms = copy_transforms(joints, p.copies, base->frame, origin);
    for (int c = 0; c < p.copies; ++c) {
      int first = out.skeleton.joint_count();
      first_of[i].push_back(first);
      for (int j = 0; j < g.skeleton.joint_count(); ++j) {
        out.skeleton.joints.push_back(transforms[c] * joints[j]);
        out.provenance.push_back({p.ref, c, j});
      }
      for (const auto& b : g.skeleton.bones) out.skeleton.bones.push_back({first + b.a, first + b.b});
      out.instances.push_back({p.ref, c, transforms[c] * ops, first, g.skeleton.joint_count()});
    }
  }

  auto index_of = [&](const PartRef& ref) {
    return static_cast<std::size_t>(plan.find(ref) - plan.parts.data());
  };
  for (const auto& at : plan.attachments) {
    std::size_t fi = index_of(at.from.part);
    std::size_t ti = index_of(at.to.part);
    int nf = plan.parts[fi].copies;
    int nt = plan.parts[ti].copies;
    for (int c = 0; c < std::max(nf, nt); ++c) {
      out.skeleton.bones.push_back({first_of[fi][c % nf] + at.from.joint, first_of[ti][c % nt] + at.to.joint});
    }
  }

  std::size_t root_part = base ? index_of(base->ref) : 0;
  out.skeleton.root = first_of[root_part][0] + lookup(parts, plan.parts[root_part].ref)->skeleton.root;

  if (disconnected || !connected(out.skeleton)) {
    throw Error(Errc::DisconnectedResult, "assembled skeleton is disconnected");
  }
  return out;
}

}  // namespace muses
