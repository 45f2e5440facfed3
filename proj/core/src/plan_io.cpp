#include "muses/plan_io.hpp"

#include "json_detail.hpp"

namespace muses {

namespace {

using detail::ojson;
using detail::require;
using detail::vec_from;
using detail::vec_json;

ojson part_json(const PlanPart& p) {
  ojson j;
  j["asset"] = p.ref.asset;
  j["region"] = std::string(to_string(p.ref.label));
  j["instance"] = p.ref.instance;
  j["copies"] = p.copies;
  j["symmetric"] = p.symmetric;
  return j;
}

ojson op_json(const EditOp& op) {
  ojson j;
  if (const auto* r = std::get_if<RotateOp>(&op.action)) {
    j["type"] = "rotate";
    j["target"] = op.target.key();
    j["axis"] = vec_json(r->axis);
    if (r->pivot) j["pivot"] = vec_json(*r->pivot);
    j["angle_deg"] = r->angle_deg;
  } else if (const auto* t = std::get_if<TranslateOp>(&op.action)) {
    j["type"] = "translate";
    j["target"] = op.target.key();
    j["dir"] = vec_json(t->direction);
    j["dist"] = t->distance;
  } else if (const auto* s = std::get_if<ScaleOp>(&op.action)) {
    j["type"] = "scale";
    j["target"] = op.target.key();
    j["factor"] = s->factor;
    if (s->pivot) j["pivot"] = vec_json(*s->pivot);
  }
  return j;
}

double number(const ojson& j, const char* key) {
  const ojson& v = require(j, key);
  if (!v.is_number()) throw Error(Errc::FormatError, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::string text(const ojson& j, const char* key) {
  const ojson& v = require(j, key);
  if (!v.is_string()) throw Error(Errc::FormatError, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

// A short reference names a label only; it stands for the unique declared part with that label.
PartRef resolve(PartRef ref, const std::vector<PlanPart>& parts) {
  if (!ref.asset.empty()) return ref;
  const PlanPart* hit = nullptr;
  for (const auto& p : parts) {
    if (p.ref.label != ref.label) continue;
    if (hit) throw Error(Errc::FormatError, "ambiguous part reference '" + std::string(to_string(ref.label)) + "'");
    hit = &p;
  }
  if (!hit) throw Error(Errc::FormatError, "unresolved part reference '" + std::string(to_string(ref.label)) + "'");
  return hit->ref;
}

PartRef part_ref(const std::string& s) {
  try {
    return PartRef::parse(s);
  } catch (const Error& e) {
    throw Error(Errc::FormatError, e.what());
  }
}

EditOp op_from(const ojson& o, const std::vector<PlanPart>& parts) {
  std::string type = text(o, "type");
  PartRef target = resolve(part_ref(text(o, "target")), parts);
  std::optional<Vec3> pivot;
  if (o.contains("pivot") && !o.at("pivot").is_null()) pivot = vec_from(o.at("pivot"), "pivot");
  if (type == "rotate") return EditOp::rotate(target, vec_from(require(o, "axis"), "axis"), pivot, number(o, "angle_deg"));
  if (type == "translate") return EditOp::translate(target, vec_from(require(o, "dir"), "dir"), number(o, "dist"));
  if (type == "scale") return EditOp::scale(target, number(o, "factor"), pivot);
  throw Error(Errc::FormatError, "unknown op type '" + type + "'");
}

}  // namespace

std::string joint_ref_key(const JointRef& ref) { return ref.part.key() + "/joint/" + std::to_string(ref.joint); }

JointRef parse_joint_ref(std::string_view s) {
  auto pos = s.rfind("/joint/");
  if (pos == std::string_view::npos) throw Error(Errc::FormatError, "bad joint reference '" + std::string(s) + "'");
  JointRef ref;
  ref.part = part_ref(std::string(s.substr(0, pos)));
  std::string idx(s.substr(pos + 7));
  try {
    std::size_t used = 0;
    ref.joint = std::stoi(idx, &used);
    if (used != idx.size()) throw std::invalid_argument(idx);
  } catch (const std::exception&) {
    throw Error(Errc::FormatError, "bad joint index in '" + std::string(s) + "'");
  }
  return ref;
}

std::string plan_to_json(const AssemblyPlan& plan) {
  ojson j;
  j["parts"] = ojson::array();
  for (const auto& p : plan.parts) j["parts"].push_back(part_json(p));
  j["ops"] = ojson::array();
  for (const auto& op : plan.ops) j["ops"].push_back(op_json(op));
  j["attach"] = ojson::array();
  for (const auto& a : plan.attachments) {
    j["attach"].push_back({{"from", joint_ref_key(a.from)}, {"to", joint_ref_key(a.to)}});
  }
  return j.dump(2) + "\n";
}

AssemblyPlan plan_from_json(std::string_view body) {
  ojson j = detail::parse(body);
  AssemblyPlan plan;
  try {
    for (const auto& p : require(j, "parts")) {
      PlanPart part;
      part.ref.asset = text(p, "asset");
      part.ref.label = parse_region_label(text(p, "region"));
      part.ref.instance = p.value("instance", 1);
      part.copies = p.value("copies", 1);
      part.symmetric = p.value("symmetric", part.copies >= 2);
      plan.parts.push_back(part);
    }
    if (j.contains("ops")) {
      for (const auto& o : j.at("ops")) {
        plan.ops.push_back(op_from(o, plan.parts));
      }
    }
    if (j.contains("attach")) {
      for (const auto& a : j.at("attach")) {
        JointRef from = parse_joint_ref(text(a, "from"));
        JointRef to = parse_joint_ref(text(a, "to"));
        from.part = resolve(from.part, plan.parts);
        to.part = resolve(to.part, plan.parts);
        plan.attachments.push_back({from, to});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::FormatError, std::string("bad plan JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::FormatError) throw;
    throw Error(Errc::FormatError, e.what());
  }
  return plan;
}

std::string op_to_json(const EditOp& op) { return op_json(op).dump(); }

EditOp op_from_json(std::string_view body, const std::vector<PlanPart>& declared) {
  ojson j = detail::parse(body);
  try {
    return op_from(j, declared);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::FormatError, std::string("bad op JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::FormatError) throw;
    throw Error(Errc::FormatError, e.what());
  }
}

std::string plan_request_json(const PlanRequest& request) {
  ojson j;
  j["parts"] = ojson::array();
  for (const auto& p : request.parts) j["parts"].push_back(part_json({p.geometry.ref, 1, false}));
  j["ops"] = ojson::array();
  j["attach"] = ojson::array();
  j["request"] = request.text;
  j["attributes"] = ojson::array();
  for (const auto& p : request.parts) {
    auto a = p.attributes();
    ojson e;
    e["part"] = p.geometry.ref.key();
    e["category"] = std::string(to_string(a.category));
    e["position"] = vec_json(a.position);
    e["size"] = vec_json(a.size);
    e["orientation"] = vec_json(a.orientation);
    j["attributes"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string assembled_to_json(const AssembledSkeleton& assembled) {
  ojson j;
  j["skeleton"] = detail::skeleton_json(assembled.skeleton);
  ojson prov = ojson::array();
  for (const auto& p : assembled.provenance) {
    prov.push_back({{"part", p.part.key()}, {"copy", p.copy}, {"joint", p.local}});
  }
  j["provenance"] = std::move(prov);
  ojson inst = ojson::array();
  for (const auto& i : assembled.instances) {
    ojson m = ojson::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) m.push_back(i.transform.matrix()(r, c));
    }
    inst.push_back({{"part", i.part.key()}, {"copy", i.copy}, {"first_joint", i.first_joint},
                    {"joint_count", i.joint_count}, {"transform", std::move(m)}});
  }
  j["instances"] = std::move(inst);
  return j.dump(2) + "\n";
}

}  // namespace muses
