#include "muses/session.hpp"

#include <algorithm>
#include <filesystem>

#include "muses/bundle_io.hpp"
#include "muses/error.hpp"
#include "muses/fixtures.hpp"
#include "muses/region_mapper.hpp"

namespace muses {

namespace {

bool path_like(const std::string& s) {
  return s.find('/') != std::string::npos || s.find('\\') != std::string::npos || s.ends_with(".json") ||
         std::filesystem::exists(s);
}

bool contains(const std::vector<RegionLabel>& v, RegionLabel l) { return std::find(v.begin(), v.end(), l) != v.end(); }

}  // namespace

Session::Session(PipelineConfig cfg, std::shared_ptr<const ModelGateway> gateway)
    : cfg_(std::move(cfg)), gateway_(std::move(gateway)) {
  if (!gateway_) throw Error(Errc::InvalidInput, "session needs a gateway");
}

AssetBundle Session::load_source(const std::string& source) const {
  if (source.starts_with("fixture:")) {
    std::string name = source.substr(8);
    auto kind = fixture_kind(name);
    if (!kind) throw Error(Errc::InvalidInput, "unknown fixture '" + name + "'");
    return make_fixture_bundle(*kind);
  }
  if (path_like(source)) return bundle_from_json(read_file(source));
  return gateway_->generate_asset(source, cfg_.gen3d);
}

const LoadedAsset& Session::add_asset(AssetBundle bundle) {
  bundle.validate();
  if (!cfg_.rig.is_fixture()) {
    auto [skeleton, skinning] = gateway_->rig_asset(bundle.mesh, cfg_.rig);
    bundle.skeleton = std::move(skeleton);
    bundle.skinning = std::move(skinning);
  }
  LoadedAsset a;
  a.id = "a" + std::to_string(assets_.size());
  a.clean = clean_skeleton(bundle.skeleton, cfg_.clean);
  a.bundle = std::move(bundle);
  assets_.push_back(std::move(a));
  ++revision_;
  return assets_.back();
}

void Session::classify() {
  for (auto& a : assets_) {
    if (a.classification) continue;
    OrientationFrame frame = estimate_orientation(a.clean);
    Classification c = classify_regions(a.clean, frame, cfg_.classify);

    auto region_weights = aggregate_region_weights(a.bundle.skinning, a.clean, c.partition, a.id);
    const auto& slat = a.bundle.slat;
    std::vector<Vec3> centers;
    centers.reserve(slat.positions.size());
    for (const auto& p : slat.positions) centers.push_back(voxel_to_canonical(p[0], p[1], p[2], slat.resolution));
    auto voxel_weights = knn_transfer(region_weights, a.bundle.mesh.vertices, centers, cfg_.transfer);
    auto assigned = assign_regions(voxel_weights);
    a.voxel_region.resize(assigned.size());
    a.voxel_weight.resize(assigned.size());
    for (std::size_t i = 0; i < assigned.size(); ++i) {
      a.voxel_region[i] = assigned[i].front();
      a.voxel_weight[i] = voxel_weights.weights(static_cast<Eigen::Index>(i), assigned[i].front());
    }
    a.classification = std::move(c);
  }
  ++revision_;
}

const LoadedAsset& Session::asset(const std::string& id) const {
  for (const auto& a : assets_) {
    if (a.id == id) return a;
  }
  throw Error(Errc::InvalidInput, "unknown asset '" + id + "'");
}

void Session::require_classified() const {
  if (assets_.empty()) throw Error(Errc::InvalidInput, "session has no assets");
  for (const auto& a : assets_) {
    if (!a.classification) throw Error(Errc::InvalidInput, "asset " + a.id + " is not classified yet");
  }
}

PlanRequest Session::plan_request(const std::string& text) const {
  require_classified();
  std::vector<std::pair<RegionLabel, std::size_t>> chosen;
  for (RegionLabel l : mentioned_regions(text)) {
    if (l == RegionLabel::Body) continue;
    std::optional<std::size_t> donor;
    for (std::size_t i = assets_.size(); i-- > 1;) {
      if (assets_[i].classification->partition.count(l) > 0) {
        donor = i;
        break;
      }
    }
    if (!donor && assets_[0].classification->partition.count(l) > 0) donor = 0;
    if (donor) chosen.emplace_back(l, *donor);
  }
  std::vector<RegionLabel> removed;
  for (const auto& c : chosen) removed.push_back(c.first);

  const LoadedAsset& base = assets_[0];
  PlanRequest request;
  request.text = text;
  request.parts.push_back(base_part(base.id, base.clean, *base.classification, removed));
  for (const auto& [label, donor] : chosen) {
    const LoadedAsset& d = assets_[donor];
    for (const auto& r : d.classification->partition.regions) {
      if (r.label == label) request.parts.push_back(region_part(d.id, d.clean, *d.classification, r));
    }
  }
  return request;
}

std::vector<PlannerPart> Session::parts_for(const AssemblyPlan& plan, std::vector<RegionLabel>& removed) const {
  require_classified();
  removed.clear();
  for (const auto& p : plan.parts) {
    if (p.ref.label != RegionLabel::Body && !contains(removed, p.ref.label)) removed.push_back(p.ref.label);
  }
  std::vector<PlannerPart> out;
  for (const auto& p : plan.parts) {
    auto it = std::find_if(assets_.begin(), assets_.end(), [&](const LoadedAsset& a) { return a.id == p.ref.asset; });
    if (it == assets_.end()) continue;  // reported by validation as a part without geometry
    const Classification& c = *it->classification;
    if (p.ref.label == RegionLabel::Body) {
      if (p.ref.instance == 1) out.push_back(base_part(it->id, it->clean, c, removed));
      continue;
    }
    if (const Region* r = c.partition.find(p.ref.label, p.ref.instance)) {
      out.push_back(region_part(it->id, it->clean, c, *r));
    }
  }
  return out;
}

void Session::adopt(AssemblyPlan plan, std::vector<PlannerPart> parts, std::vector<RegionLabel> removed) {
  AssembledSkeleton assembled = execute_plan(geometry_of(parts), plan);
  plan_ = std::move(plan);
  parts_ = std::move(parts);
  removed_ = std::move(removed);
  assembled_ = std::move(assembled);
  composed_.reset();
  ++revision_;
}

const AssemblyPlan& Session::plan(const std::string& text) {
  PlanRequest request = plan_request(text);
  AssemblyPlan plan;
  if (cfg_.planner == "llm") {
    GatewayPlanner planner(*gateway_, cfg_.llm);
    plan = plan_assembly(request, planner);
  } else {
    RulePlanner planner;
    plan = plan_assembly(request, planner);
  }
  std::vector<RegionLabel> removed;
  for (const auto& p : request.parts) {
    if (p.geometry.ref.label != RegionLabel::Body && !contains(removed, p.geometry.ref.label)) {
      removed.push_back(p.geometry.ref.label);
    }
  }
  adopt(std::move(plan), std::move(request.parts), std::move(removed));
  return *plan_;
}

const AssemblyPlan& Session::set_plan(AssemblyPlan plan) {
  std::vector<RegionLabel> removed;
  auto parts = parts_for(plan, removed);
  auto violations = validate_plan(plan, geometry_of(parts));
  if (!violations.empty()) throw Error(Errc::PlanRejected, "plan rejected: " + violations.front(), violations);
  adopt(std::move(plan), std::move(parts), std::move(removed));
  return *plan_;
}

const AssembledSkeleton& Session::apply_op(const EditOp& op) {
  if (!plan_) throw Error(Errc::InvalidInput, "session has no plan to edit");
  AssemblyPlan next = *plan_;
  next.ops.push_back(op);
  auto violations = validate_plan(next, geometry_of(parts_));
  if (!violations.empty()) throw Error(Errc::PlanRejected, "op rejected: " + violations.front(), violations);
  adopt(std::move(next), parts_, removed_);
  return *assembled_;
}

const ComposedLatent& Session::compose() {
  composed_ = composition();
  ++revision_;
  return *composed_;
}

ComposedLatent Session::composition() const {
  if (!assembled_) throw Error(Errc::InvalidInput, "session has no assembled skeleton to compose");
  std::vector<RegionLatent> regions;
  std::vector<Affine> transforms;
  for (const auto& inst : assembled_->instances) {
    const LoadedAsset& a = asset(inst.part.asset);
    const auto& partition = a.classification->partition;
    RegionLatent r{{inst.part, inst.copy}, {a.bundle.slat.resolution, a.bundle.slat.channels, {}, {}}, {}};
    for (int v = 0; v < a.bundle.slat.size(); ++v) {
      const Region& region = partition.regions[a.voxel_region[v]];
      bool take = inst.part.label == RegionLabel::Body
                      ? region.label == RegionLabel::Body || !contains(removed_, region.label)
                      : region.label == inst.part.label && region.instance == inst.part.instance;
      if (!take) continue;
      r.latent.positions.push_back(a.bundle.slat.positions[v]);
      auto f = a.bundle.slat.feature(v);
      r.latent.features.insert(r.latent.features.end(), f.begin(), f.end());
      r.weights.push_back(a.voxel_weight[v]);
    }
    if (r.latent.positions.empty()) continue;
    regions.push_back(std::move(r));
    transforms.push_back(inst.transform);
  }
  if (regions.empty()) throw Error(Errc::InvalidInput, "no part carries any voxels");
  return muses::compose(regions, transforms, cfg_.compose);
}

}  // namespace muses
