#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "muses/config.hpp"
#include "muses/gateway.hpp"
#include "muses/layout.hpp"
#include "muses/skeleton.hpp"
#include "muses/voxel.hpp"

namespace muses {

struct LoadedAsset {
  std::string id;  // "a0", "a1", ... in load order; a0 is the base creature
  AssetBundle bundle;
  CleanSkeleton clean;
  std::optional<Classification> classification;
  // Per voxel: partition region index (argmax of the transferred region weights) and its weight.
  std::vector<int> voxel_region;
  std::vector<double> voxel_weight;
};

// Engine state shared by the batch pipeline and the service. Not thread-safe; callers
// serialize access. Every mutation bumps the revision.
class Session {
 public:
  Session(PipelineConfig cfg, std::shared_ptr<const ModelGateway> gateway);

  // "fixture:<template>", an existing bundle file (or any path-like string), or a prompt.
  [[nodiscard]] AssetBundle load_source(const std::string& source) const;
  const LoadedAsset& add_asset(AssetBundle bundle);
  void classify();

  // Parts chosen for a text request: the base body minus every requested label, plus the
  // requested regions from the last asset that has them.
  [[nodiscard]] PlanRequest plan_request(const std::string& text) const;
  const AssemblyPlan& plan(const std::string& text);
  // Adopts an explicit plan; the part library is rebuilt from its declarations.
  const AssemblyPlan& set_plan(AssemblyPlan plan);
  // Appends one op, re-validates and re-executes; the plan is unchanged on failure.
  const AssembledSkeleton& apply_op(const EditOp& op);
  const ComposedLatent& compose();
  // Composition of the current assembly without storing it (previews).
  [[nodiscard]] ComposedLatent composition() const;

  [[nodiscard]] const PipelineConfig& config() const { return cfg_; }
  [[nodiscard]] const ModelGateway& gateway() const { return *gateway_; }
  [[nodiscard]] const std::vector<LoadedAsset>& assets() const { return assets_; }
  [[nodiscard]] const std::optional<AssemblyPlan>& current_plan() const { return plan_; }
  [[nodiscard]] const std::optional<AssembledSkeleton>& assembled() const { return assembled_; }
  [[nodiscard]] const std::optional<ComposedLatent>& composed() const { return composed_; }
  [[nodiscard]] const std::vector<PlannerPart>& parts() const { return parts_; }
  [[nodiscard]] std::uint64_t revision() const { return revision_; }

 private:
  const LoadedAsset& asset(const std::string& id) const;
  std::vector<PlannerPart> parts_for(const AssemblyPlan& plan, std::vector<RegionLabel>& removed) const;
  void adopt(AssemblyPlan plan, std::vector<PlannerPart> parts, std::vector<RegionLabel> removed);
  void require_classified() const;

  PipelineConfig cfg_;
  std::shared_ptr<const ModelGateway> gateway_;
  std::vector<LoadedAsset> assets_;
  std::vector<PlannerPart> parts_;
  std::vector<RegionLabel> removed_;  // labels the base bodies gave up to donor parts
  std::optional<AssemblyPlan> plan_;
  std::optional<AssembledSkeleton> assembled_;
  std::optional<ComposedLatent> composed_;
  std::uint64_t revision_ = 0;
};

}  // namespace muses
