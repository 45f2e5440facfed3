#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "muses/geometry.hpp"
#include "muses/skeleton.hpp"

namespace muses {

// Identifies one classified region of one source asset, e.g. "a1/head/1".
struct PartRef {
  std::string asset;
  RegionLabel label = RegionLabel::Body;
  int instance = 1;

  [[nodiscard]] std::string key() const;
  static PartRef parse(std::string_view text);

  friend bool operator==(const PartRef&, const PartRef&) = default;
  friend auto operator<=>(const PartRef&, const PartRef&) = default;
};

// An unset pivot means the part's attachment joint (index 0 of the joints operated on).
struct RotateOp {
  Vec3 axis = Vec3::UnitY();
  std::optional<Vec3> pivot;
  double angle_deg = 0.0;
};

struct TranslateOp {
  Vec3 direction = Vec3::UnitX();
  double distance = 0.0;
};

struct ScaleOp {
  double factor = 1.0;
  std::optional<Vec3> pivot;
};

struct EditOp {
  PartRef target;
  std::variant<RotateOp, TranslateOp, ScaleOp> action;

  static EditOp rotate(PartRef target, const Vec3& axis, std::optional<Vec3> pivot, double angle_deg);
  static EditOp translate(PartRef target, const Vec3& direction, double distance);
  static EditOp scale(PartRef target, double factor, std::optional<Vec3> pivot);

  [[nodiscard]] Affine affine(const Vec3& default_pivot = Vec3::Zero()) const;
  // Empty when the op satisfies its invariants.
  [[nodiscard]] std::vector<std::string> violations() const;
  [[nodiscard]] EditOp inverse() const;
};

std::vector<Vec3> apply_op(std::span<const Vec3> joints, const EditOp& op);

// Affine placement of each copy: one centered copy when `copies` is odd, then mirrored
// pairs at lateral offsets +-k * width about the (forward, up) plane through `plane_origin`.
std::vector<Affine> copy_transforms(std::span<const Vec3> joints, int copies, const OrientationFrame& frame,
                                    const Vec3& plane_origin = Vec3::Zero());
std::vector<std::vector<Vec3>> instantiate_copies(std::span<const Vec3> joints, int copies,
                                                  const OrientationFrame& frame,
                                                  const Vec3& plane_origin = Vec3::Zero());

struct PlanPart {
  PartRef ref;
  int copies = 1;
  bool symmetric = false;
  friend bool operator==(const PlanPart&, const PlanPart&) = default;
};

struct JointRef {
  PartRef part;
  int joint = 0;
  friend bool operator==(const JointRef&, const JointRef&) = default;
};

struct Attachment {
  JointRef from;
  JointRef to;
  friend bool operator==(const Attachment&, const Attachment&) = default;
};

struct AssemblyPlan {
  std::vector<PlanPart> parts;
  std::vector<EditOp> ops;
  std::vector<Attachment> attachments;

  [[nodiscard]] const PlanPart* find(const PartRef& ref) const;
};

// Source geometry of a part: its sub-skeleton with the attachment joint at index 0,
// in the coordinates of its source asset, plus that asset's orientation.
struct PartGeometry {
  PartRef ref;
  Skeleton skeleton;
  OrientationFrame frame;
  std::vector<int> source_joints;  // cleaned-skeleton joint behind each local joint, may be empty
};

struct JointProvenance {
  PartRef part;
  int copy = 0;
  int local = 0;
};

struct PartInstance {
  PartRef part;
  int copy = 0;
  Affine transform = Affine::Identity();
  int first_joint = 0;
  int joint_count = 0;
};

struct AssembledSkeleton {
  Skeleton skeleton;
  std::vector<JointProvenance> provenance;
  std::vector<PartInstance> instances;
};

std::vector<std::string> validate_plan(const AssemblyPlan& plan, std::span<const PartGeometry> parts);

// Ops, then copies, then attachments. Throws PlanRejected or DisconnectedResult.
AssembledSkeleton execute_plan(std::span<const PartGeometry> parts, const AssemblyPlan& plan);

// ---------------------------------------------------------------------------
// Planning

struct PartAttributes {
  RegionLabel category = RegionLabel::Body;
  Vec3 position = Vec3::Zero();
  Vec3 size = Vec3::Zero();
  Vec3 orientation = Vec3::UnitX();
};

// Where a region of the given label attaches on the base body. instance 0 matches any.
struct Socket {
  RegionLabel label = RegionLabel::Head;
  int instance = 0;
  int joint = 0;             // base-part-local joint index
  double bone_length = 0.0;  // body's own bone at this socket; <= 0 when unknown
};

struct PlannerPart {
  PartGeometry geometry;
  double root_bone_length = 0.0;  // bone adjacent to the part's attachment joint
  double trunk_length = 0.0;      // begin node to trunk junction in the source asset
  std::vector<Socket> sockets;    // only read on the base (body) part

  [[nodiscard]] PartAttributes attributes() const;
};

struct PlanRequest {
  std::vector<PlannerPart> parts;
  std::string text;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual AssemblyPlan plan(const PlanRequest& request) = 0;
};

// Deterministic offline planner: scale to the socket bone, align forward axes, move the
// attachment joint onto its socket.
class RulePlanner final : public PlannerBackend {
 public:
  AssemblyPlan plan(const PlanRequest& request) override;
};

// Validates the backend's plan; throws PlanRejected with every violation.
AssemblyPlan plan_assembly(const PlanRequest& request, PlannerBackend& backend);

// Explicit counts ("two", "3") directly in front of a region word.
std::map<RegionLabel, int> parse_multiplicity(std::string_view text);
// Region words mentioned anywhere in the text.
std::vector<RegionLabel> mentioned_regions(std::string_view text);

std::vector<PartGeometry> geometry_of(std::span<const PlannerPart> parts);

// The base part of an asset: its body plus every region whose label is not in `removed`.
// Local joint 0 is the begin node. Sockets cover every label.
PlannerPart base_part(const std::string& asset, const CleanSkeleton& clean, const Classification& c,
                      std::span<const RegionLabel> removed);
// One donor region with its anchor as local joint 0.
PlannerPart region_part(const std::string& asset, const CleanSkeleton& clean, const Classification& c,
                        const Region& region);

}  // namespace muses
