#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "muses/geometry.hpp"

namespace muses {

struct Bone {
  int a = 0;
  int b = 0;
  friend bool operator==(const Bone&, const Bone&) = default;
};

// Joint-position graph in the canonical unit cube [-0.5, 0.5]^3.
struct Skeleton {
  std::vector<Vec3> joints;
  std::vector<Bone> bones;
  int root = 0;
  std::optional<std::vector<std::string>> names;

  [[nodiscard]] int joint_count() const { return static_cast<int>(joints.size()); }
  // Throws Error(InvalidInput) when an invariant is broken.
  void validate() const;
  [[nodiscard]] std::vector<std::vector<int>> adjacency() const;

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct CleanSkeleton {
  Skeleton skeleton;
  // original_joint_map[i] lists the original joints represented by retained joint i.
  std::vector<std::vector<int>> original_joint_map;
  std::vector<std::vector<int>> pruned_branches;

  friend bool operator==(const CleanSkeleton&, const CleanSkeleton&) = default;
};

struct OrientationFrame {
  Vec3 forward = Vec3::UnitX();
  Vec3 up = Vec3::UnitY();
  Vec3 lateral = Vec3::UnitY().cross(Vec3::UnitX());

  // Builds a frame from a (not necessarily unit, not necessarily horizontal) forward
  // vector; the vertical component is discarded and up is fixed to +y.
  static OrientationFrame from_forward(const Vec3& forward);
  [[nodiscard]] OrientationFrame flipped() const { return from_forward(-forward); }
};

enum class RegionLabel : std::uint8_t { Body, Leg, Wing, Tail, Head };

std::string_view to_string(RegionLabel label);
RegionLabel parse_region_label(std::string_view text);  // accepts singular/plural, any case

struct Region {
  RegionLabel label = RegionLabel::Body;
  int instance = 1;
  std::vector<int> joints;  // sorted; excludes the anchor for non-body regions
  std::vector<int> bones;   // sorted indices into skeleton.bones
  int anchor = -1;          // body joint the branch hangs from, -1 for the body itself

  friend bool operator==(const Region&, const Region&) = default;
};

struct SemanticPartition {
  std::vector<Region> regions;
  int begin_node = 0;
  std::optional<int> trunk_junction;

  [[nodiscard]] const Region* find(RegionLabel label, int instance = 1) const;
  [[nodiscard]] int count(RegionLabel label) const;

  friend bool operator==(const SemanticPartition&, const SemanticPartition&) = default;
};

struct Classification {
  SemanticPartition partition;
  OrientationFrame frame;  // frame with the forward sign that won
  int score = 0;
};

struct CleanOptions {
  double prune_fraction = 0.05;
  double collinear_tolerance_deg = 5.0;
};

struct ClassifyOptions {
  // Tail endpoint must lie within this fraction of the lateral extent from the centroid.
  double tail_center_fraction = 0.15;
  // Mirrored branch endpoints must agree within this fraction of the bbox diagonal.
  double symmetry_fraction = 0.1;
};

CleanSkeleton clean_skeleton(const Skeleton& s, const CleanOptions& options = {});
inline CleanSkeleton clean_skeleton(const Skeleton& s, double prune_fraction) {
  return clean_skeleton(s, CleanOptions{prune_fraction});
}

OrientationFrame estimate_orientation(const Skeleton& s);
inline OrientationFrame estimate_orientation(const CleanSkeleton& s) {
  return estimate_orientation(s.skeleton);
}

int select_begin_node(const Skeleton& s);
inline int select_begin_node(const CleanSkeleton& s) { return select_begin_node(s.skeleton); }

std::optional<int> find_trunk_junction(const Skeleton& s, const OrientationFrame& frame, int begin);
inline std::optional<int> find_trunk_junction(const CleanSkeleton& s, const OrientationFrame& frame,
                                              int begin) {
  return find_trunk_junction(s.skeleton, frame, begin);
}

Classification classify_regions(const CleanSkeleton& s, const OrientationFrame& frame,
                                const ClassifyOptions& options = {});

// Maps every region's retained joints back to original joint indices.
std::vector<std::vector<int>> original_region_joints(const CleanSkeleton& clean,
                                                     const SemanticPartition& partition);

}  // namespace muses
