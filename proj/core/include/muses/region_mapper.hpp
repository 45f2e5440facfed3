#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "muses/geometry.hpp"
#include "muses/layout.hpp"
#include "muses/skeleton.hpp"

namespace muses {

// Q x J joint influences per mesh vertex. Column j belongs to original skeleton joint
// joint_index_map[j].
struct SkinningMatrix {
  Eigen::MatrixXd weights;
  std::vector<int> joint_index_map;

  static SkinningMatrix identity_mapped(Eigen::MatrixXd weights);
  // Throws InvalidInput on negative or non-finite entries or a bad joint map.
  void validate() const;
  // Rows are scaled to sum to one; all-zero rows stay zero.
  void normalize_rows();
};

// Region weights over mesh vertices (Q x R) or over active voxels (L x R).
struct RegionWeights {
  Eigen::MatrixXd weights;
  std::vector<PartRef> region_order;
};
using RegionWeightMatrix = RegionWeights;
using SlatRegionWeights = RegionWeights;

inline constexpr double kRegionEpsilon = 1e-12;

struct TransferOptions {
  int k = 8;
  double distance_floor = 1e-8;
};

// groups[l] lists the original skeleton joints of region l.
RegionWeightMatrix aggregate_region_weights(const SkinningMatrix& w, std::span<const std::vector<int>> groups,
                                            std::vector<PartRef> region_order);
// Regions of a classified skeleton, in partition order, tagged with `asset`.
RegionWeightMatrix aggregate_region_weights(const SkinningMatrix& w, const CleanSkeleton& clean,
                                            const SemanticPartition& partition, const std::string& asset = {});

SlatRegionWeights knn_transfer(const RegionWeightMatrix& region_weights, std::span<const Vec3> vertices,
                               std::span<const Vec3> voxel_positions, const TransferOptions& options = {});

// Grid cell centre in canonical coordinates: (p + 0.5) / N - 0.5.
inline Vec3 voxel_to_canonical(int x, int y, int z, int resolution) {
  return (Vec3(x, y, z).array() + 0.5) / resolution - 0.5;
}

enum class AssignMode { Argmax, Threshold };

struct AssignOptions {
  AssignMode mode = AssignMode::Argmax;
  double tau = 0.5;
};

// Region columns per voxel. Argmax ties resolve to the earliest column; threshold mode
// may return several columns or none.
std::vector<std::vector<int>> assign_regions(const SlatRegionWeights& weights, const AssignOptions& options = {});
int argmax_region(const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace muses
