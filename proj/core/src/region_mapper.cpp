#include "muses/region_mapper.hpp"

#include <algorithm>
#include <cmath>

#include "muses/error.hpp"
#include "muses/knn.hpp"

namespace muses {

SkinningMatrix SkinningMatrix::identity_mapped(Eigen::MatrixXd weights) {
  SkinningMatrix s;
  s.joint_index_map.resize(weights.cols());
  for (Eigen::Index j = 0; j < weights.cols(); ++j) s.joint_index_map[j] = static_cast<int>(j);
  s.weights = std::move(weights);
  return s;
}

void SkinningMatrix::validate() const {
  if (static_cast<Eigen::Index>(joint_index_map.size()) != weights.cols()) {
    throw Error(Errc::InvalidInput, "joint_index_map must have one entry per skinning column");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw Error(Errc::InvalidInput, "skinning weights must be finite and non-negative");
  }
}

void SkinningMatrix::normalize_rows() {
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    double sum = weights.row(i).sum();
    if (sum > 0.0) weights.row(i) /= sum;
  }
}

RegionWeightMatrix aggregate_region_weights(const SkinningMatrix& w, std::span<const std::vector<int>> groups,
                                            std::vector<PartRef> region_order) {
  w.validate();
  if (region_order.size() != groups.size()) {
    throw Error(Errc::InvalidInput, "region_order must name every group");
  }
  // Column lists per region, through the joint map.
  std::vector<std::vector<Eigen::Index>> columns(groups.size());
  for (std::size_t l = 0; l < groups.size(); ++l) {
    for (int joint : groups[l]) {
      bool found = false;
      for (std::size_t c = 0; c < w.joint_index_map.size(); ++c) {
        if (w.joint_index_map[c] == joint) {
          columns[l].push_back(static_cast<Eigen::Index>(c));
          found = true;
        }
      }
      if (!found) throw Error(Errc::UnmappedJoint, "joint " + std::to_string(joint) + " has no skinning column");
    }
  }

  const Eigen::Index q = w.weights.rows();
  const auto r = static_cast<Eigen::Index>(groups.size());
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(q, r);
  for (Eigen::Index l = 0; l < r; ++l) {
    for (auto c : columns[l]) sums.col(l) += w.weights.col(c);
  }
  RegionWeightMatrix out{Eigen::MatrixXd(q, r), std::move(region_order)};
  for (Eigen::Index i = 0; i < q; ++i) {
    double denom = std::max(sums.row(i).sum(), kRegionEpsilon);
    out.weights.row(i) = sums.row(i) / denom;
  }
  return out;
}

RegionWeightMatrix aggregate_region_weights(const SkinningMatrix& w, const CleanSkeleton& clean,
                                            const SemanticPartition& partition, const std::string& asset) {
  auto groups = original_region_joints(clean, partition);
  std::vector<PartRef> order;
  for (const auto& r : partition.regions) order.push_back({asset, r.label, r.instance});
  return aggregate_region_weights(w, groups, std::move(order));
}

SlatRegionWeights knn_transfer(const RegionWeightMatrix& region_weights, std::span<const Vec3> vertices,
                               std::span<const Vec3> voxel_positions, const TransferOptions& options) {
  if (vertices.empty()) throw Error(Errc::EmptyMesh, "mesh has no vertices");
  if (options.k < 1 || options.k > static_cast<int>(vertices.size())) {
    throw Error(Errc::InvalidInput, "k must lie in [1, Q]");
  }
  if (!(options.distance_floor > 0.0)) throw Error(Errc::InvalidInput, "distance floor must be positive");
  if (region_weights.weights.rows() != static_cast<Eigen::Index>(vertices.size())) {
    throw Error(Errc::InvalidInput, "region weights need one row per vertex");
  }

  KdTree tree(vertices);
  const Eigen::Index r = region_weights.weights.cols();
  SlatRegionWeights out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(voxel_positions.size()), r),
                        region_weights.region_order};
  std::vector<double> alpha;
  for (std::size_t i = 0; i < voxel_positions.size(); ++i) {
    auto nn = tree.nearest(voxel_positions[i], options.k);
    alpha.resize(nn.size());
    double total = 0.0;
    for (std::size_t s = 0; s < nn.size(); ++s) {
      alpha[s] = 1.0 / std::max(nn[s].distance, options.distance_floor);
      total += alpha[s];
    }
    auto row = out.weights.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index c = 0; c < r; ++c) {
      // A column shared by every neighbour is copied so the convex combination stays exact.
      double first = region_weights.weights(nn[0].index, c);
      bool uniform = std::all_of(nn.begin(), nn.end(),
                                 [&](const Neighbor& n) { return region_weights.weights(n.index, c) == first; });
      if (uniform) {
        row[c] = first;
        continue;
      }
      double acc = 0.0;
      for (std::size_t s = 0; s < nn.size(); ++s) acc += (alpha[s] / total) * region_weights.weights(nn[s].index, c);
      row[c] = acc;
    }
  }
  return out;
}

int argmax_region(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = static_cast<int>(c);
  }
  return best;
}

std::vector<std::vector<int>> assign_regions(const SlatRegionWeights& weights, const AssignOptions& options) {
  std::vector<std::vector<int>> out(weights.weights.rows());
  if (weights.weights.cols() == 0) return out;
  for (Eigen::Index i = 0; i < weights.weights.rows(); ++i) {
    auto row = weights.weights.row(i);
    if (options.mode == AssignMode::Argmax) {
      out[i].push_back(argmax_region(row));
    } else {
      for (Eigen::Index c = 0; c < row.size(); ++c) {
        if (row[c] >= options.tau) out[i].push_back(static_cast<int>(c));
      }
    }
  }
  return out;
}

}  // namespace muses
