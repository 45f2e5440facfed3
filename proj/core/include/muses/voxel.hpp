#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "muses/geometry.hpp"
#include "muses/layout.hpp"
#include "muses/region_mapper.hpp"

namespace muses {

using Coord = std::array<int, 3>;

// Sparse structured latent: active voxel positions in {0..N-1}^3, C features each.
struct SparseLatent {
  int resolution = 64;
  int channels = 8;
  std::vector<Coord> positions;
  std::vector<float> features;  // size() * channels, row-major

  [[nodiscard]] int size() const { return static_cast<int>(positions.size()); }
  [[nodiscard]] std::span<const float> feature(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * channels, static_cast<std::size_t>(channels)};
  }
  // Throws InvalidInput on duplicate or out-of-range positions or non-finite features.
  void validate() const;
  // Reorders voxels lexicographically by (x, y, z).
  void sort();

  friend bool operator==(const SparseLatent&, const SparseLatent&) = default;
};

// One (part, copy) column of the composition.
struct RegionId {
  PartRef part;
  int copy = 0;

  [[nodiscard]] std::string key() const;
  friend bool operator==(const RegionId&, const RegionId&) = default;
};

struct RegionLatent {
  RegionId id;
  SparseLatent latent;
  std::vector<double> weights;  // per voxel, the voxel's weight for this region
};

struct ExtractedRegions {
  std::vector<RegionLatent> regions;  // one per weight column, in column order
  std::vector<PartRef> empty;         // columns that received no voxel
};

struct DenseCoarseGrid {
  int resolution = 16;
  int channels = 8;
  int regions = 0;
  std::vector<std::uint8_t> occupancy;  // D^3, index (x * D + y) * D + z
  std::vector<std::uint8_t> filled;     // cells created by fill_gaps
  std::vector<double> features;         // D^3 * C
  std::vector<double> region_weights;   // D^3 * R

  DenseCoarseGrid() = default;
  DenseCoarseGrid(int resolution, int channels, int regions);

  [[nodiscard]] int cell_count() const { return resolution * resolution * resolution; }
  [[nodiscard]] int index(int x, int y, int z) const { return (x * resolution + y) * resolution + z; }
  [[nodiscard]] int occupied_count() const;
  [[nodiscard]] int dominant_region(int cell) const;
};

struct ComposedLatent {
  SparseLatent latent;
  std::vector<RegionId> regions;
  std::vector<int> provenance;  // dominant region column per voxel
  std::vector<Coord> seam_mask;  // sorted gap-fill positions
};

struct ComposeOptions {
  int coarse_resolution = 16;
  int fill_passes = 2;
};

// Weighted mean of the overlapping contributions, sum(w_i * f_i) / sum(w_i). A single
// contribution is returned unchanged.
std::vector<double> merge_overlaps(std::span<const double> weights, std::span<const std::vector<double>> features);
double merge_overlaps(std::span<const double> weights, std::span<const double> scalar_features);

ExtractedRegions extract_region_latents(const SparseLatent& slat, const SlatRegionWeights& weights);

// Supersampling factor used for a transform: 1 for axis-aligned non-enlarging maps.
int supersampling_factor(const Affine& transform);
RegionLatent transform_voxels(const RegionLatent& region, const Affine& transform);

DenseCoarseGrid downsample_to_coarse(std::span<const RegionLatent> regions, int coarse_resolution = 16);
DenseCoarseGrid fill_gaps(const DenseCoarseGrid& grid, int passes = 2);
ComposedLatent upsample_to_slat(const DenseCoarseGrid& grid, std::span<const RegionLatent> regions);

// transform_voxels -> downsample_to_coarse -> fill_gaps -> upsample_to_slat.
ComposedLatent compose(std::span<const RegionLatent> regions, std::span<const Affine> transforms,
                       const ComposeOptions& options = {});

// Run-length encoded coarse occupancy: alternating run lengths starting with empty cells.
std::vector<int> occupancy_rle(const DenseCoarseGrid& grid);
DenseCoarseGrid coarse_occupancy(const SparseLatent& latent, int coarse_resolution = 16);

}  // namespace muses
