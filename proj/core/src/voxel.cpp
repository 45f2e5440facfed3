#include "muses/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "muses/error.hpp"

namespace muses {

namespace {

std::int64_t linear(const Coord& c, int n) {
  return (static_cast<std::int64_t>(c[0]) * n + c[1]) * n + c[2];
}

Coord unlinear(std::int64_t i, int n) {
  return {static_cast<int>(i / (static_cast<std::int64_t>(n) * n)), static_cast<int>((i / n) % n),
          static_cast<int>(i % n)};
}

std::vector<int> sorted_order(const SparseLatent& l) {
  std::vector<int> order(l.positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return l.positions[a] < l.positions[b]; });
  return order;
}

void check_weights(std::span<const double> w) {
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(Errc::InvalidInput, "merge weights must be finite and >= 0");
  }
}

struct Entry {
  std::int64_t cell;
  int region;
  int voxel;
};

}  // namespace

void SparseLatent::validate() const {
  if (resolution < 1 || channels < 1) throw Error(Errc::InvalidInput, "latent resolution and channels must be >= 1");
  if (features.size() != positions.size() * static_cast<std::size_t>(channels)) {
    throw Error(Errc::InvalidInput, "latent feature count does not match voxel count");
  }
  for (const auto& p : positions) {
    for (int v : p) {
      if (v < 0 || v >= resolution) throw Error(Errc::InvalidInput, "latent voxel position out of range");
    }
  }
  std::vector<Coord> sorted = positions;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::InvalidInput, "latent voxel positions must be unique");
  }
  for (float f : features) {
    if (!std::isfinite(f)) throw Error(Errc::InvalidInput, "latent features must be finite");
  }
}

void SparseLatent::sort() {
  auto order = sorted_order(*this);
  SparseLatent out{resolution, channels, {}, {}};
  out.positions.reserve(positions.size());
  out.features.reserve(features.size());
  for (int i : order) {
    out.positions.push_back(positions[i]);
    auto f = feature(i);
    out.features.insert(out.features.end(), f.begin(), f.end());
  }
  *this = std::move(out);
}

std::string RegionId::key() const { return part.key() + "#" + std::to_string(copy); }

DenseCoarseGrid::DenseCoarseGrid(int resolution_, int channels_, int regions_)
    : resolution(resolution_),
      channels(channels_),
      regions(regions_),
      occupancy(static_cast<std::size_t>(cell_count()), 0),
      filled(static_cast<std::size_t>(cell_count()), 0),
      features(static_cast<std::size_t>(cell_count()) * channels_, 0.0),
      region_weights(static_cast<std::size_t>(cell_count()) * regions_, 0.0) {}

int DenseCoarseGrid::occupied_count() const {
  return static_cast<int>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

int DenseCoarseGrid::dominant_region(int cell) const {
  const double* row = region_weights.data() + static_cast<std::size_t>(cell) * regions;
  int best = 0;
  for (int r = 1; r < regions; ++r) {
    if (row[r] > row[best]) best = r;
  }
  return best;
}

std::vector<double> merge_overlaps(std::span<const double> weights, std::span<const std::vector<double>> features) {
  if (weights.empty() || weights.size() != features.size()) {
    throw Error(Errc::InvalidInput, "merge needs one weight per feature and at least one of each");
  }
  check_weights(weights);
  const std::size_t c = features[0].size();
  for (const auto& f : features) {
    if (f.size() != c) throw Error(Errc::InvalidInput, "merged features must share a channel count");
  }
  double sw = 0.0;
  for (double w : weights) sw += w;
  if (sw == 0.0) throw Error(Errc::AllZeroWeights, "every overlapping contribution has zero weight");
  if (weights.size() == 1) return features[0];
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (std::size_t k = 0; k < c; ++k) out[k] += weights[i] * features[i][k];
  }
  // The quotient can round one ulp past the inputs; the exact mean never does.
  for (std::size_t k = 0; k < c; ++k) {
    double lo = features[0][k], hi = features[0][k];
    for (const auto& f : features) {
      lo = std::min(lo, f[k]);
      hi = std::max(hi, f[k]);
    }
    out[k] = std::clamp(out[k] / sw, lo, hi);
  }
  return out;
}

double merge_overlaps(std::span<const double> weights, std::span<const double> scalar_features) {
  std::vector<std::vector<double>> f;
  f.reserve(scalar_features.size());
  for (double v : scalar_features) f.push_back({v});
  return merge_overlaps(weights, f)[0];
}

ExtractedRegions extract_region_latents(const SparseLatent& slat, const SlatRegionWeights& weights) {
  slat.validate();
  const auto r = static_cast<int>(weights.weights.cols());
  if (weights.weights.rows() != slat.size()) throw Error(Errc::InvalidInput, "weights must align with the latent");
  if (r == 0 || static_cast<int>(weights.region_order.size()) != r) {
    throw Error(Errc::InvalidInput, "weights need at least one named region column");
  }
  ExtractedRegions out;
  for (int c = 0; c < r; ++c) {
    out.regions.push_back({{weights.region_order[c], 0}, {slat.resolution, slat.channels, {}, {}}, {}});
  }
  for (int i = 0; i < slat.size(); ++i) {
    int c = argmax_region(weights.weights.row(i));
    auto& reg = out.regions[c];
    reg.latent.positions.push_back(slat.positions[i]);
    auto f = slat.feature(i);
    reg.latent.features.insert(reg.latent.features.end(), f.begin(), f.end());
    reg.weights.push_back(weights.weights(i, c));
  }
  for (const auto& reg : out.regions) {
    if (reg.latent.positions.empty()) out.empty.push_back(reg.id.part);
  }
  return out;
}

int supersampling_factor(const Affine& transform) {
  const auto& m = transform.linear();
  bool diagonal = true;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j && m(i, j) != 0.0) diagonal = false;
    }
    if (std::abs(m(i, i)) > 1.0) diagonal = false;
  }
  if (diagonal) return 1;
  double stretch = m.colwise().norm().maxCoeff();
  return std::max(2, 2 * static_cast<int>(std::ceil(stretch - 1e-9)));
}

RegionLatent transform_voxels(const RegionLatent& region, const Affine& transform) {
  const SparseLatent& in = region.latent;
  in.validate();
  if (region.weights.size() != in.positions.size()) throw Error(Errc::InvalidInput, "one weight per voxel required");
  if (std::abs(transform.linear().determinant()) < 1e-12) throw Error(Errc::InvalidInput, "transform is singular");

  const int n = in.resolution;
  const int s = supersampling_factor(transform);
  std::vector<std::pair<std::int64_t, int>> hits;  // (target cell, source voxel)
  std::vector<std::int64_t> local;
  int outside = 0;
  auto cell_of = [&](const Vec3& q, Coord& c) {
    for (int a = 0; a < 3; ++a) {
      double v = std::floor((q[a] + 0.5) * n);
      if (!(v >= 0.0 && v < n)) return false;
      c[a] = static_cast<int>(v);
    }
    return true;
  };
  // Sources in lexicographic order, so collisions sum in an order independent of the input.
  for (int i : sorted_order(in)) {
    const Coord& p = in.positions[i];
    Coord c;
    Vec3 center = voxel_to_canonical(p[0], p[1], p[2], n);
    if (!cell_of(transform * center, c)) ++outside;
    local.clear();
    for (int a = 0; a < s; ++a) {
      for (int b = 0; b < s; ++b) {
        for (int d = 0; d < s; ++d) {
          Vec3 sub(p[0] + (a + 0.5) / s, p[1] + (b + 0.5) / s, p[2] + (d + 0.5) / s);
          Vec3 q = transform * (sub / n - Vec3::Constant(0.5));
          if (cell_of(q, c)) local.push_back(linear(c, n));
        }
      }
    }
    std::sort(local.begin(), local.end());
    local.erase(std::unique(local.begin(), local.end()), local.end());
    for (auto cell : local) hits.emplace_back(cell, i);
  }
  if (2 * outside > in.size()) {
    throw Error(Errc::OutOfBounds, std::to_string(outside) + " of " + std::to_string(in.size()) +
                                       " voxels left the canonical cube");
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  RegionLatent out{region.id, {n, in.channels, {}, {}}, {}};
  const int ch = in.channels;
  std::vector<double> acc(ch);
  for (std::size_t g = 0; g < hits.size();) {
    std::size_t e = g;
    while (e < hits.size() && hits[e].first == hits[g].first) ++e;
    out.latent.positions.push_back(unlinear(hits[g].first, n));
    if (e - g == 1) {
      int v = hits[g].second;
      auto f = in.feature(v);
      out.latent.features.insert(out.latent.features.end(), f.begin(), f.end());
      out.weights.push_back(region.weights[v]);
    } else {
      double sw = 0.0;
      double sww = 0.0;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t h = g; h < e; ++h) {
        int v = hits[h].second;
        double w = region.weights[v];
        sw += w;
        sww += w * w;
        auto f = in.feature(v);
        for (int k = 0; k < ch; ++k) acc[k] += w * static_cast<double>(f[k]);
      }
      if (sw == 0.0) throw Error(Errc::AllZeroWeights, "colliding voxels all carry zero weight");
      for (int k = 0; k < ch; ++k) out.latent.features.push_back(static_cast<float>(acc[k] / sw));
      out.weights.push_back(sww / sw);
    }
    g = e;
  }
  return out;
}

DenseCoarseGrid downsample_to_coarse(std::span<const RegionLatent> regions, int coarse_resolution) {
  if (coarse_resolution < 1) throw Error(Errc::InvalidInput, "coarse resolution must be >= 1");
  if (regions.empty()) return DenseCoarseGrid(coarse_resolution, 0, 0);
  const int n = regions[0].latent.resolution;
  const int ch = regions[0].latent.channels;
  const int r = static_cast<int>(regions.size());
  for (const auto& reg : regions) {
    if (reg.latent.resolution != n || reg.latent.channels != ch) {
      throw Error(Errc::InvalidInput, "regions must share resolution and channels");
    }
    if (reg.weights.size() != reg.latent.positions.size()) throw Error(Errc::InvalidInput, "one weight per voxel required");
  }
  if (n % coarse_resolution != 0) throw Error(Errc::InvalidInput, "coarse resolution must divide the latent resolution");
  const int f = n / coarse_resolution;

  DenseCoarseGrid grid(coarse_resolution, ch, r);
  std::vector<double> sw(grid.cell_count(), 0.0);
  for (int ri = 0; ri < r; ++ri) {
    const auto& reg = regions[ri];
    for (int i : sorted_order(reg.latent)) {
      const Coord& p = reg.latent.positions[i];
      int cell = grid.index(p[0] / f, p[1] / f, p[2] / f);
      double w = reg.weights[i];
      grid.occupancy[cell] = 1;
      sw[cell] += w;
      auto feat = reg.latent.feature(i);
      double* dst = grid.features.data() + static_cast<std::size_t>(cell) * ch;
      for (int k = 0; k < ch; ++k) dst[k] += w * static_cast<double>(feat[k]);
      grid.region_weights[static_cast<std::size_t>(cell) * r + ri] += w;
    }
  }
  for (int cell = 0; cell < grid.cell_count(); ++cell) {
    if (!grid.occupancy[cell]) continue;
    if (sw[cell] == 0.0) throw Error(Errc::AllZeroWeights, "coarse cell has only zero-weight voxels");
    for (int k = 0; k < ch; ++k) grid.features[static_cast<std::size_t>(cell) * ch + k] /= sw[cell];
    for (int q = 0; q < r; ++q) grid.region_weights[static_cast<std::size_t>(cell) * r + q] /= sw[cell];
  }
  return grid;
}

DenseCoarseGrid fill_gaps(const DenseCoarseGrid& grid, int passes) {
  if (passes < 0) throw Error(Errc::InvalidInput, "fill passes must be >= 0");
  const int d = grid.resolution;
  const int ch = grid.channels;
  const int r = grid.regions;
  DenseCoarseGrid cur = grid;
  std::vector<int> neighbors;
  std::vector<int> dominants;
  for (int pass = 0; pass < passes; ++pass) {
    DenseCoarseGrid next = cur;
    for (int x = 0; x < d; ++x) {
      for (int y = 0; y < d; ++y) {
        for (int z = 0; z < d; ++z) {
          int cell = cur.index(x, y, z);
          if (cur.occupancy[cell]) continue;
          neighbors.clear();
          dominants.clear();
          for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dz = -1; dz <= 1; ++dz) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                int nx = x + dx, ny = y + dy, nz = z + dz;
                if (nx < 0 || ny < 0 || nz < 0 || nx >= d || ny >= d || nz >= d) continue;
                int nc = cur.index(nx, ny, nz);
                if (!cur.occupancy[nc]) continue;
                neighbors.push_back(nc);
                int dom = cur.dominant_region(nc);
                if (std::find(dominants.begin(), dominants.end(), dom) == dominants.end()) dominants.push_back(dom);
              }
            }
          }
          if (dominants.size() < 2) continue;
          double count = static_cast<double>(neighbors.size());
          double* feat = next.features.data() + static_cast<std::size_t>(cell) * ch;
          double* rw = next.region_weights.data() + static_cast<std::size_t>(cell) * r;
          for (int nc : neighbors) {
            for (int k = 0; k < ch; ++k) feat[k] += cur.features[static_cast<std::size_t>(nc) * ch + k];
            for (int q = 0; q < r; ++q) rw[q] += cur.region_weights[static_cast<std::size_t>(nc) * r + q];
          }
          for (int k = 0; k < ch; ++k) feat[k] /= count;
          double total = 0.0;
          for (int q = 0; q < r; ++q) {
            rw[q] /= count;
            total += rw[q];
          }
          if (total > 0.0) {
            for (int q = 0; q < r; ++q) rw[q] /= total;
          }
          next.occupancy[cell] = 1;
          next.filled[cell] = 1;
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

ComposedLatent upsample_to_slat(const DenseCoarseGrid& grid, std::span<const RegionLatent> regions) {
  ComposedLatent out;
  for (const auto& reg : regions) out.regions.push_back(reg.id);
  if (regions.empty()) {
    out.latent = {grid.resolution, std::max(grid.channels, 1), {}, {}};
    return out;
  }
  const int n = regions[0].latent.resolution;
  const int ch = regions[0].latent.channels;
  const int d = grid.resolution;
  if (d < 1 || n % d != 0) throw Error(Errc::InvalidInput, "grid resolution must divide the latent resolution");
  if (grid.channels != ch) throw Error(Errc::InvalidInput, "grid and regions disagree on channels");
  const int f = n / d;

  // Original fine voxels, merged across regions where they coincide.
  std::vector<Entry> entries;
  for (int ri = 0; ri < static_cast<int>(regions.size()); ++ri) {
    const auto& l = regions[ri].latent;
    if (l.resolution != n || l.channels != ch) throw Error(Errc::InvalidInput, "regions must share resolution and channels");
    for (int i = 0; i < l.size(); ++i) entries.push_back({linear(l.positions[i], n), ri, i});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.cell < b.cell; });

  struct Voxel {
    std::int64_t cell;
    int region;
    bool seam;
    std::size_t offset;  // into staged features
  };
  std::vector<Voxel> voxels;
  std::vector<float> staged;
  std::vector<double> acc(ch);
  for (std::size_t g = 0; g < entries.size();) {
    std::size_t e = g;
    while (e < entries.size() && entries[e].cell == entries[g].cell) ++e;
    Voxel v{entries[g].cell, entries[g].region, false, staged.size()};
    if (e - g == 1) {
      auto feat = regions[entries[g].region].latent.feature(entries[g].voxel);
      staged.insert(staged.end(), feat.begin(), feat.end());
    } else {
      double sw = 0.0;
      double best = -1.0;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t h = g; h < e; ++h) {
        const auto& reg = regions[entries[h].region];
        double w = reg.weights[entries[h].voxel];
        if (w > best) {
          best = w;
          v.region = entries[h].region;
        }
        sw += w;
        auto feat = reg.latent.feature(entries[h].voxel);
        for (int k = 0; k < ch; ++k) acc[k] += w * static_cast<double>(feat[k]);
      }
      if (sw == 0.0) throw Error(Errc::AllZeroWeights, "overlapping voxels all carry zero weight");
      for (int k = 0; k < ch; ++k) staged.push_back(static_cast<float>(acc[k] / sw));
    }
    voxels.push_back(v);
    g = e;
  }

  // Gap cells emit their whole block with features interpolated between coarse cell centres.
  for (int cx = 0; cx < d; ++cx) {
    for (int cy = 0; cy < d; ++cy) {
      for (int cz = 0; cz < d; ++cz) {
        int cell = grid.index(cx, cy, cz);
        if (!grid.filled[cell]) continue;
        int dom = grid.dominant_region(cell);
        for (int a = 0; a < f; ++a) {
          for (int b = 0; b < f; ++b) {
            for (int c = 0; c < f; ++c) {
              Coord p{cx * f + a, cy * f + b, cz * f + c};
              double u[3];
              int i0[3];
              for (int k = 0; k < 3; ++k) {
                u[k] = (p[k] + 0.5) / f - 0.5;
                i0[k] = static_cast<int>(std::floor(u[k]));
                u[k] -= i0[k];
              }
              double sw = 0.0;
              std::fill(acc.begin(), acc.end(), 0.0);
              for (int corner = 0; corner < 8; ++corner) {
                int q[3];
                double w = 1.0;
                bool inside = true;
                for (int k = 0; k < 3; ++k) {
                  int bit = (corner >> (2 - k)) & 1;
                  q[k] = i0[k] + bit;
                  inside = inside && q[k] >= 0 && q[k] < d;
                  w *= bit ? u[k] : 1.0 - u[k];
                }
                if (!inside) continue;
                int qc = grid.index(q[0], q[1], q[2]);
                if (!grid.occupancy[qc] || w == 0.0) continue;
                sw += w;
                for (int k = 0; k < ch; ++k) acc[k] += w * grid.features[static_cast<std::size_t>(qc) * ch + k];
              }
              Voxel v{linear(p, n), dom, true, staged.size()};
              for (int k = 0; k < ch; ++k) {
                double val = sw > 0.0 ? acc[k] / sw : grid.features[static_cast<std::size_t>(cell) * ch + k];
                staged.push_back(static_cast<float>(val));
              }
              voxels.push_back(v);
            }
          }
        }
      }
    }
  }

  std::sort(voxels.begin(), voxels.end(), [](const Voxel& a, const Voxel& b) { return a.cell < b.cell; });
  out.latent = {n, ch, {}, {}};
  out.latent.positions.reserve(voxels.size());
  out.latent.features.reserve(voxels.size() * ch);
  for (const auto& v : voxels) {
    Coord p = unlinear(v.cell, n);
    out.latent.positions.push_back(p);
    out.latent.features.insert(out.latent.features.end(), staged.begin() + static_cast<std::ptrdiff_t>(v.offset),
                               staged.begin() + static_cast<std::ptrdiff_t>(v.offset + ch));
    out.provenance.push_back(v.region);
    if (v.seam) out.seam_mask.push_back(p);
  }
  return out;
}

ComposedLatent compose(std::span<const RegionLatent> regions, std::span<const Affine> transforms,
                       const ComposeOptions& options) {
  if (regions.empty()) throw Error(Errc::InvalidInput, "compose needs at least one region");
  if (!transforms.empty() && transforms.size() != regions.size()) {
    throw Error(Errc::InvalidInput, "compose needs one transform per region");
  }
  std::vector<RegionLatent> moved;
  moved.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    moved.push_back(transform_voxels(regions[i], transforms.empty() ? Affine::Identity() : transforms[i]));
  }
  auto grid = downsample_to_coarse(moved, options.coarse_resolution);
  grid = fill_gaps(grid, options.fill_passes);
  return upsample_to_slat(grid, moved);
}

std::vector<int> occupancy_rle(const DenseCoarseGrid& grid) {
  std::vector<int> runs;
  std::uint8_t state = 0;
  int run = 0;
  for (auto occ : grid.occupancy) {
    if (occ != state) {
      runs.push_back(run);
      state = occ;
      run = 0;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

DenseCoarseGrid coarse_occupancy(const SparseLatent& latent, int coarse_resolution) {
  if (coarse_resolution < 1 || latent.resolution % coarse_resolution != 0) {
    throw Error(Errc::InvalidInput, "coarse resolution must divide the latent resolution");
  }
  const int f = latent.resolution / coarse_resolution;
  DenseCoarseGrid grid(coarse_resolution, 0, 0);
  for (const auto& p : latent.positions) grid.occupancy[grid.index(p[0] / f, p[1] / f, p[2] / f)] = 1;
  return grid;
}

}  // namespace muses
