#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "muses/skeleton.hpp"

namespace muses {

enum class TemplateKind { Quadruped, Biped, Winged, Fish };

std::string_view to_string(TemplateKind kind);
std::optional<TemplateKind> parse_template_kind(std::string_view name);

// Ground-truth region emitted by the generator, in original joint indices.
struct TruthRegion {
  RegionLabel label = RegionLabel::Body;
  std::vector<int> joints;  // sorted
};

struct CreatureTemplate {
  TemplateKind kind = TemplateKind::Quadruped;
  Skeleton skeleton;
  std::vector<double> radii;  // per joint, canonical units; used for mesh and voxel bodies
  std::vector<int> mirror;    // bilateral partner of each joint (itself on the midline)
  std::vector<TruthRegion> truth;
};

struct TemplateOptions {
  std::uint64_t seed = 0;
  // Relative per-limb length variation, applied symmetrically.
  double proportion_variation = 0.0;
  // Maximum per-joint displacement as a fraction of the bounding-box diagonal. 70% of it
  // is a mirror-symmetric component, 30% independent per joint.
  double jitter = 0.0;
};

// Procedural creature skeleton facing +x with +y up and bilateral symmetry about z = 0.
CreatureTemplate make_template(TemplateKind kind, const TemplateOptions& options = {});

// Deterministic 64-bit generator (splitmix64) shared by fixtures and tests.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace muses
