#include "muses/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "muses/error.hpp"

namespace muses {

namespace {

Vec3 perpendicular(const Vec3& d) {
  Vec3 axis = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return d.cross(axis).normalized();
}

// Distance from p to segment ab and the clamped segment parameter.
std::pair<double, double> segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return {(p - (a + t * ab)).norm(), t};
}

}  // namespace

std::optional<TemplateKind> fixture_kind(std::string_view name) { return parse_template_kind(name); }

TemplateKind guess_fixture_kind(std::string_view prompt) {
  std::string lower;
  for (char c : prompt) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  auto has = [&](std::initializer_list<const char*> words) {
    return std::any_of(words.begin(), words.end(), [&](const char* w) { return lower.find(w) != std::string::npos; });
  };
  if (has({"fish", "shark", "eel", "whale"})) return TemplateKind::Fish;
  if (has({"wing", "bird", "eagle", "dragon", "bat"})) return TemplateKind::Winged;
  if (has({"biped", "dinosaur", "rex", "raptor"})) return TemplateKind::Biped;
  return TemplateKind::Quadruped;
}

std::vector<float> fixture_features(std::span<const Coord> positions, int channels) {
  std::vector<float> out;
  out.reserve(positions.size() * static_cast<std::size_t>(channels));
  for (const auto& p : positions) {
    std::uint64_t key = (static_cast<std::uint64_t>(p[0]) << 42) ^ (static_cast<std::uint64_t>(p[1]) << 21) ^
                        static_cast<std::uint64_t>(p[2]);
    SplitMix64 rng(key);
    for (int k = 0; k < channels; ++k) out.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
  }
  return out;
}

AssetBundle make_fixture_bundle(TemplateKind kind, const FixtureOptions& options) {
  if (options.resolution < 2 || options.channels < 1 || options.ring_segments < 3 || options.ring_count < 2) {
    throw Error(Errc::InvalidInput, "fixture options out of range");
  }
  CreatureTemplate tpl = make_template(kind, options.shape);
  const Skeleton& s = tpl.skeleton;

  AssetBundle out;
  out.skeleton = s;
  out.prompt = std::string(to_string(kind));

  // Tube mesh; vertex weights interpolate linearly between the bone's two joints.
  const int m = options.ring_segments;
  const int rings = options.ring_count;
  std::vector<double> skin_t;  // position along the bone per vertex
  std::vector<std::pair<int, int>> skin_joints;
  for (const auto& bone : s.bones) {
    const Vec3& a = s.joints[bone.a];
    const Vec3& b = s.joints[bone.b];
    Vec3 dir = (b - a).normalized();
    Vec3 u = perpendicular(dir);
    Vec3 v = dir.cross(u);
    int first = static_cast<int>(out.mesh.vertices.size());
    for (int r = 0; r < rings; ++r) {
      double t = static_cast<double>(r) / (rings - 1);
      double radius = (1.0 - t) * tpl.radii[bone.a] + t * tpl.radii[bone.b];
      Vec3 c = a + t * (b - a);
      for (int k = 0; k < m; ++k) {
        double phi = 2.0 * 3.14159265358979323846 * k / m;
        out.mesh.vertices.push_back(c + radius * (std::cos(phi) * u + std::sin(phi) * v));
        skin_joints.emplace_back(bone.a, bone.b);
        skin_t.push_back(t);
      }
    }
    for (int r = 0; r + 1 < rings; ++r) {
      for (int k = 0; k < m; ++k) {
        int i0 = first + r * m + k;
        int i1 = first + r * m + (k + 1) % m;
        int j0 = i0 + m;
        int j1 = i1 + m;
        out.mesh.faces.push_back({i0, i1, j1});
        out.mesh.faces.push_back({i0, j1, j0});
      }
    }
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.mesh.vertices.size()), s.joint_count());
  for (std::size_t i = 0; i < skin_t.size(); ++i) {
    double t = skin_t[i];
    w(static_cast<Eigen::Index>(i), skin_joints[i].first) += 1.0 - t;
    w(static_cast<Eigen::Index>(i), skin_joints[i].second) += t;
  }
  out.skinning = SkinningMatrix::identity_mapped(std::move(w));

  // Solid capsules: a voxel is active when its centre lies inside the tapered tube of any bone.
  const int n = options.resolution;
  std::vector<std::uint8_t> active(static_cast<std::size_t>(n) * n * n, 0);
  for (const auto& bone : s.bones) {
    const Vec3& a = s.joints[bone.a];
    const Vec3& b = s.joints[bone.b];
    double ra = tpl.radii[bone.a];
    double rb = tpl.radii[bone.b];
    double rmax = std::max(ra, rb);
    Vec3 lo = a.cwiseMin(b).array() - rmax;
    Vec3 hi = a.cwiseMax(b).array() + rmax;
    int ilo[3], ihi[3];
    for (int k = 0; k < 3; ++k) {
      ilo[k] = std::max(0, static_cast<int>(std::floor((lo[k] + 0.5) * n)));
      ihi[k] = std::min(n - 1, static_cast<int>(std::floor((hi[k] + 0.5) * n)));
    }
    for (int x = ilo[0]; x <= ihi[0]; ++x) {
      for (int y = ilo[1]; y <= ihi[1]; ++y) {
        for (int z = ilo[2]; z <= ihi[2]; ++z) {
          auto [dist, t] = segment_distance(voxel_to_canonical(x, y, z, n), a, b);
          if (dist <= (1.0 - t) * ra + t * rb) active[(static_cast<std::size_t>(x) * n + y) * n + z] = 1;
        }
      }
    }
  }

  // Smooth features: a few fixed plane waves per channel, phase-shifted by the template kind.
  SplitMix64 rng(0xC0FFEEull + static_cast<std::uint64_t>(kind));
  std::vector<Vec3> freq(options.channels);
  std::vector<double> phase(options.channels);
  for (int k = 0; k < options.channels; ++k) {
    freq[k] = Vec3(rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0));
    phase[k] = rng.uniform(0.0, 6.283185307179586);
  }
  out.slat.resolution = n;
  out.slat.channels = options.channels;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      for (int z = 0; z < n; ++z) {
        if (!active[(static_cast<std::size_t>(x) * n + y) * n + z]) continue;
        out.slat.positions.push_back({x, y, z});
        Vec3 c = voxel_to_canonical(x, y, z, n);
        for (int k = 0; k < options.channels; ++k) {
          out.slat.features.push_back(static_cast<float>(std::sin(freq[k].dot(c) + phase[k])));
        }
      }
    }
  }
  out.validate();
  return out;
}

}  // namespace muses
