#include "muses/templates.hpp"

#include <algorithm>
#include <map>

#include "muses/error.hpp"

namespace muses {

namespace {

struct Limb {
  RegionLabel label;
  std::vector<int> joints;
};

class TemplateBuilder {
 public:
  TemplateBuilder(SplitMix64& rng, double variation) : rng_(rng), variation_(variation) {}

  int root(const Vec3& p, double radius) {
    const int i = add(p, p, radius);
    body_.push_back(i);
    return i;
  }

  // Chain hanging from `anchor` given in the base layout; the whole chain is rescaled
  // about the anchor by one factor drawn per call.
  std::vector<int> chain(int anchor, const std::vector<Vec3>& base, std::vector<double> radii) {
    const double f = factor();
    return place(anchor, base, radii, f, 1.0);
  }

  // Left/right pair of chains, mirrored across z = 0 (base points describe the +z side).
  std::pair<std::vector<int>, std::vector<int>> mirrored(int anchor, const std::vector<Vec3>& base,
                                                         std::vector<double> radii) {
    const double f = factor();
    auto right = place(anchor, base, radii, f, 1.0);
    auto left = place(anchor, base, radii, f, -1.0);
    for (std::size_t i = 0; i < right.size(); ++i) {
      mirror_[right[i]] = left[i];
      mirror_[left[i]] = right[i];
    }
    return {right, left};
  }

  void body(const std::vector<int>& joints) { body_.insert(body_.end(), joints.begin(), joints.end()); }
  void limb(RegionLabel label, const std::vector<int>& joints) { limbs_.push_back({label, joints}); }

  CreatureTemplate finish(TemplateKind kind, int root_joint, double jitter) {
    CreatureTemplate t;
    t.kind = kind;
    t.skeleton.joints = pos_;
    t.skeleton.bones = bones_;
    t.skeleton.root = root_joint;
    t.radii = radii_;
    t.mirror = mirror_;

    if (jitter > 0.0) apply_jitter(t, jitter);

    TruthRegion body{RegionLabel::Body, body_};
    std::sort(body.joints.begin(), body.joints.end());
    t.truth.push_back(std::move(body));
    for (auto& limb : limbs_) {
      std::sort(limb.joints.begin(), limb.joints.end());
      t.truth.push_back({limb.label, limb.joints});
    }
    t.skeleton.validate();
    return t;
  }

 private:
  int add(const Vec3& p, const Vec3& base, double radius) {
    const int i = static_cast<int>(pos_.size());
    pos_.push_back(p);
    base_.push_back(base);
    radii_.push_back(radius);
    mirror_.push_back(i);
    return i;
  }

  double factor() { return variation_ > 0.0 ? rng_.uniform(1.0 - variation_, 1.0 + variation_) : 1.0; }

  std::vector<int> place(int anchor, const std::vector<Vec3>& base, const std::vector<double>& radii,
                         double f, double side) {
    std::vector<int> out;
    int prev = anchor;
    for (std::size_t i = 0; i < base.size(); ++i) {
      Vec3 b = base[i];
      b.z() *= side;
      Vec3 a = base_[anchor];
      const Vec3 p = pos_[anchor] + f * (b - a);
      const int j = add(p, b, radii[std::min(i, radii.size() - 1)]);
      bones_.push_back({prev, j});
      prev = j;
      out.push_back(j);
    }
    return out;
  }

  Vec3 in_ball(double radius, bool planar) {
    for (;;) {
      Vec3 v(rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0), planar ? 0.0 : rng_.uniform(-1.0, 1.0));
      if (v.squaredNorm() <= 1.0) return radius * v;
    }
  }

  void apply_jitter(CreatureTemplate& t, double jitter) {
    const double diag = bounds(t.skeleton.joints).diagonal();
    const double shared = 0.7 * jitter * diag;
    const double own = 0.3 * jitter * diag;
    auto& joints = t.skeleton.joints;
    for (std::size_t i = 0; i < joints.size(); ++i) {
      const auto m = static_cast<std::size_t>(t.mirror[i]);
      if (m == i) {
        joints[i] += in_ball(shared, true);
      } else if (m > i) {
        const Vec3 d = in_ball(shared, false);
        joints[i] += d;
        joints[m] += Vec3(d.x(), d.y(), -d.z());
      }
    }
    for (auto& p : joints) p += in_ball(own, false);
  }

  SplitMix64& rng_;
  double variation_;
  std::vector<Vec3> pos_;
  std::vector<Vec3> base_;
  std::vector<double> radii_;
  std::vector<int> mirror_;
  std::vector<Bone> bones_;
  std::vector<int> body_;
  std::vector<Limb> limbs_;
};

CreatureTemplate quadruped(SplitMix64& rng, const TemplateOptions& o) {
  TemplateBuilder t(rng, o.proportion_variation);
  const int pelvis = t.root({-0.24, 0.08, 0.0}, 0.07);
  auto spine = t.chain(pelvis, {{-0.12, 0.11, 0.0}, {0.0, 0.12, 0.0}, {0.11, 0.115, 0.0}, {0.21, 0.10, 0.0}},
                       {0.075, 0.075, 0.07, 0.07});
  t.body(spine);
  const int shoulder = spine.back();
  t.limb(RegionLabel::Head, t.chain(shoulder, {{0.28, 0.19, 0.0}, {0.33, 0.27, 0.0}, {0.42, 0.28, 0.0}},
                                    {0.045, 0.045, 0.055}));
  t.limb(RegionLabel::Tail, t.chain(pelvis, {{-0.32, 0.10, 0.0}, {-0.40, 0.08, 0.0}, {-0.47, 0.03, 0.0}},
                                    {0.03, 0.025, 0.02}));
  auto [hr, hl] = t.mirrored(pelvis,
                             {{-0.24, 0.0, 0.11}, {-0.21, -0.16, 0.17}, {-0.25, -0.31, 0.22}, {-0.21, -0.40, 0.25}},
                             {0.045, 0.04, 0.032, 0.03});
  t.limb(RegionLabel::Leg, hr);
  t.limb(RegionLabel::Leg, hl);
  auto [fr, fl] = t.mirrored(shoulder,
                             {{0.21, 0.02, 0.11}, {0.23, -0.16, 0.17}, {0.20, -0.31, 0.22}, {0.24, -0.40, 0.25}},
                             {0.045, 0.04, 0.032, 0.03});
  t.limb(RegionLabel::Leg, fr);
  t.limb(RegionLabel::Leg, fl);
  return t.finish(TemplateKind::Quadruped, pelvis, o.jitter);
}

CreatureTemplate winged(SplitMix64& rng, const TemplateOptions& o) {
  TemplateBuilder t(rng, o.proportion_variation);
  const int pelvis = t.root({-0.14, 0.02, 0.0}, 0.065);
  auto spine = t.chain(pelvis, {{-0.04, 0.07, 0.0}, {0.06, 0.10, 0.0}, {0.15, 0.11, 0.0}}, {0.07, 0.07, 0.065});
  t.body(spine);
  const int shoulder = spine.back();
  t.limb(RegionLabel::Head,
         t.chain(shoulder, {{0.22, 0.18, 0.0}, {0.27, 0.25, 0.0}, {0.35, 0.29, 0.0}, {0.44, 0.28, 0.0}},
                 {0.04, 0.04, 0.045, 0.045}));
  auto [lr, ll] = t.mirrored(pelvis,
                             {{-0.14, -0.04, 0.08}, {-0.09, -0.19, 0.11}, {-0.15, -0.32, 0.12}, {-0.09, -0.41, 0.13}},
                             {0.045, 0.04, 0.032, 0.03});
  t.limb(RegionLabel::Leg, lr);
  t.limb(RegionLabel::Leg, ll);
  auto [wr, wl] = t.mirrored(shoulder,
                             {{0.09, 0.17, 0.08}, {-0.01, 0.26, 0.13}, {-0.14, 0.33, 0.17}, {-0.30, 0.36, 0.20}},
                             {0.035, 0.03, 0.025, 0.02});
  t.limb(RegionLabel::Wing, wr);
  t.limb(RegionLabel::Wing, wl);
  return t.finish(TemplateKind::Winged, pelvis, o.jitter);
}

CreatureTemplate biped(SplitMix64& rng, const TemplateOptions& o) {
  TemplateBuilder t(rng, o.proportion_variation);
  const int pelvis = t.root({-0.05, 0.05, 0.0}, 0.065);
  auto spine = t.chain(pelvis, {{0.06, 0.10, 0.0}, {0.15, 0.14, 0.0}, {0.22, 0.16, 0.0}}, {0.065, 0.06, 0.055});
  t.body(spine);
  const int chest = spine.back();
  t.limb(RegionLabel::Head, t.chain(chest, {{0.29, 0.22, 0.0}, {0.40, 0.24, 0.0}}, {0.04, 0.055}));
  t.limb(RegionLabel::Tail,
         t.chain(pelvis, {{-0.16, 0.07, 0.0}, {-0.28, 0.06, 0.0}, {-0.40, 0.02, 0.0}, {-0.48, -0.03, 0.0}},
                 {0.045, 0.035, 0.028, 0.02}));
  auto [lr, ll] = t.mirrored(pelvis,
                             {{-0.05, -0.02, 0.09}, {0.0, -0.18, 0.13}, {-0.06, -0.32, 0.14}, {0.0, -0.41, 0.15}},
                             {0.045, 0.04, 0.032, 0.03});
  t.limb(RegionLabel::Leg, lr);
  t.limb(RegionLabel::Leg, ll);
  // Short forelimbs hanging below the pelvis height classify as legs.
  auto [ar, al] = t.mirrored(chest, {{0.22, 0.08, 0.08}, {0.25, -0.02, 0.11}, {0.30, -0.10, 0.12}},
                             {0.025, 0.02, 0.018});
  t.limb(RegionLabel::Leg, ar);
  t.limb(RegionLabel::Leg, al);
  return t.finish(TemplateKind::Biped, pelvis, o.jitter);
}

CreatureTemplate fish(SplitMix64& rng, const TemplateOptions& o) {
  TemplateBuilder t(rng, o.proportion_variation);
  const int mid = t.root({0.0, -0.03, 0.0}, 0.09);
  auto front = t.chain(mid, {{0.15, 0.0, 0.0}, {0.30, 0.03, 0.0}, {0.45, 0.0, 0.0}}, {0.085, 0.065, 0.035});
  auto back = t.chain(mid, {{-0.15, 0.0, 0.0}, {-0.30, 0.03, 0.0}, {-0.45, 0.0, 0.0}}, {0.075, 0.045, 0.05});
  t.body(front);
  t.body(back);
  return t.finish(TemplateKind::Fish, mid, o.jitter);
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::Quadruped: return "quadruped";
    case TemplateKind::Biped: return "biped";
    case TemplateKind::Winged: return "winged";
    case TemplateKind::Fish: return "fish";
  }
  return "quadruped";
}

std::optional<TemplateKind> parse_template_kind(std::string_view name) {
  static const std::map<std::string_view, TemplateKind> kinds = {
      {"quadruped", TemplateKind::Quadruped},
      {"biped", TemplateKind::Biped},
      {"winged", TemplateKind::Winged},
      {"fish", TemplateKind::Fish},
  };
  if (auto it = kinds.find(name); it != kinds.end()) return it->second;
  return std::nullopt;
}

CreatureTemplate make_template(TemplateKind kind, const TemplateOptions& options) {
  if (options.jitter < 0.0 || options.proportion_variation < 0.0 || options.proportion_variation >= 1.0) {
    throw Error(Errc::InvalidInput, "template options out of range");
  }
  SplitMix64 rng(options.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(kind) + 1);
  switch (kind) {
    case TemplateKind::Quadruped: return quadruped(rng, options);
    case TemplateKind::Biped: return biped(rng, options);
    case TemplateKind::Winged: return winged(rng, options);
    case TemplateKind::Fish: return fish(rng, options);
  }
  throw Error(Errc::InvalidInput, "unknown template kind");
}

}  // namespace muses
