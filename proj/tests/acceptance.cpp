// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "muses/bundle_io.hpp"
#include "muses/fixtures.hpp"
#include "muses/layout.hpp"
#include "muses/pipeline.hpp"
#include "muses/plan_io.hpp"
#include "muses/region_mapper.hpp"
#include "muses/session.hpp"
#include "muses/skeleton_io.hpp"
#include "muses/skinning_io.hpp"
#include "muses/slat_io.hpp"
#include "muses/templates.hpp"
#include "oracles.hpp"

using namespace muses;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Collects the first few failures of one criterion.
struct Verdict {
  int failures = 0;
  std::ostringstream first;
  std::string summary;

  void fail(const std::string& what) {
    if (failures++ < 3) first << (failures > 1 ? "; " : "") << what;
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

Vec3 random_point(SplitMix64& rng) {
  return {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
}

Vec3 random_unit(SplitMix64& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<PartRef> leg_refs(int n) {
  std::vector<PartRef> r;
  for (int i = 0; i < n; ++i) r.push_back({"a0", RegionLabel::Leg, i + 1});
  return r;
}

void classification(Verdict& v) {
  int regions = 0;
  auto start = Clock::now();
  for (TemplateKind kind : {TemplateKind::Quadruped, TemplateKind::Winged, TemplateKind::Fish}) {
    int count = kind == TemplateKind::Fish ? 5 : 20;
    for (int seed = 0; seed < count; ++seed) {
      CreatureTemplate t = make_template(kind, {static_cast<std::uint64_t>(1000 + seed), 0.1, 0.05});
      CleanSkeleton c = clean_skeleton(t.skeleton);
      Classification r = classify_regions(c, estimate_orientation(c));
      std::string miss = oracle::classification_mismatch(t, c, r);
      v.expect(miss.empty(), std::string(to_string(kind)) + " seed " + std::to_string(seed) + ": " + miss);
      if (kind == TemplateKind::Fish) {
        v.expect(r.partition.regions.size() == 1 && r.partition.regions[0].label == RegionLabel::Body,
                 "fish did not take the Body-only path");
      }
      regions += static_cast<int>(r.partition.regions.size());
    }
  }
  double seconds = since(start);
  v.expect(seconds < 1.0, "took " + std::to_string(seconds) + " s");
  v.summary = "45 skeletons, " + std::to_string(regions) + " regions, " + std::to_string(seconds) + " s";
}

void begin_and_junction(Verdict& v) {
  SplitMix64 rng(0xACCE55);
  for (int trial = 0; trial < 1000; ++trial) {
    Skeleton s = oracle::random_tree(rng, 30);
    int b = select_begin_node(s);
    v.expect(b == oracle::begin_node(s), "begin node, tree " + std::to_string(trial));
    Vec3 fwd(rng.uniform(-1, 1), 0.0, rng.uniform(-1, 1));
    if (fwd.norm() < 1e-3) fwd = Vec3::UnitX();
    OrientationFrame f = OrientationFrame::from_forward(fwd);
    v.expect(find_trunk_junction(s, f, b) == oracle::trunk_junction(s, f.forward, b),
             "trunk junction, tree " + std::to_string(trial));
  }
  v.summary = "1000 trees";
}

void weight_chain(Verdict& v) {
  SplitMix64 rng(0x5EED);
  for (int trial = 0; trial < 1000; ++trial) {
    int q = 1 + static_cast<int>(rng.next() % 40);
    int j = 1 + static_cast<int>(rng.next() % 12);
    int r = 1 + static_cast<int>(rng.next() % std::min(j, 6));
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(q, j);
    for (int i = 0; i < q; ++i) {
      if (rng.uniform() < 0.1) continue;
      for (int c = 0; c < j; ++c) {
        if (rng.uniform() < 0.5) w(i, c) = rng.uniform(0, 1);
      }
    }
    std::vector<std::vector<int>> groups(r);
    for (int c = 0; c < j; ++c) groups[c < r ? c : rng.next() % r].push_back(c);

    RegionWeightMatrix rw = aggregate_region_weights(SkinningMatrix::identity_mapped(w), groups, leg_refs(r));
    for (int i = 0; i < q; ++i) {
      double sum = rw.weights.row(i).sum();
      bool zero = rw.weights.row(i).isZero(0.0);
      v.expect(std::abs(sum - 1.0) < 1e-9 || (zero && w.row(i).sum() <= kRegionEpsilon),
               "row sum " + std::to_string(sum) + " in instance " + std::to_string(trial));
    }

    std::vector<Vec3> verts, voxels;
    for (int i = 0; i < q; ++i) verts.push_back(random_point(rng));
    for (int i = 0; i < 25; ++i) voxels.push_back(random_point(rng));
    int k = 1 + static_cast<int>(rng.next() % std::min(q, 8));
    SlatRegionWeights out = knn_transfer(rw, verts, voxels, {k, 1e-8});
    for (Eigen::Index i = 0; i < out.weights.rows(); ++i) {
      for (Eigen::Index c = 0; c < out.weights.cols(); ++c) {
        v.expect(out.weights(i, c) >= rw.weights.col(c).minCoeff() - 1e-15 &&
                     out.weights(i, c) <= rw.weights.col(c).maxCoeff() + 1e-15,
                 "transferred weight outside its column bounds in instance " + std::to_string(trial));
      }
    }
  }

  Eigen::MatrixXd rows(2, 2);
  rows << 1.0, 0.0, 0.0, 1.0;
  std::vector<Vec3> verts{{1, 0, 0}, {-3, 0, 0}};
  std::vector<Vec3> at{{0, 0, 0}};
  SlatRegionWeights beta = knn_transfer({rows, leg_refs(2)}, verts, at, {2, 1e-8});
  v.expect(beta.weights(0, 0) == 0.75 && beta.weights(0, 1) == 0.25, "distances (1, 3) did not give (0.75, 0.25)");
  v.summary = "1000 instances, beta (" + std::to_string(beta.weights(0, 0)) + ", " + std::to_string(beta.weights(0, 1)) + ")";
}

void overlap_merge(Verdict& v) {
  SplitMix64 rng(0x0E6);
  for (int trial = 0; trial < 10000; ++trial) {
    int n = 1 + static_cast<int>(rng.next() % 6);
    int c = 1 + static_cast<int>(rng.next() % 4);
    std::vector<double> w(n);
    std::vector<std::vector<double>> f(n, std::vector<double>(c));
    for (int i = 0; i < n; ++i) {
      w[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 3.0);
      for (auto& x : f[i]) x = rng.uniform(-10.0, 10.0);
    }
    w[rng.next() % n] = rng.uniform(0.1, 3.0);
    auto z = merge_overlaps(w, f);
    for (int k = 0; k < c; ++k) {
      double lo = f[0][k], hi = f[0][k];
      for (int i = 1; i < n; ++i) {
        lo = std::min(lo, f[i][k]);
        hi = std::max(hi, f[i][k]);
      }
      v.expect(z[k] >= lo && z[k] <= hi, "not convex, instance " + std::to_string(trial));
    }
    if (n == 1) v.expect(z == f[0], "single input changed, instance " + std::to_string(trial));
    double scale = rng.uniform(1e-3, 1e3);
    for (auto& x : w) x *= scale;
    auto zs = merge_overlaps(w, f);
    for (int k = 0; k < c; ++k) {
      v.expect(std::abs(zs[k] - z[k]) <= 1e-12 * std::max(1.0, std::abs(z[k])),
               "weight scaling moved the result, instance " + std::to_string(trial));
    }
  }
  std::vector<double> w{2, 1, 1};
  std::vector<double> s{4, 0, 0};
  double hand = merge_overlaps(w, s);
  v.expect(hand == 2.0, "(2,1,1)/(4,0,0) gave " + std::to_string(hand));
  v.summary = "10000 instances, hand case " + std::to_string(hand);
}

void operators(Verdict& v) {
  const PartRef body{"a0", RegionLabel::Body, 1};
  SplitMix64 rng(0x0A1);
  auto joints = [&](int n) {
    std::vector<Vec3> j;
    for (int i = 0; i < n; ++i) j.push_back(random_point(rng));
    return j;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    auto j = joints(2 + static_cast<int>(rng.next() % 20));
    Vec3 pivot = random_point(rng);
    double alpha = 1.0;
    EditOp op = EditOp::rotate(body, random_unit(rng), pivot, rng.uniform(-360, 360));
    if (trial % 3 == 1) op = EditOp::translate(body, random_unit(rng), rng.uniform(-1, 1));
    if (trial % 3 == 2) {
      alpha = rng.uniform(0.05, 4.0);
      op = EditOp::scale(body, alpha, pivot);
    }
    auto out = apply_op(j, op);
    for (std::size_t a = 0; a < j.size(); ++a) {
      for (std::size_t b = a + 1; b < j.size(); ++b) {
        v.expect(std::abs((out[a] - out[b]).norm() - alpha * (j[a] - j[b]).norm()) < 1e-6,
                 "distance changed, op " + std::to_string(trial));
      }
    }

    auto k = joints(10);
    Vec3 axis = random_unit(rng);
    double theta = rng.uniform(-720, 720);
    auto back = apply_op(apply_op(k, EditOp::rotate(body, axis, pivot, theta)), EditOp::rotate(body, axis, pivot, -theta));
    for (std::size_t i = 0; i < k.size(); ++i) {
      v.expect((back[i] - k[i]).norm() < 1e-9, "rotate/unrotate drift, op " + std::to_string(trial));
    }
  }

  // Provenance: every assembled joint is its part's joint under the recorded transform.
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CreatureTemplate qt = make_template(TemplateKind::Quadruped, {seed, 0.1, 0.03});
    CreatureTemplate wt = make_template(TemplateKind::Winged, {seed + 100, 0.1, 0.03});
    CleanSkeleton qc = clean_skeleton(qt.skeleton), wc = clean_skeleton(wt.skeleton);
    Classification q = classify_regions(qc, estimate_orientation(qc));
    Classification w = classify_regions(wc, estimate_orientation(wc));
    const RegionLabel removed[] = {RegionLabel::Wing, RegionLabel::Head};
    PlanRequest req{{base_part("a0", qc, q, removed)}, "two heads and wings"};
    for (const auto& r : w.partition.regions) {
      if (r.label == RegionLabel::Wing || r.label == RegionLabel::Head) req.parts.push_back(region_part("a1", wc, w, r));
    }
    RulePlanner rule;
    AssemblyPlan plan = plan_assembly(req, rule);
    SplitMix64 oprng(seed);
    for (std::size_t p = 1; p < plan.parts.size(); ++p) {
      plan.ops.push_back(EditOp::rotate(plan.parts[p].ref, random_unit(oprng), std::nullopt, oprng.uniform(-20, 20)));
      plan.ops.push_back(EditOp::scale(plan.parts[p].ref, oprng.uniform(0.8, 1.1), std::nullopt));
    }
    auto geo = geometry_of(req.parts);
    AssembledSkeleton a = execute_plan(geo, plan);
    for (const auto& inst : a.instances) {
      auto it = std::find_if(geo.begin(), geo.end(), [&](const PartGeometry& g) { return g.ref == inst.part; });
      if (it == geo.end()) {
        v.fail("instance without geometry");
        continue;
      }
      for (int i = 0; i < inst.joint_count; ++i) {
        v.expect((inst.transform * it->skeleton.joints[i] - a.skeleton.joints[inst.first_joint + i]).norm() < 1e-9,
                 "provenance transform misses joint " + std::to_string(inst.first_joint + i));
        ++checked;
      }
    }
  }
  v.summary = "1000 ops, " + std::to_string(checked) + " provenance joints";
}

void composition(Verdict& v) {
  int agreed = 0;
  std::set<std::string> kinds;
  for (int i = 0; i < 80; ++i) {
    auto cc = oracle::random_compose_case(0xC0DE, i);
    std::optional<Errc> e1, e2;
    ComposedLatent fast, dense;
    try {
      fast = compose(cc.regions, cc.transforms, cc.options);
    } catch (const Error& e) {
      e1 = e.code();
    }
    try {
      dense = oracle::dense_compose(cc.regions, cc.transforms, cc.options);
    } catch (const Error& e) {
      e2 = e.code();
    }
    if (e1 != e2) {
      v.fail("case " + std::to_string(i) + " errors differ");
      continue;
    }
    if (e1) continue;
    std::string diff = oracle::compose_difference(fast, dense);
    v.expect(diff.empty(), "case " + std::to_string(i) + " (" + cc.kind + "): " + diff);
    ++agreed;
    kinds.insert(cc.kind);
  }
  v.expect(agreed >= 50, "only " + std::to_string(agreed) + " cases composed");
  for (const char* kind : {"overlap", "gap", "empty"}) v.expect(kinds.count(kind) == 1, std::string("no ") + kind + " case");
  v.summary = std::to_string(agreed) + " cases bit-identical";
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return out;
}

PipelineConfig wings(const fs::path& out) {
  PipelineConfig cfg;
  cfg.sources = {"fixture:quadruped", "fixture:winged"};
  cfg.prompt = "a quadruped with wings";
  cfg.output_dir = out;
  return cfg;
}

void formats(Verdict& v) {
  SplitMix64 rng(0xF0F0);
  for (int trial = 0; trial < 200; ++trial) {
    SparseLatent l{1 + static_cast<int>(rng.next() % 64), 1 + static_cast<int>(rng.next() % 8), {}, {}};
    std::set<Coord> used;
    for (int i = 0; i < 100; ++i) {
      Coord p{static_cast<int>(rng.next() % l.resolution), static_cast<int>(rng.next() % l.resolution),
              static_cast<int>(rng.next() % l.resolution)};
      if (!used.insert(p).second) continue;
      l.positions.push_back(p);
      for (int c = 0; c < l.channels; ++c) {
        std::uint32_t bits = static_cast<std::uint32_t>(rng.next());
        float f;
        std::memcpy(&f, &bits, sizeof f);
        l.features.push_back(std::isfinite(f) ? f : -0.0f);
      }
    }
    std::string bytes = encode_slat(l);
    SparseLatent back = decode_slat(bytes);
    v.expect(back.positions == l.positions && encode_slat(back) == bytes &&
                 std::memcmp(back.features.data(), l.features.data(), l.features.size() * sizeof(float)) == 0,
             "SLAT round trip");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<int>(rng.next() % 30), 1 + static_cast<int>(rng.next() % 10));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (rng.uniform() < 0.4) w(r, c) = static_cast<float>(rng.uniform());
      }
    }
    std::string musw = encode_skinning(SkinningMatrix::identity_mapped(w));
    SkinningMatrix sk = decode_skinning(musw);
    v.expect(sk.weights == w && encode_skinning(sk) == musw, "MUSW round trip");

    Skeleton s = oracle::random_tree(rng, 30);
    Skeleton sb = skeleton_from_json(skeleton_to_json(s));
    bool exact = sb == s;
    for (int i = 0; exact && i < s.joint_count(); ++i) {
      for (int c = 0; c < 3; ++c) exact = exact && same_bits(sb.joints[i][c], s.joints[i][c]);
    }
    v.expect(exact, "skeleton JSON round trip");

    AssemblyPlan plan;
    plan.parts.push_back({{"a0", RegionLabel::Body, 1}, 1, false});
    PartRef ref{"a1", RegionLabel::Wing, 1 + static_cast<int>(rng.next() % 3)};
    plan.parts.push_back({ref, 1 + static_cast<int>(rng.next() % 3), rng.next() % 2 == 0});
    plan.ops.push_back(EditOp::rotate(ref, random_unit(rng), random_point(rng), rng.uniform(-360, 360)));
    plan.ops.push_back(EditOp::translate(ref, random_unit(rng), rng.uniform(0, 1)));
    plan.ops.push_back(EditOp::scale(ref, rng.uniform(0.1, 3), std::nullopt));
    plan.attachments.push_back({{plan.parts[0].ref, static_cast<int>(rng.next() % 20)}, {ref, 0}});
    std::string text = plan_to_json(plan);
    AssemblyPlan pb = plan_from_json(text);
    v.expect(pb.parts == plan.parts && pb.attachments == plan.attachments && plan_to_json(pb) == text,
             "plan JSON round trip");
  }

  fs::path a = fs::temp_directory_path() / "muses_acceptance_a", b = fs::temp_directory_path() / "muses_acceptance_b";
  fs::remove_all(a);
  fs::remove_all(b);
  auto gw = std::make_shared<ModelGateway>();
  PipelineResult ra = run_pipeline(wings(a), gw), rb = run_pipeline(wings(b), gw);
  v.expect(ra.ok() && rb.ok(), "pipeline failed: " + ra.error + rb.error);
  auto ta = read_tree(a);
  v.expect(!ta.empty() && ta == read_tree(b), "pipeline outputs differ between runs");
  v.summary = "200 round trips per format, " + std::to_string(ta.size()) + " pipeline files identical";
  fs::remove_all(a);
  fs::remove_all(b);
}

void performance(Verdict& v) {
  fs::path out = fs::temp_directory_path() / "muses_acceptance_perf";
  fs::remove_all(out);
  auto gw = std::make_shared<ModelGateway>();
  auto start = Clock::now();
  PipelineResult r = run_pipeline(wings(out), gw);
  double pipeline_s = since(start);
  v.expect(r.ok(), "pipeline failed: " + r.error);
  v.expect(pipeline_s < 5.0, "pipeline took " + std::to_string(pipeline_s) + " s");
  std::size_t voxels = 0;
  if (r.ok()) voxels = decode_slat(read_file(out / "stage2/composed.slat")).size();
  v.expect(voxels <= 100000, std::to_string(voxels) + " active voxels");
  fs::remove_all(out);

  Session s(wings(out), gw);
  s.add_asset(s.load_source("fixture:quadruped"));
  s.add_asset(s.load_source("fixture:winged"));
  s.classify();
  s.plan("a quadruped with wings");
  start = Clock::now();
  const ComposedLatent& c = s.compose();
  double compose_s = since(start);
  v.expect(compose_s < 1.0, "compose took " + std::to_string(compose_s) + " s");
  v.summary = "pipeline " + std::to_string(pipeline_s) + " s, compose " + std::to_string(compose_s) + " s, " +
              std::to_string(c.latent.size()) + " voxels";
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Verdict&)>> criteria[] = {
      {"skeleton classification", classification},
      {"begin node and trunk junction oracle", begin_and_junction},
      {"weight chain invariants", weight_chain},
      {"overlap merge properties", overlap_merge},
      {"operator algebra", operators},
      {"composition oracle", composition},
      {"formats and determinism", formats},
      {"performance budget", performance},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      run(v);
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    if (v.failures == 0) {
      std::printf("PASS  %-38s %s\n", name, v.summary.c_str());
    } else {
      ++failed;
      std::printf("FAIL  %-38s %d failure(s): %s\n", name, v.failures, v.first.str().c_str());
    }
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
