#include "muses/skeleton.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <utility>

#include "muses/error.hpp"

namespace muses {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Mutable working copy used while cleaning. Indices stay in the original numbering;
// dead joints and dead edges are flagged rather than erased.
class WorkGraph {
 public:
  struct Edge {
    int a;
    int b;
    bool alive;
  };

  WorkGraph(const Skeleton& s, const std::vector<bool>& keep) : pos_(s.joints), alive_(keep) {
    for (const auto& bone : s.bones) {
      if (alive_[bone.a] && alive_[bone.b]) edges_.push_back({bone.a, bone.b, true});
    }
    members_.resize(pos_.size());
    for (std::size_t i = 0; i < pos_.size(); ++i) {
      if (alive_[i]) members_[i] = {static_cast<int>(i)};
    }
  }

  [[nodiscard]] int size() const { return static_cast<int>(pos_.size()); }
  [[nodiscard]] bool alive(int v) const { return alive_[v]; }
  [[nodiscard]] const Vec3& pos(int v) const { return pos_[v]; }
  [[nodiscard]] std::vector<int>& members(int v) { return members_[v]; }

  [[nodiscard]] std::vector<int> neighbors(int v) const {
    std::vector<int> out;
    for (const auto& e : edges_) {
      if (!e.alive) continue;
      if (e.a == v) out.push_back(e.b);
      else if (e.b == v) out.push_back(e.a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  [[nodiscard]] int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  [[nodiscard]] bool adjacent(int u, int v) const {
    return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
      return e.alive && ((e.a == u && e.b == v) || (e.a == v && e.b == u));
    });
  }

  void kill(int v) {
    alive_[v] = false;
    for (auto& e : edges_) {
      if (e.a == v || e.b == v) e.alive = false;
    }
  }

  void add_edge(int a, int b) { edges_.push_back({std::min(a, b), std::max(a, b), true}); }

  [[nodiscard]] std::vector<int> depths(int root) const {
    std::vector<int> depth(pos_.size(), -1);
    std::queue<int> queue;
    depth[root] = 0;
    queue.push(root);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (int n : neighbors(u)) {
        if (depth[n] < 0) {
          depth[n] = depth[u] + 1;
          queue.push(n);
        }
      }
    }
    return depth;
  }

  [[nodiscard]] int alive_count() const {
    return static_cast<int>(std::count(alive_.begin(), alive_.end(), true));
  }

  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }

 private:
  std::vector<Vec3> pos_;
  std::vector<bool> alive_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> members_;
};

struct LeafBranch {
  std::vector<int> joints;  // leaf first
  int junction = -1;
  double length = 0.0;
};

std::vector<LeafBranch> leaf_branches(const WorkGraph& g) {
  std::vector<LeafBranch> out;
  for (int v = 0; v < g.size(); ++v) {
    if (!g.alive(v) || g.degree(v) != 1) continue;
    LeafBranch branch;
    branch.joints.push_back(v);
    int prev = v;
    int cur = g.neighbors(v).front();
    branch.length = (g.pos(cur) - g.pos(prev)).norm();
    while (g.degree(cur) == 2) {
      branch.joints.push_back(cur);
      const auto nbrs = g.neighbors(cur);
      const int next = nbrs[0] == prev ? nbrs[1] : nbrs[0];
      branch.length += (g.pos(next) - g.pos(cur)).norm();
      prev = cur;
      cur = next;
    }
    if (g.degree(cur) >= 3) {
      branch.junction = cur;
      out.push_back(std::move(branch));
    }
  }
  return out;
}

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

bool is_forward_positive(const Vec3& f) { return f.x() > 0.0 || (f.x() == 0.0 && f.z() > 0.0); }

}  // namespace

// ---------------------------------------------------------------------------

void Skeleton::validate() const {
  const int n = joint_count();
  if (root < 0 || root >= n) {
    throw Error(Errc::InvalidInput, "root index out of range");
  }
  for (const auto& p : joints) {
    if (!p.allFinite()) throw Error(Errc::InvalidInput, "non-finite joint coordinate");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& bone : bones) {
    if (bone.a < 0 || bone.a >= n || bone.b < 0 || bone.b >= n) {
      throw Error(Errc::InvalidInput, "bone index out of range");
    }
    if (bone.a == bone.b) throw Error(Errc::InvalidInput, "bone connects a joint to itself");
    if (!seen.insert(std::minmax(bone.a, bone.b)).second) {
      throw Error(Errc::InvalidInput, "duplicate bone");
    }
  }
  if (names && names->size() != joints.size()) {
    throw Error(Errc::InvalidInput, "joint name count does not match joint count");
  }
}

std::vector<std::vector<int>> Skeleton::adjacency() const {
  std::vector<std::vector<int>> adj(joints.size());
  for (const auto& bone : bones) {
    adj[bone.a].push_back(bone.b);
    adj[bone.b].push_back(bone.a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

OrientationFrame OrientationFrame::from_forward(const Vec3& forward) {
  Vec3 horizontal(forward.x(), 0.0, forward.z());
  const double norm = horizontal.norm();
  if (!(norm > 0.0)) throw Error(Errc::DegenerateGeometry, "forward vector has no horizontal part");
  OrientationFrame frame;
  frame.forward = horizontal / norm;
  frame.up = Vec3::UnitY();
  frame.lateral = frame.up.cross(frame.forward);
  return frame;
}

std::string_view to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::Body: return "body";
    case RegionLabel::Leg: return "leg";
    case RegionLabel::Wing: return "wing";
    case RegionLabel::Tail: return "tail";
    case RegionLabel::Head: return "head";
  }
  return "body";
}

RegionLabel parse_region_label(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "body" || lower == "bodies") return RegionLabel::Body;
  if (lower == "leg" || lower == "legs") return RegionLabel::Leg;
  if (lower == "wing" || lower == "wings") return RegionLabel::Wing;
  if (lower == "tail" || lower == "tails") return RegionLabel::Tail;
  if (lower == "head" || lower == "heads") return RegionLabel::Head;
  throw Error(Errc::InvalidInput, "unknown region label '" + std::string(text) + "'");
}

const Region* SemanticPartition::find(RegionLabel label, int instance) const {
  for (const auto& r : regions) {
    if (r.label == label && r.instance == instance) return &r;
  }
  return nullptr;
}

int SemanticPartition::count(RegionLabel label) const {
  return static_cast<int>(
      std::count_if(regions.begin(), regions.end(), [&](const Region& r) { return r.label == label; }));
}

// ---------------------------------------------------------------------------

CleanSkeleton clean_skeleton(const Skeleton& s, const CleanOptions& options) {
  s.validate();
  if (!(options.prune_fraction >= 0.0 && options.prune_fraction < 0.5)) {
    throw Error(Errc::InvalidInput, "prune_fraction must lie in [0, 0.5)");
  }
  if (s.bones.empty()) throw Error(Errc::EmptySkeleton, "skeleton has no bones");
  if (bounds(s.joints).diagonal() <= 0.0) {
    throw Error(Errc::DegenerateGeometry, "all joints coincide");
  }

  const int n = s.joint_count();

  // Connected components by union-find over bones.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& bone : s.bones) {
    parent[find_root(parent, bone.a)] = find_root(parent, bone.b);
  }
  std::vector<std::vector<int>> components;
  {
    std::vector<int> slot(n, -1);
    for (int v = 0; v < n; ++v) {
      const int r = find_root(parent, v);
      if (slot[r] < 0) {
        slot[r] = static_cast<int>(components.size());
        components.emplace_back();
      }
      components[slot[r]].push_back(v);
    }
  }
  // Largest component wins; ties prefer the one holding the root, then the lowest index.
  std::size_t best = 0;
  for (std::size_t c = 1; c < components.size(); ++c) {
    const auto& cand = components[c];
    const auto& cur = components[best];
    const bool cand_root = std::binary_search(cand.begin(), cand.end(), s.root);
    const bool cur_root = std::binary_search(cur.begin(), cur.end(), s.root);
    if (cand.size() > cur.size() || (cand.size() == cur.size() && cand_root && !cur_root)) best = c;
  }

  CleanSkeleton out;
  std::vector<bool> keep(n, false);
  for (int v : components[best]) keep[v] = true;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (c != best) out.pruned_branches.push_back(components[c]);
  }

  WorkGraph g(s, keep);

  int root = s.root;
  if (!keep[root]) {
    int best_degree = -1;
    for (int v : components[best]) {
      const int d = g.degree(v);
      if (d > best_degree) {
        best_degree = d;
        root = v;
      }
    }
  }

  std::vector<Vec3> kept_points;
  for (int v : components[best]) kept_points.push_back(s.joints[v]);
  const double threshold = options.prune_fraction * bounds(kept_points).diagonal();
  const double cos_tol = std::cos(options.collinear_tolerance_deg * kPi / 180.0);

  for (bool changed = true; changed;) {
    changed = false;

    // Leaf-branch pruning, all short branches of one sweep removed together.
    auto branches = leaf_branches(g);
    std::vector<const LeafBranch*> doomed;
    {
      std::vector<const LeafBranch*> shorts;
      for (const auto& br : branches) {
        if (br.length < threshold) shorts.push_back(&br);
      }
      // Never strip a junction of every branch it has: keep the longest one.
      for (const auto* br : shorts) {
        std::vector<const LeafBranch*> same;
        for (const auto* other : shorts) {
          if (other->junction == br->junction) same.push_back(other);
        }
        if (static_cast<int>(same.size()) == g.degree(br->junction)) {
          const auto* longest = *std::max_element(same.begin(), same.end(), [](auto* x, auto* y) {
            return x->length < y->length || (x->length == y->length && x->joints[0] > y->joints[0]);
          });
          if (longest == br) continue;
        }
        doomed.push_back(br);
      }
    }
    for (const auto* br : doomed) {
      std::vector<int> removed;
      for (int v : br->joints) {
        removed.insert(removed.end(), g.members(v).begin(), g.members(v).end());
        if (v == root) root = br->junction;
        g.kill(v);
      }
      std::sort(removed.begin(), removed.end());
      out.pruned_branches.push_back(std::move(removed));
      changed = true;
    }

    // Redundant-node removal: degree-2 joints whose bones are (nearly) collinear.
    for (int v = 0; v < g.size(); ++v) {
      if (!g.alive(v) || v == root || g.degree(v) != 2) continue;
      const auto nbrs = g.neighbors(v);
      const int a = nbrs[0];
      const int b = nbrs[1];
      if (g.adjacent(a, b)) continue;
      const Vec3 e1 = g.pos(v) - g.pos(a);
      const Vec3 e2 = g.pos(b) - g.pos(v);
      const double n1 = e1.norm();
      const double n2 = e2.norm();
      const bool collinear = n1 <= 1e-12 || n2 <= 1e-12 || e1.dot(e2) >= cos_tol * n1 * n2;
      if (!collinear) continue;
      // The collapsed joint is represented by its child (the neighbor farther from the root).
      const auto depth = g.depths(root);
      const int child = depth[a] > depth[b] ? a : (depth[b] > depth[a] ? b : a);
      auto& dst = g.members(child);
      dst.insert(dst.end(), g.members(v).begin(), g.members(v).end());
      g.kill(v);
      g.add_edge(a, b);
      changed = true;
    }
  }

  std::vector<int> remap(n, -1);
  for (int v = 0; v < n; ++v) {
    if (!g.alive(v)) continue;
    remap[v] = static_cast<int>(out.skeleton.joints.size());
    out.skeleton.joints.push_back(s.joints[v]);
    auto members = g.members(v);
    std::sort(members.begin(), members.end());
    out.original_joint_map.push_back(std::move(members));
  }
  for (const auto& e : g.edges()) {
    if (e.alive) out.skeleton.bones.push_back({remap[e.a], remap[e.b]});
  }
  out.skeleton.root = remap[root];
  if (s.names) {
    std::vector<std::string> names;
    for (int v = 0; v < n; ++v) {
      if (g.alive(v)) names.push_back((*s.names)[v]);
    }
    out.skeleton.names = std::move(names);
  }
  return out;
}

OrientationFrame estimate_orientation(const Skeleton& s) {
  if (s.joints.size() < 2 || bounds(s.joints).diagonal() <= 0.0) {
    throw Error(Errc::DegenerateGeometry, "orientation needs at least two distinct joints");
  }
  const Vec3 mean = centroid(s.joints);
  double sxx = 0.0, sxz = 0.0, szz = 0.0;
  for (const auto& p : s.joints) {
    const double dx = p.x() - mean.x();
    const double dz = p.z() - mean.z();
    sxx += dx * dx;
    sxz += dx * dz;
    szz += dz * dz;
  }
  const double count = static_cast<double>(s.joints.size());
  sxx /= count;
  sxz /= count;
  szz /= count;

  const double half_trace = 0.5 * (sxx + szz);
  const double half_gap = 0.5 * (sxx - szz);
  const double lambda = half_trace + std::sqrt(half_gap * half_gap + sxz * sxz);
  if (std::sqrt(std::max(lambda, 0.0)) < 1e-9) {
    throw Error(Errc::DegenerateGeometry, "horizontal spread of joints is too small");
  }
  Vec3 axis;
  if (std::abs(sxz) > 1e-300) {
    // (lambda - szz, sxz) and (sxz, lambda - sxx) are both eigenvectors; use the better conditioned.
    const Eigen::Vector2d v1(lambda - szz, sxz);
    const Eigen::Vector2d v2(sxz, lambda - sxx);
    const Eigen::Vector2d v = v1.squaredNorm() >= v2.squaredNorm() ? v1 : v2;
    axis = Vec3(v.x(), 0.0, v.y());
  } else {
    axis = sxx >= szz ? Vec3::UnitX() : Vec3::UnitZ();
  }
  if (!is_forward_positive(axis)) axis = -axis;
  return OrientationFrame::from_forward(axis);
}

int select_begin_node(const Skeleton& s) {
  const auto adj = s.adjacency();
  const auto& nbrs = adj.at(s.root);
  if (nbrs.size() >= 3) return s.root;
  int best = s.root;
  std::size_t best_degree = 0;
  for (int u : nbrs) {  // ascending, so strict '>' keeps the lowest index on ties
    if (best == s.root || adj[u].size() > best_degree) {
      best = u;
      best_degree = adj[u].size();
    }
  }
  return best;
}

std::optional<int> find_trunk_junction(const Skeleton& s, const OrientationFrame& frame, int begin) {
  const auto adj = s.adjacency();
  const Vec3 dir = frame.forward.normalized();
  auto argmin = [&](auto&& qualifies) -> std::optional<int> {
    std::optional<int> best;
    double best_proj = 0.0;
    for (int v = 0; v < s.joint_count(); ++v) {
      if (!qualifies(v)) continue;
      const double proj = s.joints[v].dot(dir);
      if (!best || proj < best_proj) {
        best = v;
        best_proj = proj;
      }
    }
    return best;
  };
  if (auto d = argmin([&](int v) { return adj[v].size() >= 4; })) return d;
  return argmin([&](int v) { return v != begin && adj[v].size() >= 3; });
}

// ---------------------------------------------------------------------------

namespace {

struct Branch {
  int anchor = -1;
  std::vector<int> joints;  // sorted
  std::vector<int> bones;   // sorted
  int endpoint = -1;
  bool is_path = false;
  std::optional<RegionLabel> label;
};

struct Hypothesis {
  SemanticPartition partition;
  int score = 0;
  double anterior = 0.0;  // (d - b) along forward; breaks score ties independent of the world frame
};

class RegionClassifier {
 public:
  RegionClassifier(const Skeleton& s, const ClassifyOptions& options)
      : s_(s), options_(options), adj_(s.adjacency()) {}

  Hypothesis run(const OrientationFrame& frame) const {
    const Vec3& fwd = frame.forward;
    const Vec3& lat = frame.lateral;
    const int b = select_begin_node(s_);
    const Vec3& bp = s_.joints[b];
    // find_trunk_junction picks the minimum projection; searching against the posterior direction
    // makes it return the most anterior qualifying junction.
    const std::optional<int> d = find_trunk_junction(s_, frame.flipped(), b);

    const Aabb box = bounds(s_.joints);
    const double diag = box.diagonal();
    const Vec3 center = centroid(s_.joints);
    double lat_lo = std::numeric_limits<double>::infinity();
    double lat_hi = -lat_lo;
    for (const auto& p : s_.joints) {
      lat_lo = std::min(lat_lo, p.dot(lat));
      lat_hi = std::max(lat_hi, p.dot(lat));
    }
    const double lateral_extent = lat_hi - lat_lo;

    const std::vector<int> path = d ? shortest_path(b, *d) : std::vector<int>{b};
    std::vector<bool> on_path(s_.joints.size(), false);
    for (int v : path) on_path[v] = true;
    auto branches = collect_branches(path, on_path);

    auto symmetric_distance = [&](const Branch& x, const Branch& y) {
      return (reflect(s_.joints[x.endpoint], bp, lat) - s_.joints[y.endpoint]).norm();
    };
    auto pair_up = [&](const std::vector<int>& candidates) {
      struct Pair {
        double dist;
        int i;
        int j;
      };
      std::vector<Pair> pairs;
      for (std::size_t x = 0; x < candidates.size(); ++x) {
        for (std::size_t y = x + 1; y < candidates.size(); ++y) {
          const double dist = symmetric_distance(branches[candidates[x]], branches[candidates[y]]);
          if (dist < options_.symmetry_fraction * diag) {
            pairs.push_back({dist, candidates[x], candidates[y]});
          }
        }
      }
      std::sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) {
        return std::tie(p.dist, p.i, p.j) < std::tie(q.dist, q.i, q.j);
      });
      std::vector<std::pair<int, int>> chosen;
      std::vector<bool> used(branches.size(), false);
      for (const auto& p : pairs) {
        if (used[p.i] || used[p.j]) continue;
        used[p.i] = used[p.j] = true;
        chosen.emplace_back(p.i, p.j);
      }
      return chosen;
    };

    const bool separate_trunk = d && *d != b;
    auto near_begin = [&](const Branch& br) { return !(separate_trunk && br.anchor == *d); };

    int pairs_found = 0;

    // Legs: symmetric leaf paths ending below the begin node.
    std::vector<int> leg_candidates;
    for (std::size_t i = 0; i < branches.size(); ++i) {
      const auto& br = branches[i];
      if (near_begin(br) && br.is_path && s_.joints[br.endpoint].y() < bp.y()) {
        leg_candidates.push_back(static_cast<int>(i));
      }
    }
    for (auto [i, j] : pair_up(leg_candidates)) {
      branches[i].label = branches[j].label = RegionLabel::Leg;
      ++pairs_found;
    }

    // Tail: laterally centered leaf path extending posteriorly.
    bool tail_found = false;
    {
      int best = -1;
      double best_proj = 0.0;
      for (std::size_t i = 0; i < branches.size(); ++i) {
        const auto& br = branches[i];
        if (br.label || !near_begin(br) || !br.is_path) continue;
        const Vec3& e = s_.joints[br.endpoint];
        const bool centered =
            std::abs((e - center).dot(lat)) < options_.tail_center_fraction * lateral_extent;
        const double proj = (e - bp).dot(fwd);
        if (centered && proj < 0.0 && (best < 0 || proj < best_proj)) {
          best = static_cast<int>(i);
          best_proj = proj;
        }
      }
      if (best >= 0) {
        branches[best].label = RegionLabel::Tail;
        tail_found = true;
      }
    }

    bool head_found = false;
    if (d) {
      std::vector<int> at_trunk;
      for (std::size_t i = 0; i < branches.size(); ++i) {
        if (branches[i].anchor == *d && !branches[i].label) at_trunk.push_back(static_cast<int>(i));
      }
      for (auto [i, j] : pair_up(at_trunk)) {
        const double mean_y = 0.5 * (s_.joints[branches[i].endpoint].y() + s_.joints[branches[j].endpoint].y());
        const RegionLabel label = mean_y > bp.y() ? RegionLabel::Wing : RegionLabel::Leg;
        branches[i].label = branches[j].label = label;
        ++pairs_found;
      }
      std::vector<int> remaining;
      for (int i : at_trunk) {
        if (!branches[i].label) remaining.push_back(i);
      }
      if (remaining.size() >= 2) {
        throw Error(Errc::ClassificationAmbiguous,
                    std::to_string(remaining.size()) + " branches at the trunk junction compete for the head");
      }
      if (remaining.size() == 1) {
        branches[remaining.front()].label = RegionLabel::Head;
        head_found = true;
      }
    }

    Hypothesis h;
    h.partition.begin_node = b;
    h.partition.trunk_junction = d;

    const bool any_leg = std::any_of(branches.begin(), branches.end(),
                                     [](const Branch& br) { return br.label == RegionLabel::Leg; });
    if (!d && !any_leg) {
      // Degenerate (fish-like) assignment: the whole skeleton is the body.
      Region body;
      body.joints.resize(s_.joints.size());
      std::iota(body.joints.begin(), body.joints.end(), 0);
      body.bones.resize(s_.bones.size());
      std::iota(body.bones.begin(), body.bones.end(), 0);
      h.partition.regions.push_back(std::move(body));
      h.score = 0;
      return h;
    }

    Region body;
    body.joints = path;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) body.bones.push_back(bone_index(path[i], path[i + 1]));
    for (const auto& br : branches) {
      if (br.label) continue;
      body.joints.insert(body.joints.end(), br.joints.begin(), br.joints.end());
      body.bones.insert(body.bones.end(), br.bones.begin(), br.bones.end());
    }
    std::sort(body.joints.begin(), body.joints.end());
    std::sort(body.bones.begin(), body.bones.end());
    h.partition.regions.push_back(std::move(body));

    auto emit = [&](RegionLabel label) {
      std::vector<const Branch*> group;
      for (const auto& br : branches) {
        if (br.label == label) group.push_back(&br);
      }
      // Front to back, then by lateral side.
      std::sort(group.begin(), group.end(), [&](const Branch* x, const Branch* y) {
        const Vec3 ex = s_.joints[x->endpoint] - bp;
        const Vec3 ey = s_.joints[y->endpoint] - bp;
        const double fx = ex.dot(fwd), fy = ey.dot(fwd);
        if (fx != fy) return fx > fy;
        return ex.dot(lat) < ey.dot(lat);
      });
      int instance = 1;
      for (const auto* br : group) {
        h.partition.regions.push_back({label, instance++, br->joints, br->bones, br->anchor});
      }
    };
    emit(RegionLabel::Leg);
    emit(RegionLabel::Wing);
    emit(RegionLabel::Tail);
    emit(RegionLabel::Head);

    h.score = (head_found ? 2 : 0) + (tail_found ? 1 : 0) + pairs_found;
    if (d) h.anterior = (s_.joints[*d] - bp).dot(fwd);
    return h;
  }

 private:
  int bone_index(int u, int v) const {
    for (std::size_t i = 0; i < s_.bones.size(); ++i) {
      const auto& bone = s_.bones[i];
      if ((bone.a == u && bone.b == v) || (bone.a == v && bone.b == u)) return static_cast<int>(i);
    }
    throw Error(Errc::InvalidInput, "joints are not connected by a bone");
  }

  std::vector<int> shortest_path(int from, int to) const {
    std::vector<int> prev(s_.joints.size(), -1);
    std::vector<bool> seen(s_.joints.size(), false);
    std::queue<int> queue;
    queue.push(from);
    seen[from] = true;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      if (u == to) break;
      for (int n : adj_[u]) {
        if (!seen[n]) {
          seen[n] = true;
          prev[n] = u;
          queue.push(n);
        }
      }
    }
    if (!seen[to]) throw Error(Errc::InvalidInput, "skeleton is disconnected");
    std::vector<int> path;
    for (int v = to; v != -1; v = prev[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
  }

  std::vector<Branch> collect_branches(const std::vector<int>& path, const std::vector<bool>& on_path) const {
    std::vector<Branch> out;
    std::vector<bool> taken(on_path);
    for (int anchor : path) {
      for (int start : adj_[anchor]) {
        if (taken[start]) continue;
        Branch br;
        br.anchor = anchor;
        std::queue<int> queue;
        queue.push(start);
        taken[start] = true;
        while (!queue.empty()) {
          const int u = queue.front();
          queue.pop();
          br.joints.push_back(u);
          for (int n : adj_[u]) {
            if (!taken[n]) {
              taken[n] = true;
              queue.push(n);
            }
          }
        }
        std::sort(br.joints.begin(), br.joints.end());
        std::vector<bool> member(s_.joints.size(), false);
        for (int v : br.joints) member[v] = true;
        for (std::size_t i = 0; i < s_.bones.size(); ++i) {
          const auto& bone = s_.bones[i];
          if ((member[bone.a] && (member[bone.b] || on_path[bone.b])) ||
              (member[bone.b] && on_path[bone.a])) {
            br.bones.push_back(static_cast<int>(i));
          }
        }
        const bool has_leaf = std::any_of(br.joints.begin(), br.joints.end(),
                                          [&](int v) { return adj_[v].size() == 1; });
        br.is_path = has_leaf && std::all_of(br.joints.begin(), br.joints.end(),
                                             [&](int v) { return adj_[v].size() <= 2; });
        br.endpoint = farthest_joint(anchor, member);
        out.push_back(std::move(br));
      }
    }
    return out;
  }

  // Branch joint with the largest bone-length distance from the anchor.
  int farthest_joint(int anchor, const std::vector<bool>& member) const {
    std::vector<double> dist(s_.joints.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[anchor] = 0.0;
    queue.push({0.0, anchor});
    while (!queue.empty()) {
      auto [du, u] = queue.top();
      queue.pop();
      if (du > dist[u]) continue;
      for (int n : adj_[u]) {
        if (!member[n]) continue;
        const double dn = du + (s_.joints[n] - s_.joints[u]).norm();
        if (dn < dist[n]) {
          dist[n] = dn;
          queue.push({dn, n});
        }
      }
    }
    int best = -1;
    for (std::size_t v = 0; v < s_.joints.size(); ++v) {
      if (member[v] && (best < 0 || dist[v] > dist[best])) best = static_cast<int>(v);
    }
    return best;
  }

  const Skeleton& s_;
  ClassifyOptions options_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace

Classification classify_regions(const CleanSkeleton& s, const OrientationFrame& frame,
                                const ClassifyOptions& options) {
  s.skeleton.validate();
  const RegionClassifier classifier(s.skeleton, options);
  const OrientationFrame candidates[2] = {frame, frame.flipped()};
  std::optional<Hypothesis> results[2];
  std::optional<Error> failure;
  for (int i = 0; i < 2; ++i) {
    try {
      results[i] = classifier.run(candidates[i]);
    } catch (const Error& e) {
      if (e.code() != Errc::ClassificationAmbiguous) throw;
      failure = e;
    }
  }
  if (!results[0] && !results[1]) throw *failure;

  int pick = 0;
  if (!results[0]) {
    pick = 1;
  } else if (results[1]) {
    if (results[1]->score > results[0]->score) pick = 1;
    else if (results[1]->score == results[0]->score) {
      // The trunk junction sits toward the head. Only a junction level with b falls
      // back to the +x-leaning sign.
      const double gap = results[1]->anterior - results[0]->anterior;
      if (std::abs(gap) > 1e-9) pick = gap > 0.0 ? 1 : 0;
      else if (!is_forward_positive(candidates[0].forward)) pick = 1;
    }
  }
  return {std::move(results[pick]->partition), candidates[pick], results[pick]->score};
}

std::vector<std::vector<int>> original_region_joints(const CleanSkeleton& clean,
                                                     const SemanticPartition& partition) {
  std::vector<std::vector<int>> out;
  for (const auto& region : partition.regions) {
    std::vector<int> joints;
    for (int v : region.joints) {
      const auto& members = clean.original_joint_map.at(v);
      joints.insert(joints.end(), members.begin(), members.end());
    }
    std::sort(joints.begin(), joints.end());
    out.push_back(std::move(joints));
  }
  return out;
}

}  // namespace muses
