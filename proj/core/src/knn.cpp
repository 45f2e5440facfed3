#include "muses/knn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "muses/error.hpp"

namespace muses {

namespace {

constexpr int kLeafSize = 8;

struct Candidate {
  double d2;
  int index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()), order_(points.size()) {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  if (!points_.empty()) build(0, static_cast<int>(points_.size()));
}

int KdTree::build(int begin, int end) {
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Aabb box;
  for (int i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  int axis = 0;
  box.extent().maxCoeff(&axis);
  int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  double split = points_[order_[mid]][axis];
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> KdTree::nearest(const Vec3& query, int k) const {
  if (k <= 0) throw Error(Errc::InvalidInput, "k must be positive");
  k = std::min(k, size());
  std::priority_queue<Candidate> best;  // max-heap: top is the current worst
  if (k == 0) return {};

  auto visit = [&](auto&& self, int id) -> void {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        int idx = order_[i];
        Candidate c{(points_[idx] - query).squaredNorm(), idx};
        if (static_cast<int>(best.size()) < k) {
          best.push(c);
        } else if (c < best.top()) {
          best.pop();
          best.push(c);
        }
      }
      return;
    }
    double diff = query[n.axis] - n.split;
    int near = diff < 0 ? n.left : n.right;
    int far = diff < 0 ? n.right : n.left;
    self(self, near);
    // Points equal to the split value may sit on either side, so ties must be explored.
    if (static_cast<int>(best.size()) < k || diff * diff <= best.top().d2) self(self, far);
  };
  visit(visit, 0);

  std::vector<Neighbor> out(best.size());
  for (auto i = static_cast<int>(best.size()) - 1; i >= 0; --i) {
    out[i] = {best.top().index, std::sqrt(best.top().d2)};
    best.pop();
  }
  return out;
}

}  // namespace muses
