#pragma once

#include <span>
#include <vector>

#include "muses/geometry.hpp"

namespace muses {

struct Neighbor {
  int index = 0;
  double distance = 0.0;
};

// Exact k-nearest-neighbour queries. Results are ordered by (distance, index), so
// equidistant points always resolve to the lower index.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  [[nodiscard]] std::vector<Neighbor> nearest(const Vec3& query, int k) const;
  [[nodiscard]] int size() const { return static_cast<int>(points_.size()); }

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int axis = -1;  // -1 for a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace muses
