#pragma once

#include <limits>
#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace muses {

using Vec3 = Eigen::Vector3d;
using Affine = Eigen::Transform<double, 3, Eigen::Affine>;

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  [[nodiscard]] bool empty() const { return (hi.array() < lo.array()).any(); }
  [[nodiscard]] Vec3 extent() const { return empty() ? Vec3::Zero() : Vec3(hi - lo); }
  [[nodiscard]] double diagonal() const { return extent().norm(); }
};

Aabb bounds(std::span<const Vec3> points);
Vec3 centroid(std::span<const Vec3> points);

// Reflection across the plane through `origin` with unit normal `normal`.
inline Vec3 reflect(const Vec3& p, const Vec3& origin, const Vec3& normal) {
  return p - 2.0 * (p - origin).dot(normal) * normal;
}

}  // namespace muses
