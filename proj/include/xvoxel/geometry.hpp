#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>

namespace xv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// world = rotation * local + translation
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_world(const Vec3& local) const { return rotation * local + translation; }
  Vec3 to_local(const Vec3& world) const { return rotation.transpose() * (world - translation); }
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 max = Vec3::Constant(std::numeric_limits<double>::lowest());

  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return empty() ? 0.0 : extent().norm(); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  void pad(double eps) {
    min.array() -= eps;
    max.array() += eps;
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool intersects(const Aabb& b) const {
    return (min.array() <= b.max.array()).all() && (max.array() >= b.min.array()).all();
  }
  // Squared distance from p to this box (0 inside).
  double squared_distance(const Vec3& p) const {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = std::max({min[k] - p[k], 0.0, p[k] - max[k]});
      d2 += d * d;
    }
    return d2;
  }
};

// Axis/angle rotation helper used by scene parsing and tests.
inline Mat3 axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix();
}

}  // namespace xv
