#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <limits>
#include <vector>

namespace subfit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// Vertex/sample position blocks, one row per point.
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline MatX3 to_matrix(const std::vector<Vec3>& pts) {
  MatX3 m(static_cast<int>(pts.size()), 3);
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) m.row(i) = pts[i];
  return m;
}

inline std::vector<Vec3> to_points(const MatX3& m) {
  std::vector<Vec3> pts(m.rows());
  for (int i = 0; i < m.rows(); ++i) pts[i] = m.row(i);
  return pts;
}

struct Bbox {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Bbox& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
  bool empty() const { return !(min.x() <= max.x()); }
};

template <class Range>
Bbox bbox_of(const Range& pts) {
  Bbox b;
  for (const auto& p : pts) b.extend(p);
  return b;
}

}  // namespace subfit
