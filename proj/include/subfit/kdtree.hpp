#pragma once

#include <vector>

#include "subfit/geometry.hpp"

namespace subfit {

/// Static median-split kd-tree over 3D points. Queries return exact
/// neighbor sets (verified against brute force in the tests).
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const std::vector<Vec3>& points);

  /// Indices of all points with ||p - x|| < radius, ascending.
  std::vector<int> radius_query(const Vec3& x, double radius) const;
  /// Appends to out instead of allocating (hot path of the IMLS energy).
  void radius_query(const Vec3& x, double radius, std::vector<int>* out) const;

  /// Index of the nearest point and its distance; (-1, inf) when empty.
  std::pair<int, double> nearest(const Vec3& x) const;

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range in order_
    int axis = 0;
    double split = 0;
    Vec3 lo, hi;  // subtree bounds
  };

  int build(int begin, int end, int depth);
  void radius_rec(int node, const Vec3& x, double r2, std::vector<int>* out) const;
  void nearest_rec(int node, const Vec3& x, int* best, double* best_d2) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace subfit
