#include "subfit/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace subfit {

namespace {
constexpr int kLeafSize = 16;
}

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    node.lo = node.lo.cwiseMin(points_[order_[i]]);
    node.hi = node.hi.cwiseMax(points_[order_[i]]);
  }
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Vec3 extent = node.hi - node.lo;
  int axis = 0;
  extent.maxCoeff(&axis);
  int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  double split = points_[order_[mid]][axis];

  int left = build(begin, mid, depth + 1);
  int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::radius_query(const Vec3& x, double radius, std::vector<int>* out) const {
  if (root_ < 0 || radius <= 0) return;
  size_t before = out->size();
  radius_rec(root_, x, radius * radius, out);
  std::sort(out->begin() + before, out->end());
}

std::vector<int> KdTree::radius_query(const Vec3& x, double radius) const {
  std::vector<int> out;
  radius_query(x, radius, &out);
  return out;
}

void KdTree::radius_rec(int ni, const Vec3& x, double r2, std::vector<int>* out) const {
  const Node& node = nodes_[ni];
  double d2 = 0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max({node.lo[k] - x[k], x[k] - node.hi[k], 0.0});
    d2 += d * d;
  }
  if (d2 >= r2) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int p = order_[i];
      if ((points_[p] - x).squaredNorm() < r2) out->push_back(p);
    }
    return;
  }
  radius_rec(node.left, x, r2, out);
  radius_rec(node.right, x, r2, out);
}

std::pair<int, double> KdTree::nearest(const Vec3& x) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  if (root_ >= 0) nearest_rec(root_, x, &best, &best_d2);
  return {best, std::sqrt(best_d2)};
}

void KdTree::nearest_rec(int ni, const Vec3& x, int* best, double* best_d2) const {
  const Node& node = nodes_[ni];
  double d2 = 0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max({node.lo[k] - x[k], x[k] - node.hi[k], 0.0});
    d2 += d * d;
  }
  if (d2 >= *best_d2) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int p = order_[i];
      double dd = (points_[p] - x).squaredNorm();
      if (dd < *best_d2 || (dd == *best_d2 && (*best < 0 || p < *best))) {
        *best_d2 = dd;
        *best = p;
      }
    }
    return;
  }
  // Visit the side containing x first.
  int first = node.left, second = node.right;
  if (x[node.axis] > node.split) std::swap(first, second);
  nearest_rec(first, x, best, best_d2);
  nearest_rec(second, x, best, best_d2);
}

}  // namespace subfit
