#include "subfit/hausdorff.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "subfit/errors.hpp"

namespace subfit {

PointCloud sample_mesh_to_cloud(const TriMesh& mesh, int n, std::uint64_t seed) {
  if (n < 0) throw Error(ErrorClass::InvalidArgument, "negative sample count");
  std::vector<double> cum(mesh.face_count(), 0.0);
  double total = 0;
  for (int f = 0; f < mesh.face_count(); ++f) {
    total += mesh.face_area(f);
    cum[f] = total;
  }
  if (total <= 0) throw Error(ErrorClass::DegenerateInput, "mesh has zero surface area");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  for (int i = 0; i < n; ++i) {
    double r = uni(rng) * total;
    int f = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
    f = std::min(f, mesh.face_count() - 1);
    double su = std::sqrt(uni(rng));
    double v = uni(rng);
    double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
    const auto& fc = mesh.face(f);
    cloud.points.push_back(b0 * mesh.vertex(fc[0]) + b1 * mesh.vertex(fc[1]) + b2 * mesh.vertex(fc[2]));
    cloud.normals.push_back(mesh.face_normal(f));
  }
  cloud.validate();
  return cloud;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double v = d1 / (d1 - d3);
    return a + v * ab;
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double w = d2 / (d2 - d6);
    return a + w * ac;
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return a + ab * v + ac * w;
}

MeshDistance::MeshDistance(const TriMesh& mesh) {
  tris_.reserve(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& fc = mesh.face(f);
    tris_.push_back({mesh.vertex(fc[0]), mesh.vertex(fc[1]), mesh.vertex(fc[2])});
  }
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!tris_.empty()) root_ = build(0, static_cast<int>(tris_.size()));
}

int MeshDistance::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  Vec3 clo = node.lo, chi = node.hi;
  for (int i = begin; i < end; ++i) {
    const auto& t = tris_[order_[i]];
    for (const auto& p : t) {
      node.lo = node.lo.cwiseMin(p);
      node.hi = node.hi.cwiseMax(p);
    }
    Vec3 c = (t[0] + t[1] + t[2]) / 3.0;
    clo = clo.cwiseMin(c);
    chi = chi.cwiseMax(c);
  }
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= 8) return id;
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int x, int y) {
                     auto cx = (tris_[x][0] + tris_[x][1] + tris_[x][2])[axis];
                     auto cy = (tris_[y][0] + tris_[y][1] + tris_[y][2])[axis];
                     return cx < cy;
                   });
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void MeshDistance::query(int ni, const Vec3& p, double* best) const {
  const Node& node = nodes_[ni];
  double d2 = 0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max({node.lo[k] - p[k], p[k] - node.hi[k], 0.0});
    d2 += d * d;
  }
  if (d2 >= *best * *best) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const auto& t = tris_[order_[i]];
      double d = (closest_point_on_triangle(p, t[0], t[1], t[2]) - p).norm();
      *best = std::min(*best, d);
    }
    return;
  }
  query(node.left, p, best);
  query(node.right, p, best);
}

double MeshDistance::distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  if (root_ >= 0) query(root_, p, &best);
  return best;
}

namespace {

double directed_hausdorff(const TriMesh& from, const MeshDistance& to, int samples,
                          std::uint64_t seed) {
  double worst = 0;
  for (const auto& v : from.vertices()) worst = std::max(worst, to.distance(v));
  if (samples > 0) {
    PointCloud c = sample_mesh_to_cloud(from, samples, seed);
    for (const auto& p : c.points) worst = std::max(worst, to.distance(p));
  }
  return worst;
}

}  // namespace

double hausdorff(const TriMesh& a, const TriMesh& b, int samples, std::uint64_t seed) {
  MeshDistance da(a), db(b);
  double h = std::max(directed_hausdorff(a, db, samples, seed),
                      directed_hausdorff(b, da, samples, seed + 1));
  Bbox box = a.bounds();
  box.extend(b.bounds());
  double diag = box.diagonal();
  return diag > 0 ? h / diag : h;
}

}  // namespace subfit
