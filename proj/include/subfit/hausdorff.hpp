#pragma once

#include <cstdint>

#include "subfit/pointcloud.hpp"
#include "subfit/trimesh.hpp"

namespace subfit {

/// Area-weighted uniform surface samples with face normals; deterministic
/// for a fixed seed.
PointCloud sample_mesh_to_cloud(const TriMesh& mesh, int n, std::uint64_t seed);

/// Exact point-to-surface distance queries against a triangle set.
class MeshDistance {
 public:
  explicit MeshDistance(const TriMesh& mesh);
  double distance(const Vec3& p) const;

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };
  int build(int begin, int end);
  void query(int node, const Vec3& p, double* best) const;

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Symmetric sampled point-to-surface Hausdorff estimate between two meshes,
/// as a fraction of their combined bounding-box diagonal. Samples are the
/// mesh vertices plus `samples` area-weighted points per side.
double hausdorff(const TriMesh& a, const TriMesh& b, int samples = 100000, std::uint64_t seed = 0);

}  // namespace subfit
