#pragma once

#include "subfit/pointcloud.hpp"
#include "subfit/trimesh.hpp"

namespace subfit {

/// Uniform scale + translation, applied as x' = scale * (x + translation).
/// Uniform scale keeps normals and ARAP rest shapes valid.
struct NormalizeTransform {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * (x + translation); }
  Vec3 invert(const Vec3& x) const { return x / scale - translation; }

  static NormalizeTransform identity() { return {}; }
  bool is_identity() const { return scale == 1.0 && translation.isZero(0.0); }
};

/// Computes the transform that maps the bounding box into [0,1]^3 with the
/// longest axis spanning exactly [0,1]. Throws DegenerateInput on a zero
/// bounding box.
NormalizeTransform unit_box_transform(const Bbox& box);

std::pair<PointCloud, NormalizeTransform> normalize_to_unit_box(const PointCloud& cloud);
std::pair<TriMesh, NormalizeTransform> normalize_to_unit_box(const TriMesh& mesh);

PointCloud apply_transform(const PointCloud& cloud, const NormalizeTransform& t);
TriMesh apply_transform(const TriMesh& mesh, const NormalizeTransform& t);

}  // namespace subfit
