#include "subfit/normalize.hpp"

namespace subfit {

NormalizeTransform unit_box_transform(const Bbox& box) {
  if (box.empty()) throw Error(ErrorClass::DegenerateInput, "empty input");
  double longest = box.extent().maxCoeff();
  if (longest <= 0.0)
    throw Error(ErrorClass::DegenerateInput, "zero bounding box diagonal");
  NormalizeTransform t;
  t.scale = 1.0 / longest;
  t.translation = -box.min;
  return t;
}

std::pair<PointCloud, NormalizeTransform> normalize_to_unit_box(const PointCloud& cloud) {
  if (cloud.points.empty()) throw Error(ErrorClass::DegenerateInput, "empty point cloud");
  NormalizeTransform t = unit_box_transform(cloud.bounds());
  return {apply_transform(cloud, t), t};
}

std::pair<TriMesh, NormalizeTransform> normalize_to_unit_box(const TriMesh& mesh) {
  if (mesh.vertex_count() == 0) throw Error(ErrorClass::DegenerateInput, "empty mesh");
  NormalizeTransform t = unit_box_transform(mesh.bounds());
  return {apply_transform(mesh, t), t};
}

PointCloud apply_transform(const PointCloud& cloud, const NormalizeTransform& t) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = t.apply(p);
  return out;  // normals unchanged under uniform scale + translation
}

TriMesh apply_transform(const TriMesh& mesh, const NormalizeTransform& t) {
  MatX3 pos(mesh.vertex_count(), 3);
  for (int i = 0; i < mesh.vertex_count(); ++i) pos.row(i) = t.apply(mesh.vertex(i));
  return mesh.with_positions(pos);
}

}  // namespace subfit
