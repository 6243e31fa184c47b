#pragma once

#include <vector>

#include "subfit/errors.hpp"
#include "subfit/geometry.hpp"

namespace subfit {

/// Oriented point cloud: positions plus unit normals, same length.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  int size() const { return static_cast<int>(points.size()); }

  /// Renormalizes normals to unit length; rejects zero or non-finite entries.
  void validate() {
    if (points.size() != normals.size())
      throw Error(ErrorClass::DimensionMismatch, "points/normals length mismatch");
    for (size_t i = 0; i < points.size(); ++i) {
      if (!points[i].allFinite() || !normals[i].allFinite())
        throw Error(ErrorClass::InvalidArgument, "non-finite point cloud entry");
      double len = normals[i].norm();
      if (len < 1e-12)
        throw Error(ErrorClass::MissingNormals, "zero-length normal at point " + std::to_string(i));
      normals[i] /= len;
    }
  }

  Bbox bounds() const { return bbox_of(points); }
};

}  // namespace subfit
