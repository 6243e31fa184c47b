#pragma once

#include <optional>
#include <string>
#include <vector>

#include "subfit/normalize.hpp"
#include "subfit/pointcloud.hpp"
#include "subfit/trimesh.hpp"

namespace subfit {

enum class MeshFormat { Obj, Ply };

/// Picks a format from the file extension; throws InvalidArgument otherwise.
MeshFormat format_from_path(const std::string& path);

/// Loads an OBJ or PLY triangle mesh. Quads and larger polygons are
/// fan-triangulated with a warning. Validation runs on construction;
/// non-manifold input throws unless allow_nonmanifold.
TriMesh load_mesh(const std::string& path, MeshFormat format,
                  bool allow_nonmanifold = false,
                  std::vector<std::string>* warnings = nullptr);
TriMesh load_mesh(const std::string& path, bool allow_nonmanifold = false,
                  std::vector<std::string>* warnings = nullptr);

/// Loads an oriented point cloud from PLY (x y z nx ny nz, float32/float64,
/// ascii or binary little-endian). Normals are renormalized; missing normal
/// properties throw MissingNormals.
PointCloud load_point_cloud(const std::string& path);

/// Writes OBJ or PLY (ascii, >=9 significant digits). When undo is given,
/// its inverse is applied to positions on export.
void write_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format,
                const std::optional<NormalizeTransform>& undo = std::nullopt);
void write_mesh(const TriMesh& mesh, const std::string& path,
                const std::optional<NormalizeTransform>& undo = std::nullopt);

void write_point_cloud(const PointCloud& cloud, const std::string& path,
                       const std::optional<NormalizeTransform>& undo = std::nullopt);

}  // namespace subfit
