#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "subfit/geometry.hpp"

namespace subfit {

struct ValidationReport {
  bool indices_valid = true;
  bool edge_manifold = true;
  bool vertex_manifold = true;
  bool orientation_consistent = true;
  int boundary_edges = 0;
  std::string detail;

  bool manifold() const {
    return indices_valid && edge_manifold && vertex_manifold && orientation_consistent;
  }
};

/// Indexed triangle mesh with ordered adjacency. Immutable after build().
///
/// One-ring order convention: within face (v, a, b), counterclockwise, the
/// ring successor of a around v is b. Open fans run from one boundary
/// neighbor to the other; closed fans start at the smallest-index neighbor.
class TriMesh {
 public:
  TriMesh() = default;

  /// Builds adjacency and validates. Throws NonManifold unless
  /// allow_nonmanifold is set, in which case the report records the failure
  /// and ring order is unspecified.
  static TriMesh build(std::vector<Vec3> vertices,
                       std::vector<std::array<int, 3>> faces,
                       bool allow_nonmanifold = false);

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int face_count() const { return static_cast<int>(faces_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const Vec3& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& face(int f) const { return faces_[f]; }

  const std::array<int, 2>& edge(int e) const { return edges_[e]; }
  /// Incident faces of an edge; second entry -1 on the boundary.
  const std::array<int, 2>& edge_faces(int e) const { return edge_faces_[e]; }
  /// Edge between face corners k and (k+1)%3.
  const std::array<int, 3>& face_edges(int f) const { return face_edges_[f]; }
  /// Edge id joining a and b, or -1.
  int find_edge(int a, int b) const;
  bool is_boundary_edge(int e) const { return edge_faces_[e][1] < 0; }

  const std::vector<int>& vertex_ring(int v) const { return rings_[v]; }
  /// Faces around v, aligned with the ring: fan[i] contains (v, ring[i], ring[i+1]).
  const std::vector<int>& vertex_fan(int v) const { return fans_[v]; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }
  int valence(int v) const { return static_cast<int>(rings_[v].size()); }

  /// Third vertex of the face on the other side of edge (a,b) from face f,
  /// or -1 if (a,b) is a boundary edge.
  int across_vertex(int f, int a, int b) const;

  const ValidationReport& report() const { return report_; }
  bool is_closed() const { return report_.boundary_edges == 0; }
  int euler_characteristic() const { return vertex_count() - edge_count() + face_count(); }
  int connected_components() const;
  /// Genus from the Euler formula; valid for closed connected meshes.
  int genus() const { return (2 - euler_characteristic()) / 2; }

  /// FNV-1a hash of the connectivity (vertex count + face indices).
  std::uint64_t connectivity_hash() const;

  /// Copy with replaced vertex positions (same connectivity).
  TriMesh with_positions(const MatX3& positions) const;

  Bbox bounds() const { return bbox_of(vertices_); }

  Vec3 face_normal(int f) const;
  double face_area(int f) const;
  double total_area() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 2>> edge_faces_;
  std::vector<std::array<int, 3>> face_edges_;
  std::vector<std::vector<int>> rings_;
  std::vector<std::vector<int>> fans_;
  std::vector<char> boundary_vertex_;
  ValidationReport report_;
};

}  // namespace subfit
