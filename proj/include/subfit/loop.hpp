#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <vector>

#include "subfit/trimesh.hpp"

namespace subfit {

using SparseRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Per-neighbor weight of the Loop vertex mask,
/// beta(N) = (1/N) * (5/8 - (3/8 + cos(2*pi/N)/4)^2).
double loop_beta(int valence);

/// Per-neighbor weight of the limit-position stencil for an interior vertex,
/// 1 / (3/(8*beta) + N); self weight is 1 - N * that.
double loop_limit_ring_weight(int valence);

/// One Loop subdivision step as a sparse linear map.
///
/// Fine vertex ids: [0, V) are the coarse vertices, V + e is the midpoint
/// vertex of coarse edge e. Face f splits into fine faces 4f+k with
/// k = 0,1,2 the corner children (corner k first) and k = 3 the center
/// child (e01, e12, e20).
struct SubdivisionStep {
  SparseRowMat S;      // |V1| x |V0|, row-stochastic, entries >= 0
  TriMesh fine;        // M1 with positions S * V0
  int coarse_vertices = 0;
  int coarse_faces = 0;
};

/// Boundary edges/vertices use the cubic-spline crease rules (1/2 edge mask,
/// 3/4-1/8-1/8 vertex mask). Throws NonManifold on invalid input unless
/// allow_nonmanifold (internal callers only; masks at broken vertices are
/// then unspecified).
SubdivisionStep subdivide_once(const TriMesh& coarse, bool allow_nonmanifold = false);

/// Limit-position stencils for every vertex as a sparse |V| x |V| map.
/// Interior vertices use the valence-dependent ring weight, boundary vertices
/// the cubic curve mask (1/6, 2/3, 1/6).
SparseRowMat limit_stencil_matrix(const TriMesh& mesh);

/// k Loop steps; with to_limit, vertices of the last level are pushed to
/// their limit positions. level in [1, 6]; beyond throws LevelTooLarge.
TriMesh subdivide_to_level(const TriMesh& mesh, int level, bool to_limit = false);

/// Control mesh: fixed connectivity, optimized positions, and the rest pose
/// the ARAP term measures against.
struct ControlMesh {
  TriMesh mesh;
  MatX3 positions;
  MatX3 rest_positions;

  static ControlMesh from_mesh(const TriMesh& m) {
    ControlMesh c;
    c.mesh = m;
    c.positions = to_matrix(m.vertices());
    c.rest_positions = c.positions;
    return c;
  }
  TriMesh current_mesh() const { return mesh.with_positions(positions); }
};

}  // namespace subfit
