#include "subfit/loop.hpp"

#include <cmath>

#include "subfit/errors.hpp"

namespace subfit {

double loop_beta(int valence) {
  double c = 3.0 / 8.0 + std::cos(2.0 * M_PI / valence) / 4.0;
  return (5.0 / 8.0 - c * c) / valence;
}

double loop_limit_ring_weight(int valence) {
  return 1.0 / (3.0 / (8.0 * loop_beta(valence)) + valence);
}

SubdivisionStep subdivide_once(const TriMesh& coarse, bool allow_nonmanifold) {
  if (!coarse.report().manifold() && !allow_nonmanifold)
    throw Error(ErrorClass::NonManifold, "subdivision requires a manifold mesh");

  const int nv = coarse.vertex_count();
  const int ne = coarse.edge_count();
  const int nf = coarse.face_count();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(nv) * 7 + static_cast<size_t>(ne) * 4);

  // Updated coarse vertices.
  for (int v = 0; v < nv; ++v) {
    const auto& ring = coarse.vertex_ring(v);
    int n = static_cast<int>(ring.size());
    if (n == 0) {
      trips.emplace_back(v, v, 1.0);
      continue;
    }
    if (coarse.is_boundary_vertex(v)) {
      trips.emplace_back(v, v, 0.75);
      trips.emplace_back(v, ring.front(), 0.125);
      trips.emplace_back(v, ring.back(), 0.125);
    } else {
      double beta = loop_beta(n);
      trips.emplace_back(v, v, 1.0 - n * beta);
      for (int r : ring) trips.emplace_back(v, r, beta);
    }
  }

  // Edge midpoint vertices.
  for (int e = 0; e < ne; ++e) {
    const auto& ev = coarse.edge(e);
    const auto& ef = coarse.edge_faces(e);
    int row = nv + e;
    if (ef[1] < 0) {
      trips.emplace_back(row, ev[0], 0.5);
      trips.emplace_back(row, ev[1], 0.5);
    } else {
      trips.emplace_back(row, ev[0], 0.375);
      trips.emplace_back(row, ev[1], 0.375);
      for (int side = 0; side < 2; ++side) {
        const auto& fc = coarse.face(ef[side]);
        for (int k = 0; k < 3; ++k)
          if (fc[k] != ev[0] && fc[k] != ev[1]) trips.emplace_back(row, fc[k], 0.125);
      }
    }
  }

  SubdivisionStep step;
  step.coarse_vertices = nv;
  step.coarse_faces = nf;
  step.S.resize(nv + ne, nv);
  step.S.setFromTriplets(trips.begin(), trips.end());

  MatX3 coarse_pos = to_matrix(coarse.vertices());
  MatX3 fine_pos = step.S * coarse_pos;

  std::vector<std::array<int, 3>> faces;
  faces.reserve(static_cast<size_t>(nf) * 4);
  for (int f = 0; f < nf; ++f) {
    const auto& fc = coarse.face(f);
    const auto& fe = coarse.face_edges(f);
    int e01 = nv + fe[0], e12 = nv + fe[1], e20 = nv + fe[2];
    faces.push_back({fc[0], e01, e20});
    faces.push_back({fc[1], e12, e01});
    faces.push_back({fc[2], e20, e12});
    faces.push_back({e01, e12, e20});
  }
  step.fine = TriMesh::build(to_points(fine_pos), std::move(faces), allow_nonmanifold);
  return step;
}

SparseRowMat limit_stencil_matrix(const TriMesh& mesh) {
  const int nv = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(nv) * 7);
  for (int v = 0; v < nv; ++v) {
    const auto& ring = mesh.vertex_ring(v);
    int n = static_cast<int>(ring.size());
    if (n == 0) {
      trips.emplace_back(v, v, 1.0);
    } else if (mesh.is_boundary_vertex(v)) {
      trips.emplace_back(v, v, 2.0 / 3.0);
      trips.emplace_back(v, ring.front(), 1.0 / 6.0);
      trips.emplace_back(v, ring.back(), 1.0 / 6.0);
    } else {
      double lw = loop_limit_ring_weight(n);
      trips.emplace_back(v, v, 1.0 - n * lw);
      for (int r : ring) trips.emplace_back(v, r, lw);
    }
  }
  SparseRowMat L(nv, nv);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

TriMesh subdivide_to_level(const TriMesh& mesh, int level, bool to_limit) {
  if (level < 1) throw Error(ErrorClass::InvalidArgument, "subdivision level must be >= 1");
  if (level > 6) throw Error(ErrorClass::LevelTooLarge, "subdivision level capped at 6");
  TriMesh cur = mesh;
  for (int k = 0; k < level; ++k) cur = subdivide_once(cur).fine;
  if (to_limit) {
    SparseRowMat L = limit_stencil_matrix(cur);
    MatX3 pos = L * to_matrix(cur.vertices());
    cur = cur.with_positions(pos);
  }
  return cur;
}

}  // namespace subfit
