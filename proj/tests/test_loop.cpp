#include <doctest.h>

#include <random>

#include "subfit/errors.hpp"
#include "subfit/loop.hpp"
#include "support/shapes.hpp"

using namespace subfit;

namespace {

double row_sum(const SparseRowMat& m, int row) {
  double s = 0;
  for (SparseRowMat::InnerIterator it(m, row); it; ++it) s += it.value();
  return s;
}

double entry(const SparseRowMat& m, int row, int col) {
  for (SparseRowMat::InnerIterator it(m, row); it; ++it)
    if (it.col() == col) return it.value();
  return 0.0;
}

}  // namespace

TEST_CASE("vertex mask weights for the regular valence") {
  CHECK(loop_beta(6) == doctest::Approx(1.0 / 16).epsilon(1e-15));
  TriMesh torus = shapes::torus_grid(8, 8);
  SubdivisionStep st = subdivide_once(torus);
  for (int v = 0; v < torus.vertex_count(); ++v) {
    CHECK(row_sum(st.S, v) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(entry(st.S, v, v) == doctest::Approx(1.0 - 6.0 * loop_beta(6)).epsilon(1e-13));
  }
}

TEST_CASE("rows are stochastic and non-negative across mixed valences") {
  for (std::uint64_t seed : {1ull, 7ull}) {
    TriMesh m = shapes::random_flip_mesh(1, 15, seed);
    SubdivisionStep st = subdivide_once(m);
    for (int r = 0; r < st.S.rows(); ++r) {
      CHECK(std::abs(row_sum(st.S, r) - 1.0) < 1e-12);
      for (SparseRowMat::InnerIterator it(st.S, r); it; ++it) CHECK(it.value() >= 0.0);
    }
  }
}

TEST_CASE("tetrahedron counts: V+E vertices, 4F faces") {
  SubdivisionStep st = subdivide_once(shapes::tetrahedron());
  CHECK(st.fine.vertex_count() == 10);
  CHECK(st.fine.face_count() == 16);
}

TEST_CASE("translation commutes with the subdivision map") {
  TriMesh ico = shapes::icosahedron();
  SubdivisionStep st = subdivide_once(ico);
  Vec3 t(0.3, -1.2, 0.7);
  MatX3 v0 = to_matrix(ico.vertices());
  MatX3 shifted = v0;
  shifted.rowwise() += t.transpose();
  MatX3 a = st.S * shifted;
  MatX3 b = st.S * v0;
  b.rowwise() += t.transpose();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("M1 has no two adjacent extraordinary vertices and at most one per face") {
  auto extraordinary = [](const TriMesh& m, int v) {
    if (m.vertex_ring(v).empty()) return false;
    return m.is_boundary_vertex(v) ? m.valence(v) != 4 : m.valence(v) != 6;
  };
  for (const TriMesh& base :
       {shapes::random_flip_mesh(1, 20, 3), shapes::bipyramid(9), shapes::grid_patch(5)}) {
    TriMesh fine = subdivide_once(base).fine;
    for (int e = 0; e < fine.edge_count(); ++e) {
      auto [a, b] = fine.edge(e);
      CHECK(!(extraordinary(fine, a) && extraordinary(fine, b)));
    }
    for (int f = 0; f < fine.face_count(); ++f) {
      int n = 0;
      for (int k = 0; k < 3; ++k)
        if (!fine.is_boundary_vertex(fine.face(f)[k]) && fine.valence(fine.face(f)[k]) != 6) ++n;
      CHECK(n <= 1);
    }
  }
}

TEST_CASE("boundary rules: crease masks on an open grid") {
  TriMesh grid = shapes::grid_patch(4);
  SubdivisionStep st = subdivide_once(grid);
  int corner = 0;  // (0,0) corner vertex, boundary
  REQUIRE(grid.is_boundary_vertex(corner));
  CHECK(entry(st.S, corner, corner) == doctest::Approx(0.75));
  const auto& ring = grid.vertex_ring(corner);
  CHECK(entry(st.S, corner, ring.front()) == doctest::Approx(0.125));
  CHECK(entry(st.S, corner, ring.back()) == doctest::Approx(0.125));
  // boundary edge midpoint: average of the endpoints
  for (int e = 0; e < grid.edge_count(); ++e) {
    if (!grid.is_boundary_edge(e)) continue;
    int row = grid.vertex_count() + e;
    CHECK(entry(st.S, row, grid.edge(e)[0]) == doctest::Approx(0.5));
    CHECK(entry(st.S, row, grid.edge(e)[1]) == doctest::Approx(0.5));
  }
}

TEST_CASE("limit stencil of the regular valence is 1/2 + 6 * 1/12") {
  TriMesh torus = shapes::torus_grid(8, 8);
  SparseRowMat lim = limit_stencil_matrix(torus);
  CHECK(entry(lim, 0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  for (int r : torus.vertex_ring(0)) CHECK(entry(lim, 0, r) == doctest::Approx(1.0 / 12).epsilon(1e-14));
}

TEST_CASE("subdivide_to_level counts and guard") {
  TriMesh tet = shapes::tetrahedron();
  CHECK(subdivide_to_level(tet, 1).vertex_count() == 10);
  CHECK(subdivide_to_level(tet, 3).face_count() == 4 * 64);
  CHECK_THROWS_AS(subdivide_to_level(tet, 7), Error);
  try {
    subdivide_to_level(tet, 7);
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::LevelTooLarge);
  }
  CHECK_THROWS_AS(subdivide_to_level(tet, 0), Error);
}

TEST_CASE("vertex trajectories contract across levels 1..8") {
  // Original vertices keep their ids at every level, so the per-level
  // displacement of vertex 0 must shrink geometrically.
  TriMesh cur = shapes::tetrahedron();
  Vec3 prev = cur.vertex(0);
  double prev_step = -1;
  for (int level = 1; level <= 8; ++level) {
    cur = subdivide_once(cur).fine;
    double step = (cur.vertex(0) - prev).norm();
    prev = cur.vertex(0);
    if (prev_step > 0) CHECK(step < prev_step);
    prev_step = step;
  }
  CHECK(prev_step < 1e-4);
}

TEST_CASE("limit flag pushes vertices onto the limit surface") {
  // Limit positions are stationary: subdividing once more and taking the
  // limit again must not move the original vertices.
  TriMesh ico = shapes::icosahedron();
  TriMesh l2 = subdivide_to_level(ico, 2, true);
  TriMesh l3 = subdivide_to_level(ico, 3, true);
  for (int v = 0; v < ico.vertex_count(); ++v)
    CHECK((l2.vertex(v) - l3.vertex(v)).norm() < 1e-12);
}

TEST_CASE("non-manifold input is rejected") {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, -1, 0}};
  std::vector<std::array<int, 3>> f = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
  TriMesh bad = TriMesh::build(v, f, true);
  CHECK_THROWS_AS(subdivide_once(bad), Error);
}
