#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "subfit/mesh_io.hpp"
#include "subfit/normalize.hpp"
#include "support/shapes.hpp"

using namespace subfit;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  fs::path p = fs::temp_directory_path() / "subfit_mesh_core_tests";
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("single triangle OBJ has three boundary edges") {
  auto p = tmp_dir() / "tri.obj";
  write_text(p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  TriMesh m = load_mesh(p.string());
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
  CHECK(m.edge_count() == 3);
  CHECK(m.report().boundary_edges == 3);
  CHECK(m.report().manifold());
}

TEST_CASE("tetrahedron round trip: valences, edges, Euler formula") {
  TriMesh tet = shapes::tetrahedron();
  auto p = tmp_dir() / "tet.obj";
  write_mesh(tet, p.string());
  TriMesh m = load_mesh(p.string());
  CHECK(m.vertex_count() == 4);
  CHECK(m.edge_count() == 6);
  CHECK(m.face_count() == 4);
  for (int v = 0; v < 4; ++v) CHECK(m.valence(v) == 3);
  for (int e = 0; e < m.edge_count(); ++e) CHECK(!m.is_boundary_edge(e));
  CHECK(m.euler_characteristic() == 2);
  CHECK(m.is_closed());
  CHECK(m.genus() == 0);
  CHECK(m.faces() == tet.faces());
  for (int v = 0; v < 4; ++v) CHECK((m.vertex(v) - tet.vertex(v)).norm() < 1e-6);
}

TEST_CASE("OBJ with face index 0 is a ParseError") {
  auto p = tmp_dir() / "zero.obj";
  write_text(p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
  CHECK_THROWS_WITH_AS(load_mesh(p.string()), doctest::Contains("1-based"), Error);
}

TEST_CASE("OBJ quads are fan-triangulated with a warning") {
  auto p = tmp_dir() / "quad.obj";
  write_text(p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  std::vector<std::string> warnings;
  TriMesh m = load_mesh(p.string(), false, &warnings);
  CHECK(m.face_count() == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("fan-triangulated") != std::string::npos);
}

TEST_CASE("PLY point cloud loading") {
  SUBCASE("plane with +z normals") {
    auto p = tmp_dir() / "plane.ply";
    write_text(p,
               "ply\nformat ascii 1.0\nelement vertex 4\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float nx\nproperty float ny\nproperty float nz\nend_header\n"
               "0 0 0 0 0 1\n1 0 0 0 0 1\n0 1 0 0 0 1\n1 1 0 0 0 1\n");
    PointCloud c = load_point_cloud(p.string());
    CHECK(c.size() == 4);
    CHECK((c.normals[0] - Vec3(0, 0, 1)).norm() < 1e-12);
  }
  SUBCASE("positions only -> MissingNormals") {
    auto p = tmp_dir() / "nonormals.ply";
    write_text(p,
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n");
    CHECK_THROWS_AS(load_point_cloud(p.string()), Error);
    try {
      load_point_cloud(p.string());
    } catch (const Error& e) {
      CHECK(e.error_class() == ErrorClass::MissingNormals);
    }
  }
  SUBCASE("normal (0,0,2) is stored unit length") {
    auto p = tmp_dir() / "longnormal.ply";
    write_text(p,
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float nx\nproperty float ny\nproperty float nz\nend_header\n"
               "0 0 0 0 0 2\n");
    PointCloud c = load_point_cloud(p.string());
    CHECK((c.normals[0] - Vec3(0, 0, 1)).norm() < 1e-12);
  }
}

TEST_CASE("binary little-endian PLY cloud loads") {
  auto p = tmp_dir() / "bin.ply";
  {
    std::ofstream out(p, std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
           "property float x\nproperty float y\nproperty float z\n"
           "property double nx\nproperty double ny\nproperty double nz\nend_header\n";
    auto put_f = [&](float v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_d = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_f(0.5f); put_f(0.25f); put_f(-1.0f); put_d(0); put_d(0); put_d(1);
    put_f(1.5f); put_f(2.25f); put_f(3.0f); put_d(1); put_d(0); put_d(0);
  }
  PointCloud c = load_point_cloud(p.string());
  REQUIRE(c.size() == 2);
  CHECK((c.points[0] - Vec3(0.5, 0.25, -1)).norm() < 1e-7);
  CHECK((c.points[1] - Vec3(1.5, 2.25, 3)).norm() < 1e-7);
  CHECK((c.normals[1] - Vec3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("PLY mesh write/load identity on connectivity") {
  TriMesh ico = shapes::icosahedron();
  auto p = tmp_dir() / "ico.ply";
  write_mesh(ico, p.string());
  TriMesh back = load_mesh(p.string());
  CHECK(back.faces() == ico.faces());
  CHECK(back.connectivity_hash() == ico.connectivity_hash());
  for (int v = 0; v < ico.vertex_count(); ++v)
    CHECK((back.vertex(v) - ico.vertex(v)).norm() < 1e-6);
}

TEST_CASE("normalize_to_unit_box") {
  SUBCASE("two points on the x axis") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(2, 0, 0)};
    c.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
    auto [out, t] = normalize_to_unit_box(c);
    CHECK(t.scale == doctest::Approx(0.5).epsilon(1e-15));
    CHECK((out.points[0] - Vec3(0, 0, 0)).norm() < 1e-15);
    CHECK((out.points[1] - Vec3(1, 0, 0)).norm() < 1e-15);
  }
  SUBCASE("already spanning the unit box -> identity scale") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(1, 0.5, 0.5)};
    c.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
    auto [out, t] = normalize_to_unit_box(c);
    CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("coincident points -> DegenerateInput") {
    PointCloud c;
    c.points = {Vec3(1, 1, 1), Vec3(1, 1, 1)};
    c.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
    CHECK_THROWS_AS(normalize_to_unit_box(c), Error);
  }
  SUBCASE("idempotent up to floating error") {
    TriMesh ico = shapes::icosahedron();
    auto [once, t1] = normalize_to_unit_box(ico);
    auto [twice, t2] = normalize_to_unit_box(once);
    CHECK(std::abs(t2.scale - 1.0) < 1e-12);
  }
  SUBCASE("forward then inverse reproduces input within 1e-12") {
    NormalizeTransform t;
    t.scale = 0.37;
    t.translation = Vec3(1.5, -2.25, 0.125);
    Vec3 x(0.3, 12.0, -4.5);
    CHECK((t.invert(t.apply(x)) - x).norm() < 1e-12 * x.norm());
  }
}

TEST_CASE("write with inverse transform doubles coordinates") {
  TriMesh tet = shapes::tetrahedron();
  NormalizeTransform t;
  t.scale = 0.5;  // inverse multiplies by 2
  auto p = tmp_dir() / "undone.obj";
  write_mesh(tet, p.string(), MeshFormat::Obj, t);
  TriMesh back = load_mesh(p.string());
  for (int v = 0; v < 4; ++v) CHECK((back.vertex(v) - 2.0 * tet.vertex(v)).norm() < 1e-6);
}

TEST_CASE("write into a missing directory is an IoError") {
  TriMesh tet = shapes::tetrahedron();
  CHECK_THROWS_AS(write_mesh(tet, "/nonexistent-dir-subfit/x.obj"), Error);
  try {
    write_mesh(tet, "/nonexistent-dir-subfit/x.obj");
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::IoError);
  }
}

TEST_CASE("non-manifold inputs are rejected unless allowed") {
  SUBCASE("three faces on one edge") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, -1, 0}};
    std::vector<std::array<int, 3>> f = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
    CHECK_THROWS_AS(TriMesh::build(v, f), Error);
    TriMesh m = TriMesh::build(v, f, true);
    CHECK(!m.report().edge_manifold);
  }
  SUBCASE("bowtie vertex") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {-1, 0, 0}, {-1, -1, 0}};
    std::vector<std::array<int, 3>> f = {{0, 1, 2}, {0, 3, 4}};
    CHECK_THROWS_AS(TriMesh::build(v, f), Error);
  }
  SUBCASE("inconsistent orientation") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    std::vector<std::array<int, 3>> f = {{0, 1, 2}, {1, 3, 2}};
    CHECK(TriMesh::build(v, f).report().orientation_consistent);
    std::vector<std::array<int, 3>> bad = {{0, 1, 2}, {1, 2, 3}};  // edge (1,2) repeated
    CHECK_THROWS_AS(TriMesh::build(v, bad), Error);
  }
  SUBCASE("degenerate face") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    std::vector<std::array<int, 3>> f = {{0, 1, 1}};
    CHECK_THROWS_AS(TriMesh::build(v, f), Error);
  }
}

TEST_CASE("Euler characteristic and genus") {
  CHECK(shapes::icosphere(2).genus() == 0);
  CHECK(shapes::icosphere(2).euler_characteristic() == 2);
  TriMesh torus = shapes::torus_grid(12, 8);
  CHECK(torus.is_closed());
  CHECK(torus.euler_characteristic() == 0);
  CHECK(torus.genus() == 1);
}

TEST_CASE("ordered one-ring is counterclockwise and fan-aligned") {
  TriMesh ico = shapes::icosahedron();
  for (int v = 0; v < ico.vertex_count(); ++v) {
    const auto& ring = ico.vertex_ring(v);
    const auto& fan = ico.vertex_fan(v);
    REQUIRE(ring.size() == fan.size());
    for (size_t i = 0; i < ring.size(); ++i) {
      int a = ring[i], b = ring[(i + 1) % ring.size()];
      const auto& fc = ico.face(fan[i]);
      // fan[i] contains (v, a, b) in counterclockwise order
      bool found = false;
      for (int k = 0; k < 3; ++k)
        if (fc[k] == v && fc[(k + 1) % 3] == a && fc[(k + 2) % 3] == b) found = true;
      CHECK(found);
    }
  }
}
