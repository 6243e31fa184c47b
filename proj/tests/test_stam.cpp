#include <doctest.h>

#include <random>
#include <set>

#include "subfit/errors.hpp"
#include "subfit/stam.hpp"
#include "support/oracles.hpp"
#include "support/shapes.hpp"

using namespace subfit;

namespace {

Vec3 weighted_point(const TriMesh& m, const Patch& p, const Eigen::VectorXd& w) {
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < w.size(); ++i) out += w(i) * m.vertex(p.control[i]);
  return out;
}

std::pair<double, double> random_param(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double v = uni(rng), w = uni(rng);
  if (v + w > 1) {
    v = 1 - v;
    w = 1 - w;
  }
  return {v, w};
}

}  // namespace

TEST_CASE("icosahedron M1 patch census: 60 irregular with 11 controls, 20 regular") {
  TriMesh fine = subdivide_once(shapes::icosahedron()).fine;
  PatchTable pt = build_patch_table(fine);
  REQUIRE(static_cast<int>(pt.patches.size()) == 80);
  int regular = 0, irregular = 0;
  for (const auto& p : pt.patches) {
    if (p.kind == PatchKind::Regular) {
      ++regular;
      CHECK(p.control.size() == 12);
      CHECK(std::set<int>(p.control.begin(), p.control.end()).size() == 12);
    } else if (p.kind == PatchKind::Irregular) {
      ++irregular;
      CHECK(p.valence == 5);
      CHECK(p.control.size() == 11);  // N + 6
      CHECK(fine.face(p.face)[p.rotation % 3] == p.control[0]);
    }
  }
  CHECK(regular == 20);
  CHECK(irregular == 60);
}

TEST_CASE("all-valence-6 torus M1 is entirely regular") {
  TriMesh fine = subdivide_once(shapes::torus_grid(6, 6)).fine;
  for (const auto& p : build_patch_table(fine).patches) CHECK(p.kind == PatchKind::Regular);
}

TEST_CASE("two extraordinary corners violate the patch condition") {
  // Icosahedron faces have three valence-5 corners; classification must
  // reject them (subdividing once first is the supported path).
  CHECK_THROWS_AS(build_patch_table(shapes::icosahedron()), Error);
  try {
    build_patch_table(shapes::icosahedron());
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::PatchConditionViolated);
  }
}

TEST_CASE("regular patch center: 12 positive weights summing to 1") {
  TriMesh fine = subdivide_once(shapes::torus_grid(6, 6)).fine;
  PatchTable pt = build_patch_table(fine);
  Eigen::VectorXd w = eval_basis(pt.patch(0), 1.0 / 3, 1.0 / 3);
  REQUIRE(w.size() == 12);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 12; ++i) CHECK(w(i) > 0);
}

TEST_CASE("partition of unity at random parameters, regular and irregular") {
  std::mt19937_64 rng(11);
  for (const TriMesh& base : {shapes::random_flip_mesh(1, 18, 5), shapes::bipyramid(8)}) {
    TriMesh fine = subdivide_once(base).fine;
    PatchTable pt = build_patch_table(fine);
    for (int trial = 0; trial < 50; ++trial) {
      int f = std::uniform_int_distribution<int>(0, fine.face_count() - 1)(rng);
      auto [v, w] = random_param(rng);
      const Patch& p = pt.patch(f);
      if (p.kind == PatchKind::Boundary) continue;
      Eigen::VectorXd wt = eval_basis(p, v, w);
      CHECK(std::abs(wt.sum() - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("weights applied to coincident control points reproduce the point") {
  TriMesh fine = subdivide_once(shapes::icosahedron()).fine;
  PatchTable pt = build_patch_table(fine);
  Vec3 p(0.3, -1.0, 2.0);
  MatX3 all_same = MatX3::Zero(fine.vertex_count(), 3);
  all_same.rowwise() = p.transpose();
  TriMesh squashed = fine.with_positions(all_same);
  for (int f : {0, 1, 2, 3}) {
    Eigen::VectorXd w = eval_basis(pt.patch(f), 0.2, 0.5);
    CHECK((weighted_point(squashed, pt.patch(f), w) - p).norm() < 1e-12);
  }
}

TEST_CASE("evaluation against deep recursive subdivision") {
  std::mt19937_64 rng(23);
  for (const TriMesh& base : {shapes::random_flip_mesh(1, 12, 9), shapes::bipyramid(3)}) {
    TriMesh fine = subdivide_once(base).fine;
    PatchTable pt = build_patch_table(fine);
    oracle::Soup soup{fine.vertices(), fine.faces()};
    double diag = fine.bounds().diagonal();
    for (int trial = 0; trial < 20; ++trial) {
      int f = std::uniform_int_distribution<int>(0, fine.face_count() - 1)(rng);
      const Patch& p = pt.patch(f);
      if (p.kind == PatchKind::Boundary) continue;
      auto [v, w] = random_param(rng);
      Eigen::VectorXd wt = eval_basis(p, v, w);
      Vec3 got = weighted_point(fine, p, wt);
      Vec3 cb = Vec3::Zero();
      cb[p.rotation % 3] = 1 - v - w;
      cb[(p.rotation + 1) % 3] = v;
      cb[(p.rotation + 2) % 3] = w;
      Vec3 ref = oracle::limit_point(soup, f, cb, 8);
      CHECK((got - ref).norm() < 1e-4 * diag);
    }
  }
}

TEST_CASE("irregular corner opposite the extraordinary vertex matches the regular embedding") {
  TriMesh fine = subdivide_once(shapes::icosahedron()).fine;
  PatchTable pt = build_patch_table(fine);
  oracle::Soup soup{fine.vertices(), fine.faces()};
  int checked = 0;
  for (int f = 0; f < fine.face_count() && checked < 4; ++f) {
    const Patch& p = pt.patch(f);
    if (p.kind != PatchKind::Irregular) continue;
    // (v,w) = (1,0) is the corner at canonical c1, away from the EV
    Eigen::VectorXd wt = eval_basis(p, 1.0, 0.0);
    Vec3 got = weighted_point(fine, p, wt);
    Vec3 cb = Vec3::Zero();
    cb[(p.rotation + 1) % 3] = 1.0;
    Vec3 ref = oracle::limit_point(soup, f, cb, 10);
    CHECK((got - ref).norm() < 1e-8);
    ++checked;
  }
  CHECK(checked == 4);
}

TEST_CASE("derivative weight vectors sum to zero and match finite differences") {
  std::mt19937_64 rng(31);
  TriMesh fine = subdivide_once(shapes::random_flip_mesh(1, 10, 2)).fine;
  PatchTable pt = build_patch_table(fine);
  const double h = 1e-5;
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 30; ++trial) {
    int f = std::uniform_int_distribution<int>(0, fine.face_count() - 1)(rng);
    const Patch& p = pt.patch(f);
    if (p.kind == PatchKind::Boundary) continue;
    auto [v, w] = random_param(rng);
    // keep the stencil away from the domain edges for the central difference
    v = 0.05 + 0.9 * v * (1 - w);
    w = 0.05 + 0.8 * w * (1 - v);
    if (v + w > 0.98) continue;
    auto [dv, dw] = eval_basis_derivatives(p, v, w);
    CHECK(std::abs(dv.sum()) < 1e-8);
    CHECK(std::abs(dw.sum()) < 1e-8);
    Eigen::VectorXd fd_v = (eval_basis(p, v + h, w) - eval_basis(p, v - h, w)) / (2 * h);
    Eigen::VectorXd fd_w = (eval_basis(p, v, w + h) - eval_basis(p, v, w - h)) / (2 * h);
    double scale_v = std::max(1.0, fd_v.cwiseAbs().maxCoeff());
    double scale_w = std::max(1.0, fd_w.cwiseAbs().maxCoeff());
    CHECK((dv - fd_v).cwiseAbs().maxCoeff() / scale_v < 1e-4);
    CHECK((dw - fd_w).cwiseAbs().maxCoeff() / scale_w < 1e-4);
    ++tested;
  }
  CHECK(tested == 30);
}

TEST_CASE("planar control points give in-plane derivatives") {
  TriMesh fine = subdivide_once(shapes::grid_patch(6)).fine;
  PatchTable pt = build_patch_table(fine);
  int tested = 0;
  for (int f = 0; f < fine.face_count() && tested < 5; ++f) {
    const Patch& p = pt.patch(f);
    if (p.kind == PatchKind::Boundary) continue;
    auto [dv, dw] = eval_basis_derivatives(p, 0.3, 0.25);
    Vec3 tv = weighted_point(fine, p, dv);
    Vec3 tw = weighted_point(fine, p, dw);
    CHECK(std::abs(tv.z()) < 1e-12);  // grid lies in z = 0
    CHECK(std::abs(tw.z()) < 1e-12);
    ++tested;
  }
  CHECK(tested == 5);
}

TEST_CASE("parameters outside the triangle raise DomainError") {
  TriMesh fine = subdivide_once(shapes::torus_grid(6, 6)).fine;
  PatchTable pt = build_patch_table(fine);
  CHECK_THROWS_AS(eval_basis(pt.patch(0), -0.1, 0.2), Error);
  CHECK_THROWS_AS(eval_basis(pt.patch(0), 0.7, 0.7), Error);
  CHECK_THROWS_AS(eval_basis_derivatives(pt.patch(0), 1.2, 0.0), Error);
}

TEST_CASE("Stam path at valence 6 equals the direct box-spline path") {
  TriMesh fine = subdivide_once(shapes::torus_grid(7, 5)).fine;
  PatchTable pt = build_patch_table(fine);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    int f = std::uniform_int_distribution<int>(0, fine.face_count() - 1)(rng);
    const Patch& reg = pt.patch(f);
    REQUIRE(reg.kind == PatchKind::Regular);
    Patch irr;
    irr.kind = PatchKind::Irregular;
    irr.face = f;
    irr.rotation = 0;
    irr.valence = 6;
    irr.control = stam_detail::irregular_support(fine, f, 0);
    auto [v, w] = random_param(rng);
    Vec3 a = weighted_point(fine, reg, eval_basis(reg, v, w));
    Vec3 b = weighted_point(fine, irr, eval_basis(irr, v, w));
    CHECK((a - b).norm() < 1e-10);
  }
}

TEST_CASE("valences outside [3,50] are rejected") {
  CHECK_THROWS_AS(stam_detail::valence_data(51), Error);
  CHECK_THROWS_AS(stam_detail::valence_data(2), Error);
  CHECK_NOTHROW(stam_detail::valence_data(50));
}
