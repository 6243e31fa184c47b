#pragma once

#include <Eigen/Dense>
#include <array>
#include <mutex>
#include <vector>

#include "subfit/loop.hpp"
#include "subfit/trimesh.hpp"

namespace subfit {

enum class PatchKind { Regular, Irregular, Boundary };

/// One evaluable patch per mesh face.
///
/// Canonical control ordering, derived from the face corners (c0,c1,c2) in
/// stored order (irregular patches are rotated so the extraordinary vertex
/// is c0):
///   regular (12):  c0 c1 c2 | across(c1,c2) across(c2,c0) across(c0,c1) |
///                  wings(c0) wings(c1) wings(c2)
///   irregular (N+6): c0 | ring(c0) starting at c1 | across(c1,c2)
///                  wings(c1) wings(c2)
/// Boundary patches carry no list; they are evaluated by local refinement.
struct Patch {
  PatchKind kind = PatchKind::Regular;
  int face = -1;
  int rotation = 0;  // canonical c0 = face[rotation]
  int valence = 6;   // EV valence when irregular
  std::vector<int> control;
};

struct PatchTable {
  std::vector<Patch> patches;  // indexed by face
  const Patch& patch(int face) const { return patches[face]; }
};

/// Classifies one face. Throws PatchConditionViolated if two or more corners
/// are interior extraordinary vertices.
Patch classify_face(const TriMesh& mesh, int face);

/// Classifies every face of the mesh (normally M1 from subdivide_once, whose
/// structure guarantees at most one extraordinary corner per face).
PatchTable build_patch_table(const TriMesh& mesh);

/// Basis weights over Patch::control at canonical parameters (v,w),
/// v,w >= 0, v+w <= 1, with the extraordinary vertex (if any) at (0,0).
/// Throws DomainError outside the parameter triangle; Boundary patches are
/// rejected here (see sample_operator.hpp).
Eigen::VectorXd eval_basis(const Patch& patch, double v, double w);

/// d/dv and d/dw of eval_basis; each sums to zero. For irregular patches the
/// parameters must be strictly inside the domain (the derivative is singular
/// at the extraordinary point).
std::pair<Eigen::VectorXd, Eigen::VectorXd> eval_basis_derivatives(const Patch& patch,
                                                                   double v, double w);

namespace stam_detail {

/// The 12 quartic box-spline basis functions of a regular patch in the
/// canonical ordering, plus their (v,w) partials. Bezier coefficients are
/// derived once from exact dyadic subdivision of a regular grid.
Eigen::Matrix<double, 12, 1> regular_basis(double v, double w);
Eigen::Matrix<double, 12, 1> regular_basis_dv(double v, double w);
Eigen::Matrix<double, 12, 1> regular_basis_dw(double v, double w);

/// Cached per-valence subdivision structure around one interior
/// extraordinary vertex: A maps the K=N+6 patch controls to the K controls
/// of the child patch at the EV corner; Abar extends to the M=N+12 points
/// covering the three regular child sub-patches; pick[k] selects each child
/// sub-patch's 12-point support from the M list. Valences up to 50.
struct ValenceData {
  int valence = 0;
  Eigen::MatrixXd A;     // K x K
  Eigen::MatrixXd Abar;  // M x K
  std::array<std::array<int, 12>, 3> pick{};  // children 1, 2, center
  const Eigen::MatrixXd& power(int n) const;  // A^n, memoized
 private:
  mutable std::vector<Eigen::MatrixXd> powers_;
  mutable std::mutex mu_;
  friend const ValenceData& valence_data(int valence);
};

const ValenceData& valence_data(int valence);

/// Triangulated disk around a center vertex of the given valence with three
/// regular rings; face 0 is (0, 1, 2) with the center first.
TriMesh synthetic_disk(int valence, int rings = 3);

/// Canonical support lists (see Patch). Throws NonManifold if a needed
/// neighbor is missing.
std::array<int, 12> regular_support(const TriMesh& mesh, int face);
std::vector<int> irregular_support(const TriMesh& mesh, int face, int rotation);

}  // namespace stam_detail

}  // namespace subfit
