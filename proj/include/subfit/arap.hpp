#pragma once

#include <vector>

#include "subfit/trimesh.hpp"

namespace subfit {

/// Cotangent weights per edge, w = (cot(alpha) + cot(beta))/2 over the one or
/// two angles opposite the edge. Negative weights on obtuse meshes are kept
/// but clamped at -10 * mean|w|; clamp_count reports how many were limited.
/// Throws DegenerateTriangle when a corner angle falls below 1e-6 rad.
std::vector<double> cotangent_weights(const TriMesh& rest, int* clamp_count = nullptr);

/// Rest-pose edges, per-edge weights, and the per-vertex rotations of the
/// as-rigid-as-possible term.
struct ArapState {
  std::vector<std::vector<int>> neighbors;     // one-ring per vertex
  std::vector<std::vector<double>> weights;    // aligned with neighbors
  std::vector<std::vector<Vec3>> rest_edges;   // rest_i - rest_j
  std::vector<Mat3> rotations;                 // orthonormal, det +1
  int clamped_weights = 0;
  int degenerate_rotations = 0;  // rank-deficient covariances resolved by SVD convention

  static ArapState build(const TriMesh& connectivity, const MatX3& rest_positions);
};

/// Best-fit rotation per vertex cell from the SVD of the weighted covariance
/// sum_j w_ij (V_i - V_j)(rest_i - rest_j)^T, with the determinant sign
/// corrected so the result is never a reflection.
void fit_rotations(const MatX3& positions, ArapState* state, int threads = 1);

/// E_reg = sum_i sum_{j in N(i)} w_ij || (V_i - V_j) - R_i (rest_i - rest_j) ||^2.
double energy_reg(const MatX3& positions, const ArapState& state);

/// Gradient of energy_reg with the rotations held fixed:
/// 2 sum_j w_ij (2(V_i - V_j) - (R_i + R_j)(rest_i - rest_j)).
MatX3 energy_reg_gradient(const MatX3& positions, const ArapState& state);

}  // namespace subfit
