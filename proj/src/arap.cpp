#include "subfit/arap.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "subfit/errors.hpp"
#include "subfit/parallel.hpp"

namespace subfit {

std::vector<double> cotangent_weights(const TriMesh& rest, int* clamp_count) {
  std::vector<double> w(rest.edge_count(), 0.0);
  for (int f = 0; f < rest.face_count(); ++f) {
    const auto& fc = rest.face(f);
    for (int k = 0; k < 3; ++k) {
      // Angle at corner k is opposite the edge between corners k+1 and k+2.
      const Vec3& p = rest.vertex(fc[k]);
      Vec3 u = rest.vertex(fc[(k + 1) % 3]) - p;
      Vec3 v = rest.vertex(fc[(k + 2) % 3]) - p;
      double cross = u.cross(v).norm();
      double dot = u.dot(v);
      double angle = std::atan2(cross, dot);
      if (angle < 1e-6)
        throw Error(ErrorClass::DegenerateTriangle,
                    "face " + std::to_string(f) + " has a corner angle below 1e-6 rad");
      w[rest.face_edges(f)[(k + 1) % 3]] += 0.5 * dot / cross;
    }
  }
  double mean_abs = 0;
  for (double x : w) mean_abs += std::abs(x);
  mean_abs /= std::max<size_t>(1, w.size());
  double floor = -10.0 * mean_abs;
  int clamped = 0;
  for (double& x : w) {
    if (x < floor) {
      x = floor;
      ++clamped;
    }
  }
  if (clamp_count) *clamp_count = clamped;
  return w;
}

ArapState ArapState::build(const TriMesh& connectivity, const MatX3& rest_positions) {
  if (rest_positions.rows() != connectivity.vertex_count())
    throw Error(ErrorClass::DimensionMismatch, "rest position count mismatch");
  TriMesh rest = connectivity.with_positions(rest_positions);
  ArapState st;
  std::vector<double> w = cotangent_weights(rest, &st.clamped_weights);
  const int nv = rest.vertex_count();
  st.neighbors.resize(nv);
  st.weights.resize(nv);
  st.rest_edges.resize(nv);
  st.rotations.assign(nv, Mat3::Identity());
  for (int v = 0; v < nv; ++v) {
    const auto& ring = rest.vertex_ring(v);
    st.neighbors[v].assign(ring.begin(), ring.end());
    st.weights[v].reserve(ring.size());
    st.rest_edges[v].reserve(ring.size());
    for (int j : ring) {
      int e = rest.find_edge(v, j);
      st.weights[v].push_back(e >= 0 ? w[e] : 0.0);
      st.rest_edges[v].push_back(Vec3(rest_positions.row(v) - rest_positions.row(j)));
    }
  }
  return st;
}

void fit_rotations(const MatX3& positions, ArapState* state, int threads) {
  const int nv = static_cast<int>(state->neighbors.size());
  if (positions.rows() != nv)
    throw Error(ErrorClass::DimensionMismatch, "position count mismatch");
  std::vector<int> degenerate(nv, 0);
  parallel_for(nv, threads, [&](int i) {
    Mat3 cov = Mat3::Zero();
    const auto& nbr = state->neighbors[i];
    for (size_t t = 0; t < nbr.size(); ++t) {
      Vec3 e = positions.row(i) - positions.row(nbr[t]);
      cov += state->weights[i][t] * e * state->rest_edges[i][t].transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU(), v = svd.matrixV();
    Mat3 r = u * v.transpose();
    if (r.determinant() < 0) {
      u.col(2) = -u.col(2);
      r = u * v.transpose();
    }
    if (svd.singularValues()(1) < 1e-14 * std::max(1.0, svd.singularValues()(0)))
      degenerate[i] = 1;  // rank <= 1 cell; SVD convention decides the rotation
    state->rotations[i] = r;
  });
  int count = 0;
  for (int d : degenerate) count += d;
  state->degenerate_rotations = count;
}

double energy_reg(const MatX3& positions, const ArapState& state) {
  const int nv = static_cast<int>(state.neighbors.size());
  if (positions.rows() != nv)
    throw Error(ErrorClass::DimensionMismatch, "position count mismatch");
  double energy = 0;
  for (int i = 0; i < nv; ++i) {
    const auto& nbr = state.neighbors[i];
    for (size_t t = 0; t < nbr.size(); ++t) {
      Vec3 e = positions.row(i) - positions.row(nbr[t]);
      Vec3 resid = e - state.rotations[i] * state.rest_edges[i][t];
      energy += state.weights[i][t] * resid.squaredNorm();
    }
  }
  return energy;
}

MatX3 energy_reg_gradient(const MatX3& positions, const ArapState& state) {
  const int nv = static_cast<int>(state.neighbors.size());
  if (positions.rows() != nv)
    throw Error(ErrorClass::DimensionMismatch, "position count mismatch");
  MatX3 grad = MatX3::Zero(nv, 3);
  for (int i = 0; i < nv; ++i) {
    const auto& nbr = state.neighbors[i];
    Vec3 g = Vec3::Zero();
    for (size_t t = 0; t < nbr.size(); ++t) {
      int j = nbr[t];
      Vec3 e = positions.row(i) - positions.row(j);
      g += state.weights[i][t] *
           (4.0 * e - 2.0 * (state.rotations[i] + state.rotations[j]) * state.rest_edges[i][t]);
    }
    grad.row(i) = g;
  }
  return grad;
}

}  // namespace subfit
