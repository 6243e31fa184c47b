#include "subfit/stam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "subfit/errors.hpp"

namespace subfit {

namespace stam_detail {

namespace {

std::vector<int> rotate_to(const std::vector<int>& ring, int start) {
  auto it = std::find(ring.begin(), ring.end(), start);
  if (it == ring.end())
    throw Error(ErrorClass::NonManifold, "ring rotation target not found");
  std::vector<int> out;
  out.reserve(ring.size());
  out.insert(out.end(), it, ring.end());
  out.insert(out.end(), ring.begin(), it);
  return out;
}

// Two outer ring members of a valence-6 corner, counterclockwise, with the
// ring rotated to start at the given across-vertex.
std::array<int, 2> corner_wings(const TriMesh& m, int corner, int start) {
  auto ring = rotate_to(m.vertex_ring(corner), start);
  if (ring.size() != 6)
    throw Error(ErrorClass::NonManifold, "regular corner without valence 6");
  return {ring[4], ring[5]};
}

int across_or_throw(const TriMesh& m, int f, int a, int b) {
  int v = m.across_vertex(f, a, b);
  if (v < 0) throw Error(ErrorClass::NonManifold, "missing across-vertex in patch support");
  return v;
}

}  // namespace

std::array<int, 12> regular_support(const TriMesh& m, int face) {
  const auto& fc = m.face(face);
  int c0 = fc[0], c1 = fc[1], c2 = fc[2];
  int f1 = across_or_throw(m, face, c1, c2);
  int f2 = across_or_throw(m, face, c2, c0);
  int f3 = across_or_throw(m, face, c0, c1);
  auto w0 = corner_wings(m, c0, f3);
  auto w1 = corner_wings(m, c1, f1);
  auto w2 = corner_wings(m, c2, f2);
  return {c0, c1, c2, f1, f2, f3, w0[0], w0[1], w1[0], w1[1], w2[0], w2[1]};
}

std::vector<int> irregular_support(const TriMesh& m, int face, int rotation) {
  const auto& fc = m.face(face);
  int c0 = fc[rotation % 3], c1 = fc[(rotation + 1) % 3], c2 = fc[(rotation + 2) % 3];
  auto ring0 = rotate_to(m.vertex_ring(c0), c1);
  if (ring0.size() < 3 || ring0[1] != c2)
    throw Error(ErrorClass::NonManifold, "inconsistent ring order at extraordinary vertex");
  int f1 = across_or_throw(m, face, c1, c2);
  auto w1 = corner_wings(m, c1, f1);
  auto w2 = corner_wings(m, c2, ring0[2]);
  std::vector<int> sup;
  sup.reserve(ring0.size() + 6);
  sup.push_back(c0);
  sup.insert(sup.end(), ring0.begin(), ring0.end());
  sup.push_back(f1);
  sup.push_back(w1[0]);
  sup.push_back(w1[1]);
  sup.push_back(w2[0]);
  sup.push_back(w2[1]);
  return sup;
}

TriMesh synthetic_disk(int valence, int rings) {
  const int N = valence;
  auto ring_start = [&](int r) { return 1 + N * (r * (r - 1)) / 2; };
  auto ring_id = [&](int r, int m) {
    int count = N * r;
    return ring_start(r) + ((m % count) + count) % count;
  };
  std::vector<Vec3> pos;
  pos.emplace_back(0, 0, 0);
  for (int r = 1; r <= rings; ++r) {
    for (int s = 0; s < N; ++s) {
      for (int j = 0; j < r; ++j) {
        double ang = 2.0 * M_PI * (s + static_cast<double>(j) / r) / N;
        pos.emplace_back(r * std::cos(ang), r * std::sin(ang), 0.0);
      }
    }
  }
  std::vector<std::array<int, 3>> faces;
  for (int s = 0; s < N; ++s) faces.push_back({0, ring_id(1, s), ring_id(1, s + 1)});
  for (int r = 1; r < rings; ++r) {
    for (int s = 0; s < N; ++s) {
      for (int j = 0; j <= r; ++j) {
        int a0 = ring_id(r, s * r + j);
        int b0 = ring_id(r + 1, s * (r + 1) + j);
        int b1 = ring_id(r + 1, s * (r + 1) + j + 1);
        faces.push_back({a0, b0, b1});
        if (j < r) {
          int a1 = ring_id(r, s * r + j + 1);
          faces.push_back({a0, b1, a1});
        }
      }
    }
  }
  return TriMesh::build(std::move(pos), std::move(faces));
}

// ---- regular quartic box-spline basis ----
//
// Bezier coefficients of the 12 basis functions over the canonical support,
// derived once: the limit position at a dyadic parameter of a regular patch
// is exact after enough subdivision steps plus the limit stencil, and the
// patch restricted to one face is a single quartic. Interpolating at the 15
// lattice points (i/4, j/4) recovers the Bernstein coefficients.

namespace {

struct Quartic15 {
  // multi-indices (a,b,c), a+b+c=4, lexicographic by (a,b)
  std::array<std::array<int, 3>, 15> index;
  Eigen::Matrix<double, 15, 12> coeff;  // Bernstein coefficients per basis
};

double bernstein4(const std::array<int, 3>& q, double u, double v, double w) {
  static const double fact[5] = {1, 1, 2, 6, 24};
  double m = 24.0 / (fact[q[0]] * fact[q[1]] * fact[q[2]]);
  return m * std::pow(u, q[0]) * std::pow(v, q[1]) * std::pow(w, q[2]);
}

// d/dx x^n with 0^-1 treated as 0 (exponent zero has zero derivative).
double pow_deriv(double x, int n) { return n == 0 ? 0.0 : n * std::pow(x, n - 1); }

const Quartic15& regular_basis_data() {
  static const Quartic15 data = [] {
    Quartic15 d;
    int qi = 0;
    for (int a = 4; a >= 0; --a)
      for (int b = 4 - a; b >= 0; --b) d.index[qi++] = {a, b, 4 - a - b};

    TriMesh disk = synthetic_disk(6);
    std::array<int, 12> sup = regular_support(disk, 0);
    SubdivisionStep s1 = subdivide_once(disk);
    SubdivisionStep s2 = subdivide_once(s1.fine);
    SparseRowMat stot = (s2.S * s1.S).pruned();

    // Track the children of face 0 with exact barycentric corner coords.
    struct TF {
      int face;
      std::array<Vec3, 3> b;
    };
    std::vector<TF> cur = {{0, {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}}};
    for (int level = 0; level < 2; ++level) {
      std::vector<TF> next;
      for (const auto& tf : cur) {
        const Vec3 &B0 = tf.b[0], &B1 = tf.b[1], &B2 = tf.b[2];
        Vec3 m01 = 0.5 * (B0 + B1), m12 = 0.5 * (B1 + B2), m20 = 0.5 * (B2 + B0);
        next.push_back({4 * tf.face + 0, {B0, m01, m20}});
        next.push_back({4 * tf.face + 1, {B1, m12, m01}});
        next.push_back({4 * tf.face + 2, {B2, m20, m12}});
        next.push_back({4 * tf.face + 3, {m01, m12, m20}});
      }
      cur = std::move(next);
    }
    const TriMesh& fine = s2.fine;
    std::map<std::pair<int, int>, int> vertex_at;  // (4u, 4v) -> vertex id
    for (const auto& tf : cur) {
      const auto& fc = fine.face(tf.face);
      for (int k = 0; k < 3; ++k) {
        int iu = static_cast<int>(std::lround(4 * tf.b[k].x()));
        int iv = static_cast<int>(std::lround(4 * tf.b[k].y()));
        vertex_at[{iu, iv}] = fc[k];
      }
    }

    std::map<int, int> sup_col;
    for (int i = 0; i < 12; ++i) sup_col[sup[i]] = i;
    SparseRowMat limit = limit_stencil_matrix(fine);
    SparseRowMat lim_tot = (limit * stot).pruned();

    Eigen::Matrix<double, 15, 12> values = Eigen::Matrix<double, 15, 12>::Zero();
    Eigen::Matrix<double, 15, 15> E;
    for (int p = 0; p < 15; ++p) {
      const auto& q = d.index[p];
      auto it = vertex_at.find({q[0], q[1]});
      if (it == vertex_at.end())
        throw Error(ErrorClass::DomainError, "missing lattice vertex in basis bootstrap");
      for (SparseRowMat::InnerIterator c(lim_tot, it->second); c; ++c) {
        auto sc = sup_col.find(static_cast<int>(c.col()));
        if (sc == sup_col.end())
          throw Error(ErrorClass::DomainError, "basis bootstrap support leak");
        values(p, sc->second) = c.value();
      }
      for (int t = 0; t < 15; ++t)
        E(p, t) = bernstein4(d.index[t], q[0] / 4.0, q[1] / 4.0, q[2] / 4.0);
    }
    d.coeff = E.fullPivLu().solve(values);
    if ((E * d.coeff - values).cwiseAbs().maxCoeff() > 1e-10)
      throw Error(ErrorClass::DomainError, "basis bootstrap interpolation failed");
    if ((d.coeff.rowwise().sum() - Eigen::Matrix<double, 15, 1>::Ones()).cwiseAbs().maxCoeff() > 1e-10)
      throw Error(ErrorClass::DomainError, "basis bootstrap lost partition of unity");
    return d;
  }();
  return data;
}

}  // namespace

Eigen::Matrix<double, 12, 1> regular_basis(double v, double w) {
  const Quartic15& d = regular_basis_data();
  double u = 1.0 - v - w;
  Eigen::Matrix<double, 1, 15> bern;
  for (int q = 0; q < 15; ++q) bern(q) = bernstein4(d.index[q], u, v, w);
  return (bern * d.coeff).transpose();
}

Eigen::Matrix<double, 12, 1> regular_basis_dv(double v, double w) {
  const Quartic15& d = regular_basis_data();
  static const double fact[5] = {1, 1, 2, 6, 24};
  double u = 1.0 - v - w;
  Eigen::Matrix<double, 1, 15> bern;
  for (int q = 0; q < 15; ++q) {
    const auto& ix = d.index[q];
    double m = 24.0 / (fact[ix[0]] * fact[ix[1]] * fact[ix[2]]);
    bern(q) = m * (-pow_deriv(u, ix[0]) * std::pow(v, ix[1]) * std::pow(w, ix[2]) +
                   std::pow(u, ix[0]) * pow_deriv(v, ix[1]) * std::pow(w, ix[2]));
  }
  return (bern * d.coeff).transpose();
}

Eigen::Matrix<double, 12, 1> regular_basis_dw(double v, double w) {
  const Quartic15& d = regular_basis_data();
  static const double fact[5] = {1, 1, 2, 6, 24};
  double u = 1.0 - v - w;
  Eigen::Matrix<double, 1, 15> bern;
  for (int q = 0; q < 15; ++q) {
    const auto& ix = d.index[q];
    double m = 24.0 / (fact[ix[0]] * fact[ix[1]] * fact[ix[2]]);
    bern(q) = m * (-pow_deriv(u, ix[0]) * std::pow(v, ix[1]) * std::pow(w, ix[2]) +
                   std::pow(u, ix[0]) * std::pow(v, ix[1]) * pow_deriv(w, ix[2]));
  }
  return (bern * d.coeff).transpose();
}

// ---- per-valence subdivision structure ----

const Eigen::MatrixXd& ValenceData::power(int n) const {
  std::lock_guard<std::mutex> lock(mu_);
  while (static_cast<int>(powers_.size()) <= n) {
    if (powers_.empty())
      powers_.push_back(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    else
      powers_.push_back(powers_.back() * A);
  }
  return powers_[n];
}

const ValenceData& valence_data(int valence) {
  static std::mutex cache_mu;
  static std::map<int, std::unique_ptr<ValenceData>> cache;
  if (valence < 3 || valence > 50)
    throw Error(ErrorClass::InvalidArgument,
                "extraordinary valence " + std::to_string(valence) + " outside supported range [3, 50]");
  std::lock_guard<std::mutex> lock(cache_mu);
  auto it = cache.find(valence);
  if (it != cache.end()) return *it->second;

  auto data = std::make_unique<ValenceData>();
  data->valence = valence;
  const int K = valence + 6;
  const int M = valence + 12;

  TriMesh disk = synthetic_disk(valence);
  std::vector<int> kpar = irregular_support(disk, 0, 0);
  SubdivisionStep step = subdivide_once(disk);
  const TriMesh& fine = step.fine;

  std::map<int, int> col_of;
  for (int j = 0; j < K; ++j) col_of[kpar[j]] = j;

  std::vector<int> mlist = irregular_support(fine, 0, 0);  // child patch at the EV corner
  if (static_cast<int>(mlist.size()) != K)
    throw Error(ErrorClass::DomainError, "child patch support size mismatch");
  std::map<int, int> mpos;
  for (size_t i = 0; i < mlist.size(); ++i) mpos[mlist[i]] = static_cast<int>(i);
  for (int k = 1; k <= 3; ++k) {
    std::array<int, 12> sup = regular_support(fine, k);
    for (int t = 0; t < 12; ++t) {
      if (!mpos.count(sup[t])) {
        mpos[sup[t]] = static_cast<int>(mlist.size());
        mlist.push_back(sup[t]);
      }
      data->pick[k - 1][t] = mpos[sup[t]];
    }
  }
  if (static_cast<int>(mlist.size()) != M)
    throw Error(ErrorClass::DomainError, "extended patch support size mismatch");

  data->Abar = Eigen::MatrixXd::Zero(M, K);
  for (int i = 0; i < M; ++i) {
    for (SparseRowMat::InnerIterator c(step.S, mlist[i]); c; ++c) {
      auto jt = col_of.find(static_cast<int>(c.col()));
      if (jt == col_of.end())
        throw Error(ErrorClass::DomainError, "subdivision stencil escapes the patch support");
      data->Abar(i, jt->second) = c.value();
    }
    double rs = data->Abar.row(i).sum();
    if (std::abs(rs - 1.0) > 1e-12)
      throw Error(ErrorClass::DomainError, "subdivision stencil row sum != 1");
  }
  data->A = data->Abar.topRows(K);
  data->powers_.reserve(34);

  auto& ref = *data;
  cache.emplace(valence, std::move(data));
  return ref;
}

}  // namespace stam_detail

// ---- patch classification ----

Patch classify_face(const TriMesh& mesh, int face) {
  const auto& fc = mesh.face(face);
  Patch p;
  p.face = face;
  for (int k = 0; k < 3; ++k) {
    if (mesh.is_boundary_vertex(fc[k])) {
      p.kind = PatchKind::Boundary;
      return p;
    }
  }
  int ev = -1, n_ev = 0;
  for (int k = 0; k < 3; ++k) {
    if (mesh.valence(fc[k]) != 6) {
      ev = k;
      ++n_ev;
    }
  }
  if (n_ev >= 2)
    throw Error(ErrorClass::PatchConditionViolated,
                "face " + std::to_string(face) + " has " + std::to_string(n_ev) +
                    " extraordinary corners; subdivide once first");
  if (n_ev == 0) {
    p.kind = PatchKind::Regular;
    auto sup = stam_detail::regular_support(mesh, face);
    p.control.assign(sup.begin(), sup.end());
  } else {
    p.kind = PatchKind::Irregular;
    p.rotation = ev;
    p.valence = mesh.valence(fc[ev]);
    stam_detail::valence_data(p.valence);  // validates the supported range, warms the cache
    p.control = stam_detail::irregular_support(mesh, face, ev);
  }
  return p;
}

PatchTable build_patch_table(const TriMesh& mesh) {
  PatchTable pt;
  pt.patches.reserve(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) pt.patches.push_back(classify_face(mesh, f));
  return pt;
}

// ---- evaluation ----

namespace {

void check_domain(double v, double w) {
  const double eps = 1e-12;
  if (v < -eps || w < -eps || v + w > 1.0 + eps)
    throw Error(ErrorClass::DomainError, "parameters outside the triangle domain");
}

// Descends toward the extraordinary corner until the parameters land in a
// regular child sub-patch; returns the child index (1, 2, 3=center), the
// remapped parameters, and the number of descents.
struct Descent {
  int k;
  double v, w;
  int levels;
};

Descent descend(double v, double w) {
  Descent d{0, v, w, 0};
  while (d.v + d.w <= 0.5) {
    if (d.levels >= 32) {  // clamp onto the innermost evaluable ring
      double s = 0.5 / (d.v + d.w);
      d.v *= s;
      d.w *= s;
      break;
    }
    d.v *= 2;
    d.w *= 2;
    ++d.levels;
  }
  double u = 1.0 - d.v - d.w;
  if (d.v >= 0.5) {
    d.k = 1;
    double vc = 2 * d.w, wc = 2 * u;
    d.v = vc;
    d.w = wc;
  } else if (d.w >= 0.5) {
    d.k = 2;
    double vc = 2 * u, wc = 2 * d.v;
    d.v = vc;
    d.w = wc;
  } else {
    d.k = 3;
    double vc = 1 - 2 * u, wc = 1 - 2 * d.v;
    d.v = vc;
    d.w = wc;
  }
  return d;
}

Eigen::VectorXd scatter_through(const stam_detail::ValenceData& vd, int k, int levels,
                                const Eigen::Matrix<double, 12, 1>& b12) {
  Eigen::VectorXd wm = Eigen::VectorXd::Zero(vd.Abar.rows());
  for (int t = 0; t < 12; ++t) wm(vd.pick[k - 1][t]) += b12(t);
  Eigen::VectorXd wk = vd.Abar.transpose() * wm;
  return vd.power(levels).transpose() * wk;
}

}  // namespace

Eigen::VectorXd eval_basis(const Patch& patch, double v, double w) {
  check_domain(v, w);
  if (patch.kind == PatchKind::Regular) return stam_detail::regular_basis(v, w);
  if (patch.kind == PatchKind::Boundary)
    throw Error(ErrorClass::InvalidArgument,
                "boundary patches are evaluated through the sample operator");
  const auto& vd = stam_detail::valence_data(patch.valence);
  const int K = patch.valence + 6;
  if (v + w < 1e-14) {
    // Limit stencil at the extraordinary vertex itself.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(K);
    double lw = loop_limit_ring_weight(patch.valence);
    out(0) = 1.0 - patch.valence * lw;
    for (int i = 1; i <= patch.valence; ++i) out(i) = lw;
    return out;
  }
  Descent d = descend(v, w);
  return scatter_through(vd, d.k, d.levels, stam_detail::regular_basis(d.v, d.w));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> eval_basis_derivatives(const Patch& patch,
                                                                   double v, double w) {
  check_domain(v, w);
  if (patch.kind == PatchKind::Regular)
    return {stam_detail::regular_basis_dv(v, w), stam_detail::regular_basis_dw(v, w)};
  if (patch.kind == PatchKind::Boundary)
    throw Error(ErrorClass::InvalidArgument,
                "boundary patches are evaluated through the sample operator");
  if (v + w < 1e-14)
    throw Error(ErrorClass::DomainError,
                "derivatives are singular at the extraordinary vertex");
  const auto& vd = stam_detail::valence_data(patch.valence);
  Descent d = descend(v, w);
  Eigen::Matrix<double, 12, 1> dv = stam_detail::regular_basis_dv(d.v, d.w);
  Eigen::Matrix<double, 12, 1> dw = stam_detail::regular_basis_dw(d.v, d.w);
  Eigen::Matrix<double, 12, 1> bv, bw;
  switch (d.k) {
    case 1:
      bv = -2 * dw;
      bw = 2 * dv - 2 * dw;
      break;
    case 2:
      bv = -2 * dv + 2 * dw;
      bw = -2 * dv;
      break;
    default:
      bv = 2 * dv - 2 * dw;
      bw = 2 * dv;
      break;
  }
  double scale = std::ldexp(1.0, d.levels);  // 2^levels from the parameter doubling
  return {scale * scatter_through(vd, d.k, d.levels, bv),
          scale * scatter_through(vd, d.k, d.levels, bw)};
}

}  // namespace subfit
