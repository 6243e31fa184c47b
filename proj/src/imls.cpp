#include "subfit/imls.hpp"

#include <algorithm>
#include <cmath>

#include "subfit/errors.hpp"
#include "subfit/parallel.hpp"

namespace subfit {

double imls_kernel(double r, double h) {
  if (r >= h) return 0.0;
  double t = 1.0 - (r * r) / (h * h);
  return t * t * t * t;
}

ImlsSurface::ImlsSurface(PointCloud cloud, double h) : cloud_(std::move(cloud)), h_(h) {
  if (h <= 0) throw Error(ErrorClass::InvalidArgument, "support radius must be positive");
  cloud_.validate();
  if (cloud_.size() == 0) throw Error(ErrorClass::DegenerateInput, "empty point cloud");
  index_ = KdTree(cloud_.points);
}

void ImlsSurface::set_h(double h) {
  if (h <= 0) throw Error(ErrorClass::InvalidArgument, "support radius must be positive");
  h_ = h;
}

std::optional<double> ImlsSurface::value(const Vec3& x) const {
  auto vg = value_and_gradient(x);
  if (!vg) return std::nullopt;
  return vg->first;
}

std::optional<Vec3> ImlsSurface::gradient(const Vec3& x) const {
  auto vg = value_and_gradient(x);
  if (!vg) return std::nullopt;
  return vg->second;
}

std::optional<std::pair<double, Vec3>> ImlsSurface::value_and_gradient(const Vec3& x) const {
  thread_local std::vector<int> nbrs;
  nbrs.clear();
  index_.radius_query(x, h_, &nbrs);
  if (nbrs.empty()) return std::nullopt;

  const double h2 = h_ * h_;
  double num = 0, den = 0;
  Vec3 dnum = Vec3::Zero(), dden = Vec3::Zero();
  for (int k : nbrs) {
    Vec3 d = x - cloud_.points[k];
    double t = 1.0 - d.squaredNorm() / h2;
    double phi = t * t * t * t;
    Vec3 dphi = (-8.0 / h2) * t * t * t * d;
    double a = cloud_.normals[k].dot(d);
    num += a * phi;
    den += phi;
    dnum += phi * cloud_.normals[k] + a * dphi;
    dden += dphi;
  }
  // All neighbors sitting at distance ~h: treat as empty rather than divide
  // by an underflowed weight sum.
  if (den < 1e-12) return std::nullopt;
  double f = num / den;
  Vec3 g = (dnum - f * dden) / den;
  return std::make_pair(f, g);
}

namespace {

EnergyAndGradient evaluate(const ImlsSurface& surface, const MatX3& samples, EmptyPolicy policy,
                           int threads, bool with_gradient) {
  const int n = static_cast<int>(samples.rows());
  EnergyAndGradient out;
  out.diag.f.assign(n, 0.0);
  out.diag.empty.assign(n, 0);
  if (with_gradient) out.sample_gradients = MatX3::Zero(n, 3);
  std::vector<double> sq(n, 0.0);

  parallel_for(n, threads, [&](int i) {
    auto vg = surface.value_and_gradient(samples.row(i));
    if (!vg) {
      out.diag.empty[i] = 1;
      return;
    }
    out.diag.f[i] = vg->first;
    sq[i] = vg->first * vg->first;
    if (with_gradient) out.sample_gradients.row(i) = 2.0 * vg->first * vg->second;
  });

  for (int i = 0; i < n; ++i)
    if (out.diag.empty[i]) ++out.diag.skipped;
  if (policy == EmptyPolicy::Error && out.diag.skipped > 0)
    throw Error(ErrorClass::EmptyNeighborhood,
                std::to_string(out.diag.skipped) + " samples have no cloud point within h");
  if (n > 0 && out.diag.skipped == n)
    throw Error(ErrorClass::AllSamplesEmpty, "every sample is farther than h from the cloud");
  out.energy = pairwise_sum(sq);
  return out;
}

}  // namespace

std::pair<double, EnergyDiagnostics> energy_dist(const ImlsSurface& surface, const MatX3& samples,
                                                 EmptyPolicy policy, int threads) {
  EnergyAndGradient r = evaluate(surface, samples, policy, threads, false);
  return {r.energy, std::move(r.diag)};
}

std::pair<MatX3, EnergyDiagnostics> energy_dist_gradient(const ImlsSurface& surface,
                                                         const MatX3& samples, EmptyPolicy policy,
                                                         int threads) {
  EnergyAndGradient r = evaluate(surface, samples, policy, threads, true);
  return {std::move(r.sample_gradients), std::move(r.diag)};
}

EnergyAndGradient energy_dist_with_gradient(const ImlsSurface& surface, const MatX3& samples,
                                            EmptyPolicy policy, int threads) {
  return evaluate(surface, samples, policy, threads, true);
}

double median_point_spacing(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  KdTree tree(cloud.points);
  std::vector<double> d(cloud.size());
  const double cap = cloud.bounds().diagonal();
  for (int i = 0; i < cloud.size(); ++i) {
    // nearest() would return the point itself; search a growing radius.
    double best = cap;
    for (double radius = cap * 1e-3; radius <= 2 * cap; radius *= 4) {
      auto nbrs = tree.radius_query(cloud.points[i], radius);
      for (int k : nbrs) {
        if (k == i) continue;
        best = std::min(best, (cloud.points[k] - cloud.points[i]).norm());
      }
      if (best < radius) break;
    }
    d[i] = best;
  }
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

}  // namespace subfit
