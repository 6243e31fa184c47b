#pragma once

#include <optional>
#include <vector>

#include "subfit/geometry.hpp"
#include "subfit/kdtree.hpp"
#include "subfit/pointcloud.hpp"

namespace subfit {

/// Compactly supported IMLS kernel: (1 - r^2/h^2)^4 for r < h, exactly 0
/// beyond; C^2 at r = h.
double imls_kernel(double r, double h);

/// Implicit moving least squares surface over an oriented cloud:
/// f(x) = sum_k n_k . (x - p_k) phi_k(x) / sum_k phi_k(x), neighbors within
/// the support radius h. Positive on the normal side.
class ImlsSurface {
 public:
  ImlsSurface(PointCloud cloud, double h);

  double h() const { return h_; }
  void set_h(double h);
  const PointCloud& cloud() const { return cloud_; }
  const KdTree& index() const { return index_; }

  /// Signed IMLS value, or nullopt when no cloud point lies within h (or the
  /// kernel weights underflow entirely).
  std::optional<double> value(const Vec3& x) const;
  /// Analytic gradient (quotient rule); nullopt as for value().
  std::optional<Vec3> gradient(const Vec3& x) const;
  /// Value and gradient in one neighborhood pass.
  std::optional<std::pair<double, Vec3>> value_and_gradient(const Vec3& x) const;

 private:
  PointCloud cloud_;
  double h_;
  KdTree index_;
};

enum class EmptyPolicy { SkipWithCount, Error };

struct EnergyDiagnostics {
  int skipped = 0;                 // samples with empty neighborhoods
  std::vector<double> f;           // per-sample value (0 where skipped)
  std::vector<char> empty;         // per-sample empty flag
};

/// E_dist = sum over non-empty samples of f(Q_i)^2. Throws AllSamplesEmpty
/// if every sample is skipped, or EmptyNeighborhood under EmptyPolicy::Error
/// on the first empty sample. Per-sample evaluation is parallel; the
/// reduction is ordered pairwise summation for run-to-run determinism.
std::pair<double, EnergyDiagnostics> energy_dist(const ImlsSurface& surface, const MatX3& samples,
                                                 EmptyPolicy policy = EmptyPolicy::SkipWithCount,
                                                 int threads = 1);

/// Per-sample gradients 2 f(Q_i) grad f(Q_i); zero rows for empty samples.
std::pair<MatX3, EnergyDiagnostics> energy_dist_gradient(const ImlsSurface& surface,
                                                         const MatX3& samples,
                                                         EmptyPolicy policy = EmptyPolicy::SkipWithCount,
                                                         int threads = 1);

/// Energy, per-sample gradients, and diagnostics in one pass.
struct EnergyAndGradient {
  double energy = 0;
  MatX3 sample_gradients;
  EnergyDiagnostics diag;
};
EnergyAndGradient energy_dist_with_gradient(const ImlsSurface& surface, const MatX3& samples,
                                            EmptyPolicy policy = EmptyPolicy::SkipWithCount,
                                            int threads = 1);

/// Median nearest-neighbor spacing of the cloud (the floor for the optional
/// support-radius decay schedule).
double median_point_spacing(const PointCloud& cloud);

}  // namespace subfit
