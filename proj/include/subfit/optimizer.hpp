#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subfit/arap.hpp"
#include "subfit/hausdorff.hpp"
#include "subfit/imls.hpp"
#include "subfit/loop.hpp"
#include "subfit/sample_operator.hpp"

namespace subfit {

enum class OptimizerKind { GradientDescent, AdaptiveMoment };
enum class HSchedule { Off, GeometricDecay };

struct FitConfig {
  double h0 = 0.0005;        // support radius in unit-box units
  double alpha = 0.01;       // ARAP weight
  double learning_rate = 1e-3;
  int max_iters = 2000;
  double convergence_tol = 1e-6;  // relative decrease over a 10-iteration window
  int samples_level = 0;          // 0: control vertices, 1: M1 vertices
  OptimizerKind optimizer = OptimizerKind::AdaptiveMoment;
  bool line_search = false;  // implies plain gradient descent
  std::uint64_t seed = 0;
  HSchedule h_schedule = HSchedule::Off;
  int arap_refit_every = 1;
  int threads = 1;
  // Doubles the support radius at initialization until at most 10% of the
  // samples have empty neighborhoods (capped at the cloud bbox diagonal).
  // The paper's h0 presumes far denser scans than the desk-scale inputs the
  // acceptance experiments use.
  bool h_adapt = true;
  int sequence_iters = 0;          // per warm-started frame; 0 = max_iters/4
  int mesh_sample_count = 100000;  // cloud size when a frame target is a mesh
  bool auto_normalize = true;
  std::string cache_dir;  // sample-operator cache directory ("" disables)

  void validate() const;
  std::string serialize() const;
  static FitConfig parse(const std::string& text);
};

struct IterationRecord {
  int iter = 0;
  double e_dist = 0, e_reg = 0, total = 0;
  int skipped = 0;
  double elapsed_ms = 0;
};

struct FitReport {
  std::vector<IterationRecord> history;
  double final_energy = 0;
  double h_used = 0;
  int h_expansions = 0;
  bool auto_normalized = false;
  double wall_time_ms = 0;
  double hausdorff_vs_target = -1;  // filled by the CLI when a target mesh is given
  std::vector<std::string> warnings;

  std::string to_text() const;
};

struct TotalEnergy {
  double total = 0, e_dist = 0, e_reg = 0;
  MatX3 gradient;  // over control vertex positions
  int skipped = 0;
};

/// Eq-style assembly: E = E_dist(W V0) + alpha E_reg(V0); the gradient
/// composes the per-sample IMLS gradients through W^T and adds the frozen-
/// rotation ARAP gradient. Rotations in `arap` are used as-is.
TotalEnergy total_energy_and_gradient(const ControlMesh& control, const SampleOperator& op,
                                      const ImlsSurface& surface, const ArapState& arap,
                                      const FitConfig& config);

/// Minimizes the total energy over the control vertex positions. Returns the
/// best-energy positions encountered. Deterministic for fixed config+inputs.
std::pair<ControlMesh, FitReport> fit_static(const PointCloud& cloud, const ControlMesh& initial,
                                             const FitConfig& config);

/// One frame of a temporal sequence: an oriented cloud, or a mesh converted
/// by area-weighted sampling.
struct FrameTarget {
  std::optional<PointCloud> cloud;
  std::optional<TriMesh> mesh;
};

struct SequenceResult {
  std::vector<MatX3> positions;  // per frame
  std::vector<FitReport> reports;
};

/// Sequential warm-started fitting: frame 0 starts from the template with
/// the full iteration budget; frame i+1 starts from frame i's solution with
/// the (smaller) per-frame budget. The ARAP rest pose stays the template's
/// throughout. A failing frame aborts with its index in the message.
SequenceResult fit_sequence(const std::vector<FrameTarget>& frames, const ControlMesh& tmpl,
                            const FitConfig& config);

}  // namespace subfit
