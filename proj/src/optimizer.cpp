#include "subfit/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "subfit/errors.hpp"
#include "subfit/normalize.hpp"

namespace subfit {

void FitConfig::validate() const {
  if (h0 <= 0) throw Error(ErrorClass::InvalidArgument, "h0 must be positive");
  if (alpha < 0) throw Error(ErrorClass::InvalidArgument, "alpha must be non-negative");
  if (learning_rate <= 0) throw Error(ErrorClass::InvalidArgument, "learning rate must be positive");
  if (max_iters < 1) throw Error(ErrorClass::InvalidArgument, "max_iters must be at least 1");
  if (samples_level != 0 && samples_level != 1)
    throw Error(ErrorClass::InvalidArgument, "samples_level must be 0 or 1");
  if (arap_refit_every < 1) throw Error(ErrorClass::InvalidArgument, "arap_refit_every must be >= 1");
  if (threads < 1) throw Error(ErrorClass::InvalidArgument, "threads must be >= 1");
  if (mesh_sample_count < 1) throw Error(ErrorClass::InvalidArgument, "mesh_sample_count must be >= 1");
  if (line_search && optimizer == OptimizerKind::AdaptiveMoment)
    throw Error(ErrorClass::InvalidArgument, "line search applies to plain gradient descent");
}

std::string FitConfig::serialize() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "h0 = " << num(h0) << "\n";
  out << "alpha = " << num(alpha) << "\n";
  out << "learning_rate = " << num(learning_rate) << "\n";
  out << "max_iters = " << max_iters << "\n";
  out << "convergence_tol = " << num(convergence_tol) << "\n";
  out << "samples_level = " << samples_level << "\n";
  out << "optimizer = " << (optimizer == OptimizerKind::AdaptiveMoment ? "adam" : "gd") << "\n";
  out << "line_search = " << (line_search ? 1 : 0) << "\n";
  out << "seed = " << seed << "\n";
  out << "h_schedule = " << (h_schedule == HSchedule::GeometricDecay ? "decay" : "off") << "\n";
  out << "arap_refit_every = " << arap_refit_every << "\n";
  out << "threads = " << threads << "\n";
  out << "h_adapt = " << (h_adapt ? 1 : 0) << "\n";
  out << "sequence_iters = " << sequence_iters << "\n";
  out << "mesh_sample_count = " << mesh_sample_count << "\n";
  out << "auto_normalize = " << (auto_normalize ? 1 : 0) << "\n";
  return out.str();
}

FitConfig FitConfig::parse(const std::string& text) {
  FitConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r\n") != std::string::npos)
        throw Error(ErrorClass::ParseError, "config line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r\n");
      auto e = s.find_last_not_of(" \t\r\n");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "h0") c.h0 = std::stod(val);
      else if (key == "alpha") c.alpha = std::stod(val);
      else if (key == "learning_rate") c.learning_rate = std::stod(val);
      else if (key == "max_iters") c.max_iters = std::stoi(val);
      else if (key == "convergence_tol") c.convergence_tol = std::stod(val);
      else if (key == "samples_level") c.samples_level = std::stoi(val);
      else if (key == "optimizer") {
        if (val == "adam") c.optimizer = OptimizerKind::AdaptiveMoment;
        else if (val == "gd") c.optimizer = OptimizerKind::GradientDescent;
        else throw Error(ErrorClass::ParseError, "unknown optimizer '" + val + "'");
      } else if (key == "line_search") c.line_search = std::stoi(val) != 0;
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "h_schedule") {
        if (val == "decay") c.h_schedule = HSchedule::GeometricDecay;
        else if (val == "off") c.h_schedule = HSchedule::Off;
        else throw Error(ErrorClass::ParseError, "unknown h_schedule '" + val + "'");
      } else if (key == "arap_refit_every") c.arap_refit_every = std::stoi(val);
      else if (key == "threads") c.threads = std::stoi(val);
      else if (key == "h_adapt") c.h_adapt = std::stoi(val) != 0;
      else if (key == "sequence_iters") c.sequence_iters = std::stoi(val);
      else if (key == "mesh_sample_count") c.mesh_sample_count = std::stoi(val);
      else if (key == "auto_normalize") c.auto_normalize = std::stoi(val) != 0;
      else throw Error(ErrorClass::ParseError, "unknown config key '" + key + "'");
    } catch (const Error&) {
      throw;
    } catch (...) {
      throw Error(ErrorClass::ParseError, "config line " + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  return c;
}

std::string FitReport::to_text() const {
  std::ostringstream out;
  out << "# subfit fit report\n";
  out << "h_used = " << h_used << "\n";
  out << "h_expansions = " << h_expansions << "\n";
  out << "auto_normalized = " << (auto_normalized ? 1 : 0) << "\n";
  out << "final_energy = " << final_energy << "\n";
  out << "iterations = " << history.size() << "\n";
  out << "wall_time_ms = " << wall_time_ms << "\n";
  if (hausdorff_vs_target >= 0) out << "hausdorff_vs_target = " << hausdorff_vs_target << "\n";
  for (const auto& w : warnings) out << "# warning: " << w << "\n";
  out << "iter\te_dist\te_reg\ttotal\tskipped\telapsed_ms\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\t%d\t%.3f\n", r.iter, r.e_dist, r.e_reg,
                  r.total, r.skipped, r.elapsed_ms);
    out << buf;
  }
  return out.str();
}

TotalEnergy total_energy_and_gradient(const ControlMesh& control, const SampleOperator& op,
                                      const ImlsSurface& surface, const ArapState& arap,
                                      const FitConfig& config) {
  MatX3 q = eval_points(op, control.positions);
  EnergyAndGradient dist =
      energy_dist_with_gradient(surface, q, EmptyPolicy::SkipWithCount, config.threads);
  TotalEnergy out;
  out.e_dist = dist.energy;
  out.skipped = dist.diag.skipped;
  out.gradient = op.W.transpose() * dist.sample_gradients;
  if (config.alpha > 0) {
    out.e_reg = energy_reg(control.positions, arap);
    out.gradient += config.alpha * energy_reg_gradient(control.positions, arap);
  }
  out.total = out.e_dist + config.alpha * out.e_reg;
  return out;
}

namespace {

struct Clock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
};

int count_empty(const ImlsSurface& surface, const MatX3& q) {
  int empty = 0;
  for (int i = 0; i < q.rows(); ++i)
    if (!surface.value(q.row(i))) ++empty;
  return empty;
}

double max_nearest_distance(const ImlsSurface& surface, const MatX3& q) {
  double worst = 0;
  for (int i = 0; i < q.rows(); ++i)
    worst = std::max(worst, surface.index().nearest(q.row(i)).second);
  return worst;
}

}  // namespace

std::pair<ControlMesh, FitReport> fit_static(const PointCloud& cloud, const ControlMesh& initial,
                                             const FitConfig& config) {
  config.validate();
  if (!initial.mesh.report().manifold())
    throw Error(ErrorClass::NonManifold, "initial control mesh must be manifold");
  Clock wall;
  FitReport report;

  // Normalized inputs are a precondition; far-out clouds are pulled into the
  // unit box (and the result mapped back) with a warning.
  PointCloud fit_cloud = cloud;
  ControlMesh work = initial;
  std::optional<NormalizeTransform> undo;
  {
    Bbox b = cloud.bounds();
    bool inside = b.min.minCoeff() > -0.05 && b.max.maxCoeff() < 1.05;
    if (!inside && config.auto_normalize) {
      NormalizeTransform t = unit_box_transform(b);
      fit_cloud = apply_transform(cloud, t);
      for (int i = 0; i < work.positions.rows(); ++i) {
        work.positions.row(i) = t.apply(Vec3(work.positions.row(i)));
        work.rest_positions.row(i) = t.apply(Vec3(work.rest_positions.row(i)));
      }
      undo = t;
      report.auto_normalized = true;
      report.warnings.push_back("inputs scaled to the unit box for fitting");
    }
  }

  std::vector<SampleSpec> samples = config.samples_level == 1
                                        ? level_one_vertex_samples(work.mesh)
                                        : control_vertex_samples(work.mesh);
  SampleOperator op = build_sample_operator_cached(work.mesh, samples, config.cache_dir);
  ImlsSurface surface(fit_cloud, config.h0);
  ArapState arap = ArapState::build(work.mesh, work.rest_positions);
  if (arap.clamped_weights > 0)
    report.warnings.push_back(std::to_string(arap.clamped_weights) + " cotangent weights clamped");

  const double cloud_diag = fit_cloud.bounds().diagonal();
  const int n_samples = op.sample_count();

  // Initial support radius: grow until at most 10% of samples are starved.
  {
    MatX3 q0 = eval_points(op, work.positions);
    int empty = count_empty(surface, q0);
    if (config.h_adapt) {
      while (empty > n_samples / 10 && surface.h() < cloud_diag) {
        surface.set_h(std::min(2.0 * surface.h(), cloud_diag));
        ++report.h_expansions;
        empty = count_empty(surface, q0);
      }
      if (report.h_expansions > 0)
        report.warnings.push_back("support radius expanded to " + std::to_string(surface.h()));
    }
    if (empty == n_samples) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "no sample sees any cloud point (max nearest-point distance %.6g, h %.6g)",
                    max_nearest_distance(surface, q0), surface.h());
      throw Error(ErrorClass::AllSamplesEmpty, buf);
    }
  }
  const double h_floor = config.h_schedule == HSchedule::GeometricDecay
                             ? 4.0 * median_point_spacing(fit_cloud)
                             : 0.0;

  MatX3 v = work.positions;
  MatX3 best_v = v;
  double best_e = std::numeric_limits<double>::infinity();
  MatX3 adam_m = MatX3::Zero(v.rows(), 3), adam_s = MatX3::Zero(v.rows(), 3);
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  int window_start = 0;
  int empty_warned = 0;

  auto energy_only = [&](const MatX3& pos) {
    MatX3 q = op.W * pos;
    try {
      auto [e, diag] = energy_dist(surface, q, EmptyPolicy::SkipWithCount, config.threads);
      double total = e;
      if (config.alpha > 0) total += config.alpha * energy_reg(pos, arap);
      return total;
    } catch (const Error& err) {
      if (err.error_class() == ErrorClass::AllSamplesEmpty)
        return std::numeric_limits<double>::infinity();  // reject the trial step
      throw;
    }
  };

  for (int iter = 0; iter < config.max_iters; ++iter) {
    Clock it_clock;
    if (iter % config.arap_refit_every == 0) fit_rotations(v, &arap, config.threads);
    work.positions = v;
    TotalEnergy te;
    try {
      te = total_energy_and_gradient(work, op, surface, arap, config);
    } catch (const Error& e) {
      if (e.error_class() == ErrorClass::AllSamplesEmpty) {
        MatX3 q = op.W * v;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      " (iteration %d, max nearest-point distance %.6g, h %.6g)", iter,
                      max_nearest_distance(surface, q), surface.h());
        throw Error(ErrorClass::AllSamplesEmpty, e.what() + std::string(buf));
      }
      throw;
    }
    if (!std::isfinite(te.total))
      throw Error(ErrorClass::Diverged, "energy became non-finite at iteration " + std::to_string(iter));
    if (te.skipped > n_samples / 10 && empty_warned++ == 0)
      report.warnings.push_back("more than 10% of samples have empty neighborhoods");

    report.history.push_back({iter, te.e_dist, te.e_reg, te.total, te.skipped, it_clock.ms()});
    if (te.total < best_e) {
      best_e = te.total;
      best_v = v;
    }

    // Plateau test: relative decrease over the trailing 10-iteration window.
    int w = iter - 10;
    if (w >= window_start) {
      double ref = report.history[w].total;
      if (ref - te.total < config.convergence_tol * std::max(std::abs(ref), 1e-300)) {
        if (config.h_schedule == HSchedule::GeometricDecay && surface.h() > h_floor) {
          surface.set_h(std::max(0.5 * surface.h(), h_floor));
          window_start = iter + 1;
          report.warnings.push_back("support radius decayed to " + std::to_string(surface.h()));
          continue;
        }
        break;
      }
    }

    if (config.optimizer == OptimizerKind::AdaptiveMoment) {
      adam_m = b1 * adam_m + (1 - b1) * te.gradient;
      adam_s = b2 * adam_s + (1 - b2) * te.gradient.cwiseProduct(te.gradient).eval();
      double c1 = 1.0 - std::pow(b1, iter + 1);
      double c2 = 1.0 - std::pow(b2, iter + 1);
      MatX3 mh = adam_m / c1;
      MatX3 sh = adam_s / c2;
      v -= config.learning_rate *
           mh.cwiseQuotient((sh.cwiseSqrt().array() + adam_eps).matrix()).eval();
    } else if (config.line_search) {
      double g2 = te.gradient.squaredNorm();
      double t = config.learning_rate;
      bool accepted = false;
      while (t > config.learning_rate * std::ldexp(1.0, -30)) {
        MatX3 trial = v - t * te.gradient;
        if (energy_only(trial) <= te.total - 1e-4 * t * g2) {
          v = trial;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;  // stationary up to the step floor
    } else {
      v -= config.learning_rate * te.gradient;
    }
  }

  work.positions = best_v;
  if (undo) {
    for (int i = 0; i < work.positions.rows(); ++i)
      work.positions.row(i) = undo->invert(Vec3(work.positions.row(i)));
    work.rest_positions = initial.rest_positions;
  }
  report.final_energy = best_e;
  report.h_used = surface.h();
  report.wall_time_ms = wall.ms();
  return {std::move(work), std::move(report)};
}

SequenceResult fit_sequence(const std::vector<FrameTarget>& frames, const ControlMesh& tmpl,
                            const FitConfig& config) {
  config.validate();
  SequenceResult out;
  ControlMesh current = tmpl;
  for (size_t i = 0; i < frames.size(); ++i) {
    PointCloud target;
    try {
      if (frames[i].cloud) {
        target = *frames[i].cloud;
      } else if (frames[i].mesh) {
        target = sample_mesh_to_cloud(*frames[i].mesh, config.mesh_sample_count,
                                      config.seed + static_cast<std::uint64_t>(i));
      } else {
        throw Error(ErrorClass::InvalidArgument, "frame has neither cloud nor mesh");
      }
      FitConfig frame_config = config;
      frame_config.auto_normalize = false;  // frames share one transform
      if (i > 0) {
        int budget = config.sequence_iters > 0 ? config.sequence_iters
                                               : std::max(1, config.max_iters / 4);
        frame_config.max_iters = budget;
      }
      auto [fitted, rep] = fit_static(target, current, frame_config);
      current.positions = fitted.positions;  // warm start; rest pose stays the template's
      out.positions.push_back(fitted.positions);
      out.reports.push_back(std::move(rep));
    } catch (const Error& e) {
      throw Error(e.error_class(), "frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace subfit
