#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "subfit/decimate.hpp"
#include "subfit/errors.hpp"
#include "subfit/hausdorff.hpp"
#include "subfit/mesh_io.hpp"
#include "subfit/optimizer.hpp"

namespace fs = std::filesystem;
using namespace subfit;

namespace {

struct CommonFitFlags {
  std::string preset;
  std::string config_path;
  bool dump_config = false;
  FitConfig config;

  // flag presence trackers
  CLI::Option *o_h0 = nullptr, *o_alpha = nullptr, *o_lr = nullptr, *o_iters = nullptr,
              *o_tol = nullptr, *o_samples = nullptr, *o_seed = nullptr, *o_threads = nullptr,
              *o_line_search = nullptr, *o_h_schedule = nullptr;
  double h0 = 0, alpha = 0, lr = 0, tol = 0;
  int iters = 0, samples_level = 0, threads = 0;
  std::uint64_t seed = 0;
  bool line_search = false, h_schedule = false;

  void add_to(CLI::App* cmd) {
    o_h0 = cmd->add_option("--h0", h0, "IMLS support radius (unit-box units)");
    o_alpha = cmd->add_option("--alpha", alpha, "ARAP regularizer weight");
    o_lr = cmd->add_option("--lr", lr, "optimizer step size");
    o_iters = cmd->add_option("--iters", iters, "iteration cap");
    o_tol = cmd->add_option("--tol", tol, "relative energy-decrease stop threshold");
    o_samples = cmd->add_option("--samples-level", samples_level, "0: control vertices, 1: M1 vertices")
                    ->check(CLI::IsMember({0, 1}));
    o_seed = cmd->add_option("--seed", seed, "RNG seed");
    o_threads = cmd->add_option("--threads", threads, "worker count");
    o_line_search = cmd->add_flag("--line-search", line_search,
                                  "plain gradient descent with backtracking line search");
    o_h_schedule = cmd->add_flag("--h-schedule", h_schedule, "geometric support-radius decay");
    cmd->add_option("--preset", preset, "parameter preset")->check(CLI::IsMember({"clean", "noisy"}));
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_flag("--dump-config", dump_config, "print the effective config and exit");
  }

  // defaults < preset < config file < explicit flags
  FitConfig resolve() {
    FitConfig c;
    if (preset == "clean") {
      c.h0 = 0.0005;
      c.alpha = 0.01;
    } else if (preset == "noisy") {
      c.h0 = 0.05;
      c.alpha = 0.1;
    }
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorClass::IoError, "cannot open config '" + config_path + "'");
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      c = FitConfig::parse(text);
    }
    if (o_h0->count()) c.h0 = h0;
    if (o_alpha->count()) c.alpha = alpha;
    if (o_lr->count()) c.learning_rate = lr;
    if (o_iters->count()) c.max_iters = iters;
    if (o_tol->count()) c.convergence_tol = tol;
    if (o_samples->count()) c.samples_level = samples_level;
    if (o_seed->count()) c.seed = seed;
    if (o_threads->count()) c.threads = threads;
    if (o_line_search->count()) {
      c.line_search = true;
      c.optimizer = OptimizerKind::GradientDescent;
    }
    if (o_h_schedule->count()) c.h_schedule = HSchedule::GeometricDecay;
    if (const char* dir = std::getenv("SUBFIT_CACHE_DIR")) c.cache_dir = dir;
    c.validate();
    return c;
  }
};

std::string report_path_for(const std::string& out) {
  fs::path p(out);
  p.replace_extension("");
  return p.string() + ".report.txt";
}

void write_report(const FitReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorClass::IoError, "cannot write report '" + path + "'");
  out << report.to_text();
}

int run_fit(const std::string& cloud_path, const std::string& init_path,
            const std::string& target_mesh_path, const std::string& out_path,
            bool allow_nonmanifold, CommonFitFlags& flags) {
  FitConfig config = flags.resolve();
  if (flags.dump_config) {
    std::cout << config.serialize();
    return 0;
  }
  PointCloud cloud = load_point_cloud(cloud_path);
  std::vector<std::string> warnings;
  TriMesh init = load_mesh(init_path, allow_nonmanifold, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  auto [fitted, report] = fit_static(cloud, ControlMesh::from_mesh(init), config);
  if (!target_mesh_path.empty()) {
    TriMesh target = load_mesh(target_mesh_path, allow_nonmanifold);
    TriMesh smooth = subdivide_to_level(fitted.current_mesh(), 3, true);
    report.hausdorff_vs_target = hausdorff(smooth, target, 50000, config.seed);
  }
  write_mesh(fitted.current_mesh(), out_path);
  write_report(report, report_path_for(out_path));
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("fit: %d iterations, final energy %.6g, h %.6g\n",
              static_cast<int>(report.history.size()), report.final_energy, report.h_used);
  if (report.hausdorff_vs_target >= 0)
    std::printf("hausdorff vs target: %.6g of bbox diagonal\n", report.hausdorff_vs_target);
  return 0;
}

int run_fit_seq(const std::string& frames_dir, const std::string& init_path,
                const std::string& out_dir, const std::string& normalize_mode,
                bool allow_nonmanifold, CommonFitFlags& flags) {
  FitConfig config = flags.resolve();
  if (flags.dump_config) {
    std::cout << config.serialize();
    return 0;
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".obj" || ext == ".ply") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorClass::IoError, "no .obj/.ply frames in '" + frames_dir + "'");

  std::vector<FrameTarget> frames;
  for (const auto& f : files) {
    FrameTarget t;
    if (format_from_path(f) == MeshFormat::Obj) {
      t.mesh = load_mesh(f, allow_nonmanifold);
    } else {
      try {
        t.mesh = load_mesh(f, allow_nonmanifold);  // PLY with a face element
      } catch (const Error&) {
        t.cloud = load_point_cloud(f);
      }
    }
    frames.push_back(std::move(t));
  }

  TriMesh init = load_mesh(init_path, allow_nonmanifold);
  ControlMesh tmpl = ControlMesh::from_mesh(init);

  // Normalization: one shared transform from frame 0 (default), or one per
  // frame. Shared keeps the ARAP rest lengths meaningful across the sequence.
  std::vector<NormalizeTransform> undo(frames.size());
  auto frame_bbox = [](const FrameTarget& t) {
    return t.cloud ? t.cloud->bounds() : t.mesh->bounds();
  };
  if (normalize_mode == "shared") {
    NormalizeTransform t = unit_box_transform(frame_bbox(frames[0]));
    for (size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].cloud) frames[i].cloud = apply_transform(*frames[i].cloud, t);
      if (frames[i].mesh) frames[i].mesh = apply_transform(*frames[i].mesh, t);
      undo[i] = t;
    }
    tmpl.mesh = apply_transform(tmpl.mesh, t);
  } else {
    for (size_t i = 0; i < frames.size(); ++i) {
      NormalizeTransform t = unit_box_transform(frame_bbox(frames[i]));
      if (frames[i].cloud) frames[i].cloud = apply_transform(*frames[i].cloud, t);
      if (frames[i].mesh) frames[i].mesh = apply_transform(*frames[i].mesh, t);
      undo[i] = t;
    }
    tmpl.mesh = apply_transform(tmpl.mesh, undo[0]);
  }
  tmpl.positions = to_matrix(tmpl.mesh.vertices());
  tmpl.rest_positions = tmpl.positions;

  SequenceResult result = fit_sequence(frames, tmpl, config);

  fs::create_directories(out_dir);
  std::ofstream combined(fs::path(out_dir) / "sequence.report.txt");
  for (size_t i = 0; i < result.positions.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "frame_%04d.obj", static_cast<int>(i));
    TriMesh m = tmpl.mesh.with_positions(result.positions[i]);
    write_mesh(m, (fs::path(out_dir) / name).string(), MeshFormat::Obj, undo[i]);
    combined << "# frame " << i << "\n" << result.reports[i].to_text();
  }
  std::printf("fit-seq: %d frames written to %s\n", static_cast<int>(result.positions.size()),
              out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subfit: fits a Loop subdivision control mesh to an oriented point cloud"};
  app.require_subcommand(1);

  // decimate
  auto* cmd_decimate = app.add_subcommand("decimate", "QEM edge-collapse to a vertex budget");
  std::string dec_in, dec_out;
  int dec_target = 0;
  bool dec_preserve_boundary = false, dec_allow_nm = false;
  cmd_decimate->add_option("--in", dec_in, "input mesh")->required();
  cmd_decimate->add_option("--target-vertices", dec_target, "vertex budget")->required();
  cmd_decimate->add_flag("--preserve-boundary", dec_preserve_boundary, "never collapse boundary vertices");
  cmd_decimate->add_flag("--allow-nonmanifold", dec_allow_nm, "load non-manifold input anyway");
  cmd_decimate->add_option("--out", dec_out, "output mesh")->required();

  // fit
  auto* cmd_fit = app.add_subcommand("fit", "fit a control mesh to a point cloud");
  std::string fit_cloud, fit_init, fit_target, fit_out;
  bool fit_allow_nm = false;
  cmd_fit->add_option("--cloud", fit_cloud, "target oriented point cloud (PLY)")->required();
  cmd_fit->add_option("--init", fit_init, "initial control mesh")->required();
  cmd_fit->add_option("--target-mesh", fit_target, "report Hausdorff against this mesh");
  cmd_fit->add_option("--out", fit_out, "fitted control mesh")->required();
  cmd_fit->add_flag("--allow-nonmanifold", fit_allow_nm, "load non-manifold input anyway");
  CommonFitFlags fit_flags;
  fit_flags.add_to(cmd_fit);

  // fit-seq
  auto* cmd_seq = app.add_subcommand("fit-seq", "sequential warm-started fitting over frames");
  std::string seq_frames, seq_init, seq_out, seq_normalize = "shared";
  bool seq_allow_nm = false;
  cmd_seq->add_option("--frames", seq_frames, "directory of per-frame meshes/clouds")->required();
  cmd_seq->add_option("--init", seq_init, "template control mesh")->required();
  cmd_seq->add_option("--out-dir", seq_out, "output directory")->required();
  cmd_seq->add_option("--normalize", seq_normalize, "shared|per-frame")
      ->check(CLI::IsMember({"shared", "per-frame"}));
  cmd_seq->add_flag("--allow-nonmanifold", seq_allow_nm, "load non-manifold input anyway");
  CommonFitFlags seq_flags;
  seq_flags.add_to(cmd_seq);

  // subdivide
  auto* cmd_sub = app.add_subcommand("subdivide", "apply Loop subdivision steps");
  std::string sub_in, sub_out;
  int sub_level = 1;
  bool sub_limit = false, sub_allow_nm = false;
  cmd_sub->add_option("--in", sub_in, "input mesh")->required();
  cmd_sub->add_option("--level", sub_level, "number of subdivision steps (1..6)")->required();
  cmd_sub->add_flag("--limit", sub_limit, "push final vertices to their limit positions");
  cmd_sub->add_flag("--allow-nonmanifold", sub_allow_nm, "load non-manifold input anyway");
  cmd_sub->add_option("--out", sub_out, "output mesh")->required();

  // eval-imls
  auto* cmd_eval = app.add_subcommand("eval-imls", "IMLS residuals at limit samples of a mesh");
  std::string eval_cloud, eval_init;
  bool eval_allow_nm = false;
  cmd_eval->add_option("--cloud", eval_cloud, "oriented point cloud (PLY)")->required();
  cmd_eval->add_option("--init", eval_init, "control mesh to evaluate")->required();
  cmd_eval->add_flag("--allow-nonmanifold", eval_allow_nm, "load non-manifold input anyway");
  CommonFitFlags eval_flags;
  eval_flags.add_to(cmd_eval);

  // hausdorff
  auto* cmd_h = app.add_subcommand("hausdorff", "sampled symmetric Hausdorff distance");
  std::string h_a, h_b;
  int h_samples = 100000;
  std::uint64_t h_seed = 0;
  cmd_h->add_option("--a", h_a, "first mesh")->required();
  cmd_h->add_option("--b", h_b, "second mesh")->required();
  cmd_h->add_option("--samples", h_samples, "sample count per side");
  cmd_h->add_option("--seed", h_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors
  }

  try {
    if (app.got_subcommand(cmd_decimate)) {
      TriMesh mesh = load_mesh(dec_in, dec_allow_nm);
      DecimateResult r = decimate_qem(mesh, dec_target, dec_preserve_boundary);
      write_mesh(r.mesh, dec_out);
      if (!r.reached) {
        std::fprintf(stderr, "error: class=TargetUnreachable %s (best effort written)\n",
                     r.detail.c_str());
        return 1;
      }
      std::printf("decimate: %d -> %d vertices\n", mesh.vertex_count(), r.achieved);
      return 0;
    }
    if (app.got_subcommand(cmd_fit))
      return run_fit(fit_cloud, fit_init, fit_target, fit_out, fit_allow_nm, fit_flags);
    if (app.got_subcommand(cmd_seq))
      return run_fit_seq(seq_frames, seq_init, seq_out, seq_normalize, seq_allow_nm, seq_flags);
    if (app.got_subcommand(cmd_sub)) {
      TriMesh mesh = load_mesh(sub_in, sub_allow_nm);
      TriMesh out = subdivide_to_level(mesh, sub_level, sub_limit);
      write_mesh(out, sub_out);
      std::printf("subdivide: level %d, %d vertices, %d faces\n", sub_level, out.vertex_count(),
                  out.face_count());
      return 0;
    }
    if (app.got_subcommand(cmd_eval)) {
      FitConfig config = eval_flags.resolve();
      if (eval_flags.dump_config) {
        std::cout << config.serialize();
        return 0;
      }
      PointCloud cloud = load_point_cloud(eval_cloud);
      TriMesh mesh = load_mesh(eval_init, eval_allow_nm);
      auto samples = config.samples_level == 1 ? level_one_vertex_samples(mesh)
                                               : control_vertex_samples(mesh);
      SampleOperator op = build_sample_operator_cached(mesh, samples, config.cache_dir);
      MatX3 q = eval_points(op, to_matrix(mesh.vertices()));
      ImlsSurface surface(cloud, config.h0);
      auto [e, diag] = energy_dist(surface, q, EmptyPolicy::SkipWithCount, config.threads);
      double mean_abs = 0, max_abs = 0;
      int used = 0;
      for (size_t i = 0; i < diag.f.size(); ++i) {
        if (diag.empty[i]) continue;
        mean_abs += std::abs(diag.f[i]);
        max_abs = std::max(max_abs, std::abs(diag.f[i]));
        ++used;
      }
      if (used > 0) mean_abs /= used;
      std::printf("samples=%d skipped=%d e_dist=%.9g mean_abs_f=%.9g max_abs_f=%.9g\n",
                  op.sample_count(), diag.skipped, e, mean_abs, max_abs);
      return 0;
    }
    if (app.got_subcommand(cmd_h)) {
      TriMesh a = load_mesh(h_a);
      TriMesh b = load_mesh(h_b);
      std::printf("%.9g\n", hausdorff(a, b, h_samples, h_seed));
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: class=%s %s\n", e.class_name(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: class=Internal %s\n", e.what());
    return 1;
  }
  return 2;
}
