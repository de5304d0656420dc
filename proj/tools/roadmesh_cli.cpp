// Command-line driver: generate | train | eval | ablate | export.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "roadmesh/config.hpp"
#include "roadmesh/eval_export.hpp"
#include "roadmesh/io.hpp"
#include "roadmesh/synthgen.hpp"
#include "roadmesh/trainer.hpp"

namespace fs = std::filesystem;
using namespace roadmesh;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kNumeric = 2, kIo = 3 };

struct GlobalOptions {
  std::string workdir = ".";
  std::optional<std::uint64_t> seed;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string config;
  std::optional<int> epochs;
  std::vector<std::string> ablate;
  bool quiet = false;
};

fs::path resolve(const GlobalOptions& g, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.workdir) / path;
}

TrainConfig effective_config(const GlobalOptions& g) {
  TrainConfig c;
  if (!g.config.empty()) c = train_config_from(KeyValueFile::parse(read_text_file(resolve(g, g.config))));
  if (g.seed) c.seed = *g.seed;
  if (g.epochs) c.epochs = *g.epochs;
  c.threads = g.threads;
  for (const auto& a : g.ablate) c.ablation.enable(a);
  c.validate();
  return c;
}

RoadMesh mesh_for(const SceneData& scene, double edge_length, double half_width) {
  return build_mesh_from_trajectory(scene.trajectory, edge_length, half_width);
}

ProgressCallback printer(bool quiet) {
  if (quiet) return {};
  return [](const LossRow& row, long total) {
    std::printf("iter %ld/%ld  L_rgb %.5f  L_sem %.5f  L_z %.5f  L_smooth %.6f  L_total %.5f\n",
                row.iter + 1, total, row.terms.rgb, row.terms.sem, row.terms.z, row.terms.smooth,
                row.total);
    std::fflush(stdout);
  };
}

void write_loss_csv(const fs::path& path, const std::vector<LossRow>& rows) {
  std::ostringstream out;
  out << loss_csv_header() << '\n';
  for (const auto& r : rows) out << loss_csv_row(r) << '\n';
  write_text_file(path, out.str());
}

/// Trains into run_dir and returns the final parameters.
ModelParams run_training(const LoadedScene& scene, const RoadMesh& mesh, const TrainConfig& config,
                         const fs::path& run_dir, bool quiet) {
  fs::create_directories(run_dir);
  write_text_file(run_dir / "config.txt", to_text(config));
  TrainResult result = train(scene.data, mesh, config, printer(quiet));
  write_loss_csv(run_dir / "loss.csv", result.history);
  CheckpointMeta meta;
  meta.vertex_count = mesh.vertex_count();
  meta.edge_length = config.edge_length;
  meta.half_width = config.half_width;
  meta.extra["ablation"] = config.ablation.to_string();
  meta.extra["seed"] = std::to_string(config.seed);
  save_checkpoint(run_dir / "checkpoint.bin", result.params, meta);
  return std::move(result.params);
}

struct LoadedModel {
  Checkpoint checkpoint;
  RoadMesh mesh;
};

LoadedModel load_model(const LoadedScene& scene, const fs::path& checkpoint) {
  LoadedModel m{load_checkpoint(checkpoint), {}};
  m.mesh = mesh_for(scene.data, m.checkpoint.meta.edge_length, m.checkpoint.meta.half_width);
  if (m.mesh.vertex_count() != m.checkpoint.params.vertex_count()) {
    throw IoError("checkpoint has " + std::to_string(m.checkpoint.params.vertex_count()) +
                  " vertices but the scene mesh has " + std::to_string(m.mesh.vertex_count()));
  }
  for (int id : scene.data.camera_ids()) m.checkpoint.params.camera_slot(id);
  return m;
}

int cmd_generate(const GlobalOptions& g, const std::string& spec_file, const std::string& out) {
  SceneSpec spec = scene_spec_from(KeyValueFile::parse(read_text_file(resolve(g, spec_file))));
  if (g.seed) spec.seed = *g.seed;
  if (spec.cameras.empty()) spec.cameras.push_back(front_camera());
  const GroundTruthScene scene = generate_scene(spec);
  write_scene(resolve(g, out), scene);
  std::printf("wrote %zu frames, %ld Lidar points to %s\n", scene.data.frames.size(),
              static_cast<long>(scene.data.lidar.size()), resolve(g, out).c_str());
  return kOk;
}

int cmd_train(const GlobalOptions& g, const std::string& scene_dir, const std::string& run) {
  const TrainConfig config = effective_config(g);
  const LoadedScene scene = read_scene(resolve(g, scene_dir));
  const RoadMesh mesh = mesh_for(scene.data, config.edge_length, config.half_width);
  std::printf("mesh: %ld vertices, %zu faces\n", static_cast<long>(mesh.vertex_count()), mesh.faces.size());
  run_training(scene, mesh, config, resolve(g, run), g.quiet);
  return kOk;
}

int cmd_eval(const GlobalOptions& g, const std::string& scene_dir, const std::string& checkpoint,
             const std::string& run) {
  const LoadedScene scene = read_scene(resolve(g, scene_dir));
  const LoadedModel model = load_model(scene, resolve(g, checkpoint));
  const MetricsReport report = evaluate(scene.data, model.mesh, model.checkpoint.params);
  const fs::path dir = resolve(g, run);
  write_text_file(dir / "metrics.csv", report.to_csv());
  write_text_file(dir / "metrics.txt", report.summary());
  std::fputs(report.summary().c_str(), stdout);
  return kOk;
}

int cmd_export(const GlobalOptions& g, const std::string& scene_dir, const std::string& checkpoint,
               const std::string& run) {
  const LoadedScene scene = read_scene(resolve(g, scene_dir));
  const LoadedModel model = load_model(scene, resolve(g, checkpoint));
  const ModelParams& params = model.checkpoint.params;
  const fs::path dir = resolve(g, run);
  std::vector<Eigen::MatrixXd> colors;
  for (int id : params.camera_ids) colors.push_back(model_colors(params, id));
  export_bev_maps(dir / "maps", model.mesh, model_elevations(model.mesh, params), params.camera_ids,
                  colors, params.sem_logits);
  export_renders(dir / "renders", scene.data, model.mesh, params);
  export_mesh(dir, model.mesh, params);
  std::printf("exported maps, renders and mesh to %s\n", dir.c_str());
  return kOk;
}

int cmd_ablate(const GlobalOptions& g, const std::string& scene_dir, const std::string& run) {
  const TrainConfig base = effective_config(g);
  const LoadedScene scene = read_scene(resolve(g, scene_dir));
  const RoadMesh mesh = mesh_for(scene.data, base.edge_length, base.half_width);
  const fs::path dir = resolve(g, run);
  const std::vector<std::pair<std::string, std::string>> variants = {
      {"full", "none"},
      {"a_no_elevation_mlp", "no_elevation_mlp"},
      {"b_direct_rgb", "direct_rgb"},
      {"c_shared_mlp_embedding", "shared_mlp_embedding"},
      {"d_no_semantics", "no_semantics"},
  };
  std::ostringstream table;
  table << "variant,psnr_db,miou,elev_error_cm,status\n";
  bool failed = false;
  for (const auto& [name, ablation] : variants) {
    TrainConfig c = base;
    c.ablation.enable(ablation);
    char row[256];
    try {
      c.validate();
      std::printf("== %s\n", name.c_str());
      const ModelParams params = run_training(scene, mesh, c, dir / name, g.quiet);
      const MetricsReport m = evaluate(scene.data, mesh, params);
      write_text_file(dir / name / "metrics.csv", m.to_csv());
      std::snprintf(row, sizeof row, "%s,%.4f,%.4f,%.4f,ok\n", name.c_str(), m.mean_psnr(), m.miou,
                    m.elev_error_cm);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "%s failed: %s\n", name.c_str(), e.what());
      std::snprintf(row, sizeof row, "%s,,,,failed\n", name.c_str());
      failed = true;
    }
    table << row;
  }
  write_text_file(dir / "ablation.csv", table.str());
  std::fputs(table.str().c_str(), stdout);
  return failed ? kNumeric : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Road-surface reconstruction from synthetic multi-camera scenes"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--workdir", g.workdir, "Base directory for relative paths")->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed (overrides config and spec files)");
  app.add_option("--threads", g.threads, "Worker threads for per-frame work")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Training config file (key = value)");
  app.add_option("--epochs", g.epochs, "Training epochs (overrides the config file)")->check(CLI::NonNegativeNumber);
  app.add_option("--ablate", g.ablate,
                 "Ablation switch: no_elevation_mlp, direct_rgb, shared_mlp_embedding, no_semantics, no_lidar");
  app.add_flag("--quiet", g.quiet, "Do not print per-iteration losses");

  std::string spec_file, scene_dir, run_dir, checkpoint, out_dir;
  auto* gen = app.add_subcommand("generate", "Write a synthetic scene directory");
  gen->add_option("spec", spec_file, "Scene spec file")->required();
  gen->add_option("out", out_dir, "Output scene directory")->required();

  auto* tr = app.add_subcommand("train", "Fit the model; writes checkpoint.bin, loss.csv, config.txt");
  tr->add_option("scene", scene_dir, "Scene directory")->required();
  tr->add_option("run", run_dir, "Run directory")->required();

  auto* ev = app.add_subcommand("eval", "Compute PSNR, mIoU and Elev-error; writes metrics.csv");
  ev->add_option("scene", scene_dir, "Scene directory")->required();
  ev->add_option("checkpoint", checkpoint, "Checkpoint .bin")->required();
  ev->add_option("run", run_dir, "Output directory")->required();

  auto* ab = app.add_subcommand("ablate", "Train the full model and ablations (a)-(d); writes ablation.csv");
  ab->add_option("scene", scene_dir, "Scene directory")->required();
  ab->add_option("run", run_dir, "Run directory")->required();

  auto* ex = app.add_subcommand("export", "Write BEV maps, rendered views and the mesh");
  ex->add_option("scene", scene_dir, "Scene directory")->required();
  ex->add_option("checkpoint", checkpoint, "Checkpoint .bin")->required();
  ex->add_option("run", run_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(g, spec_file, out_dir);
    if (*tr) return cmd_train(g, scene_dir, run_dir);
    if (*ev) return cmd_eval(g, scene_dir, checkpoint, run_dir);
    if (*ab) return cmd_ablate(g, scene_dir, run_dir);
    if (*ex) return cmd_export(g, scene_dir, checkpoint, run_dir);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
