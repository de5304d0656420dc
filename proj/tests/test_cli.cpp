#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "roadmesh/config.hpp"
#include "roadmesh/io.hpp"
#include "roadmesh/trainer.hpp"
#include "scratch_dir.hpp"

using namespace roadmesh;
using test_util::ScratchDir;

namespace {

constexpr const char* kSpec =
    "route_length = 6\n"
    "footprint_half_width = 3\n"
    "frame_spacing = 1\n"
    "lidar_density = 10\n"
    "camera = 0 40 40 24 16 48 32 1 1 1.5 0 1.6 0 50\n";

constexpr const char* kConfig =
    "edge_length = 0.4\n"
    "half_width = 3\n"
    "batch_size = 4\n"
    "epochs = 1\n";

/// Runs the CLI with `args`, output sent to <dir>/log.txt; returns the exit status.
int run(const ScratchDir& dir, const std::string& args) {
  const std::string cmd = std::string(ROADMESH_CLI) + " --workdir " + dir.path().string() +
                          " --quiet --threads 1 " + args + " > " + (dir / "log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void setup(const ScratchDir& dir) {
  write_text_file(dir / "spec.txt", kSpec);
  write_text_file(dir / "train.cfg", kConfig);
}

/// Every regular file under `root`, by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = test_util::file_bytes(e.path());
  }
  return out;
}

}  // namespace

TEST(Cli, UsageErrors) {
  ScratchDir dir("cli_usage");
  EXPECT_EQ(run(dir, ""), 1);
  EXPECT_EQ(run(dir, "frobnicate"), 1);
  EXPECT_EQ(run(dir, "generate only_one_arg"), 1);
  EXPECT_EQ(run(dir, "--help"), 0);
}

TEST(Cli, MissingSpecFails) {
  ScratchDir dir("cli_missing");
  EXPECT_NE(run(dir, "generate nope.txt scene"), 0);
  EXPECT_FALSE(fs::exists(dir / "scene"));
  EXPECT_NE(run(dir, "train nowhere run"), 0);
}

TEST(Cli, GenerateWritesASceneDirectory) {
  ScratchDir dir("cli_gen");
  setup(dir);
  ASSERT_EQ(run(dir, "generate spec.txt scene"), 0) << read_text_file(dir / "log.txt");
  EXPECT_TRUE(fs::exists(dir / "scene" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "scene" / "lidar.ply"));
  EXPECT_TRUE(fs::is_directory(dir / "scene" / "frames"));
  EXPECT_TRUE(fs::exists(dir / "scene" / "frames" / "0_00006.png"));
  EXPECT_NO_THROW(read_scene(dir / "scene"));
}

TEST(Cli, SameSeedGivesIdenticalScenes) {
  ScratchDir dir("cli_seed");
  setup(dir);
  ASSERT_EQ(run(dir, "--seed 7 generate spec.txt a"), 0);
  ASSERT_EQ(run(dir, "--seed 7 generate spec.txt b"), 0);
  ASSERT_EQ(run(dir, "--seed 8 generate spec.txt c"), 0);
  const auto a = tree(dir / "a");
  EXPECT_EQ(a, tree(dir / "b"));
  EXPECT_NE(a.at("lidar.ply"), tree(dir / "c").at("lidar.ply"));
}

TEST(Cli, ZeroEpochCheckpointIsTheInitialization) {
  ScratchDir dir("cli_init");
  setup(dir);
  ASSERT_EQ(run(dir, "generate spec.txt scene"), 0);
  ASSERT_EQ(run(dir, "--config train.cfg --epochs 0 --seed 3 train scene run"), 0)
      << read_text_file(dir / "log.txt");
  Checkpoint cp = load_checkpoint(dir / "run" / "checkpoint.bin");
  const LoadedScene scene = read_scene(dir / "scene");
  TrainConfig cfg = train_config_from(KeyValueFile::parse(kConfig));
  cfg.seed = 3;
  const RoadMesh mesh = build_mesh_from_trajectory(scene.data.trajectory, cfg.edge_length, cfg.half_width);
  ModelParams init = initial_params(scene.data, mesh, cfg);
  auto a = cp.params.tensors();
  auto b = init.tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].flat().matrix(), b[k].flat().matrix()) << a[k].name;
  EXPECT_EQ(read_text_file(dir / "run" / "loss.csv"), loss_csv_header() + "\n");
}

TEST(Cli, TrainRecordsConfigAndIsReproducible) {
  ScratchDir dir("cli_train");
  setup(dir);
  ASSERT_EQ(run(dir, "generate spec.txt scene"), 0);
  ASSERT_EQ(run(dir, "--config train.cfg --ablate no_lidar --ablate direct_rgb train scene r1"), 0)
      << read_text_file(dir / "log.txt");
  ASSERT_EQ(run(dir, "--config train.cfg --ablate no_lidar --ablate direct_rgb train scene r2"), 0);
  const std::string cfg = read_text_file(dir / "r1" / "config.txt");
  EXPECT_NE(cfg.find("ablation = direct_rgb,no_lidar"), std::string::npos);
  EXPECT_NE(cfg.find("edge_length = 0.40000000000000002"), std::string::npos);
  EXPECT_EQ(test_util::file_bytes(dir / "r1" / "loss.csv"), test_util::file_bytes(dir / "r2" / "loss.csv"));
  EXPECT_EQ(test_util::file_bytes(dir / "r1" / "checkpoint.bin"),
            test_util::file_bytes(dir / "r2" / "checkpoint.bin"));
  // Header + 7 frames / batch 4 = 2 rows.
  const std::string loss = read_text_file(dir / "r1" / "loss.csv");
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 3);
  EXPECT_EQ(run(dir, "--config train.cfg --ablate wings train scene r3"), 1);
}

TEST(Cli, EvalWritesMetricsAndIsIdempotent) {
  ScratchDir dir("cli_eval");
  setup(dir);
  ASSERT_EQ(run(dir, "generate spec.txt scene"), 0);
  ASSERT_EQ(run(dir, "--config train.cfg train scene run"), 0);
  ASSERT_EQ(run(dir, "eval scene run/checkpoint.bin ev1"), 0) << read_text_file(dir / "log.txt");
  ASSERT_EQ(run(dir, "eval scene run/checkpoint.bin ev2"), 0);
  const std::string m = read_text_file(dir / "ev1" / "metrics.csv");
  EXPECT_EQ(m, read_text_file(dir / "ev2" / "metrics.csv"));
  EXPECT_EQ(m.rfind("metric,value,count\npsnr_cam0,", 0), 0u);
  EXPECT_NE(m.find("\nmiou,"), std::string::npos);
  EXPECT_NE(m.find("\nelev_error_cm,"), std::string::npos);
  EXPECT_NE(run(dir, "eval scene missing.bin ev3"), 0);
}

TEST(Cli, ExportWritesMapsRendersAndMesh) {
  ScratchDir dir("cli_export");
  setup(dir);
  ASSERT_EQ(run(dir, "generate spec.txt scene"), 0);
  ASSERT_EQ(run(dir, "--config train.cfg --epochs 0 train scene run"), 0);
  ASSERT_EQ(run(dir, "export scene run/checkpoint.bin out"), 0) << read_text_file(dir / "log.txt");
  for (const char* f : {"maps/rgb_cam0.png", "maps/semantic.png", "maps/elevation.png", "maps/elevation.txt",
                        "renders/0_00000.png", "renders/0_00000_sem.png", "mesh.ply", "mesh.obj"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
}

TEST(Cli, AblateProducesFiveRows) {
  ScratchDir dir("cli_ablate");
  setup(dir);
  ASSERT_EQ(run(dir, "generate spec.txt scene"), 0);
  ASSERT_EQ(run(dir, "--config train.cfg ablate scene abl"), 0) << read_text_file(dir / "log.txt");
  std::ifstream in(dir / "abl" / "ablation.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "variant,psnr_db,miou,elev_error_cm,status");
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    names.push_back(line.substr(0, line.find(',')));
    EXPECT_EQ(line.substr(line.size() - 3), ",ok");
  }
  EXPECT_EQ(names, (std::vector<std::string>{"full", "a_no_elevation_mlp", "b_direct_rgb",
                                             "c_shared_mlp_embedding", "d_no_semantics"}));
  EXPECT_TRUE(fs::exists(dir / "abl" / "b_direct_rgb" / "checkpoint.bin"));
}
