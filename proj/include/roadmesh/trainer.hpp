#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "roadmesh/losses.hpp"
#include "roadmesh/neural_core.hpp"
#include "roadmesh/scene_model.hpp"

namespace roadmesh {

/// Switches reproducing the ablation variants.
struct Ablation {
  bool no_elevation_mlp = false;
  bool direct_rgb = false;
  bool shared_mlp_embedding = false;
  bool no_semantics = false;
  bool no_lidar = false;

  /// Comma-separated names of the active switches, "none" when all are off.
  std::string to_string() const;
  /// Turns on the switch with the given name; throws on unknown names.
  void enable(const std::string& name);
};

enum class SmoothNormalization {
  Sum,        // literal double sum
  PerVertex,  // double sum divided by the window vertex count
};

struct TrainConfig {
  int batch_size = 8;
  int epochs = 5;
  double window_distance = 80.0;
  std::uint64_t seed = 0;
  LossWeights weights;
  LearningRates learning_rates;
  Ablation ablation;

  double edge_length = 0.1;
  double half_width = 15.0;
  double neighborhood_radius = 0.0;  // 0 means edge_length
  SmoothNormalization smooth_normalization = SmoothNormalization::PerVertex;
  bool shuffle_batches = true;
  int threads = 1;

  void validate() const;
  ModelOptions model_options() const;
  /// Loss weights after the no_semantics / no_lidar switches.
  LossWeights effective_weights() const;
  double radius() const { return neighborhood_radius > 0.0 ? neighborhood_radius : edge_length; }
};

/// Next run of up to B consecutive frames starting at `cursor`; advances the cursor.
std::vector<int> sample_batch(const std::vector<Frame>& frames, int batch_size,
                              std::size_t& cursor);

/// All batches of one epoch in visiting order. Batches partition the frames;
/// their order is shuffled with (seed, epoch) when `shuffle` is set.
std::vector<std::vector<int>> epoch_batches(const std::vector<Frame>& frames, int batch_size,
                                            std::uint64_t seed, int epoch, bool shuffle);

/// Vertices whose arc-length coordinate lies within window_distance of the
/// batch's median trajectory pose. Sorted ascending.
std::vector<int> observation_window(const RoadMesh& mesh, const Trajectory& traj,
                                    const std::vector<Frame>& frames,
                                    const std::vector<int>& batch, double window_distance);

struct LossRow {
  long iter = 0;
  LossTerms terms;
  double total = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRow> history;
};

using ProgressCallback = std::function<void(const LossRow&, long total_iterations)>;

/// Runs epochs x batches optimizer steps. Throws NumericError naming the loss
/// term and iteration when a loss becomes non-finite.
TrainResult train(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config,
                  const ProgressCallback& progress = {});

/// Same, continuing from the given parameters.
TrainResult train(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config,
                  ModelParams initial, const ProgressCallback& progress = {});

/// Fresh parameters for a mesh and scene under a config.
ModelParams initial_params(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config);

/// Final elevation of every vertex (z0 when the elevation MLP is disabled).
Eigen::VectorXd model_elevations(const RoadMesh& mesh, const ModelParams& params);

/// Decoded per-vertex colors (3 x N) as seen by a camera, for any color model.
Eigen::MatrixXd model_colors(const ModelParams& params, int camera_id);

std::string loss_csv_header();
std::string loss_csv_row(const LossRow& row);

}  // namespace roadmesh
