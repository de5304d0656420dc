#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "roadmesh/common.hpp"
#include "roadmesh/neural_core.hpp"
#include "roadmesh/scene_model.hpp"
#include "roadmesh/synthgen.hpp"

namespace roadmesh {

namespace fs = std::filesystem;

using Palette = std::array<std::array<std::uint8_t, 3>, 256>;

/// Fixed semantic palette: classes 0-4, dynamic objects (>= 5) red, 255 black.
const Palette& semantic_palette();

// PNG ------------------------------------------------------------------------

/// 8-bit RGB; values are clamped to [0, 1] and rounded.
void write_png_rgb(const fs::path& path, const RgbImage& image);
RgbImage read_png_rgb(const fs::path& path);
/// 8-bit paletted image of label indices.
void write_png_indexed(const fs::path& path, const LabelImage& labels, const Palette& palette);
/// Palette indices of a paletted PNG (or the values of an 8-bit gray PNG).
LabelImage read_png_indexed(const fs::path& path);

// Text formats ----------------------------------------------------------------

void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const fs::path& path);

/// One camera per line: id fx fy cx cy w h gain gamma, then the 3x4 mount
/// [R | t] of vehicle_from_camera in row-major order.
void write_cameras_txt(const fs::path& path, const std::vector<CameraSpec>& cameras);
std::vector<CameraSpec> read_cameras_txt(const fs::path& path);

void write_lidar_ply(const fs::path& path, const LidarCloud& cloud);
LidarCloud read_lidar_ply(const fs::path& path);

/// ASCII PLY with vertex position, 8-bit color and semantic class, plus faces.
void write_mesh_ply(const fs::path& path, const RoadMesh& mesh, const Eigen::VectorXd& z,
                    const Eigen::MatrixXd& rgb, const std::vector<std::uint8_t>& labels);
void write_mesh_obj(const fs::path& path, const RoadMesh& mesh, const Eigen::VectorXd& z);

struct PlyVertexData {
  Eigen::Matrix3Xd positions;
  Eigen::Matrix3Xd rgb;  // empty when absent
  std::vector<std::uint8_t> labels;
  std::vector<Eigen::Vector3i> faces;
};
/// Reader for the ASCII PLY files this library writes.
PlyVertexData read_mesh_ply(const fs::path& path);

// Scene directories ----------------------------------------------------------

/// trajectory.csv, cameras.txt, frames.csv (per-frame pose and trajectory
/// index), frames/<id>_<k>.png, labels/<id>_<k>.png, lidar.ply and spec.txt.
void write_scene(const fs::path& dir, const GroundTruthScene& scene);

struct LoadedScene {
  SceneData data;
  std::vector<CameraSpec> rig;
};
LoadedScene read_scene(const fs::path& dir);

// Checkpoints ----------------------------------------------------------------

struct CheckpointMeta {
  Eigen::Index vertex_count = 0;
  double edge_length = 0.0;
  double half_width = 0.0;
  std::map<std::string, std::string> extra;
};

/// Writes <path> (raw little-endian doubles) and <path>.txt (header starting
/// with the magic line, then metadata and a name/shape/offset table).
void save_checkpoint(const fs::path& path, ModelParams& params, const CheckpointMeta& meta);

struct Checkpoint {
  ModelParams params;
  CheckpointMeta meta;
};
Checkpoint load_checkpoint(const fs::path& path);

// Misc -----------------------------------------------------------------------

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace roadmesh
