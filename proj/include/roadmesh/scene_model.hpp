#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "roadmesh/common.hpp"

namespace roadmesh {

struct Pose {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Eigen::Isometry3d world_from_body() const;
};

/// Ordered vehicle poses. Construction validates strictly increasing
/// timestamps and unit quaternions.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Pose> poses);

  const std::vector<Pose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const Pose& operator[](std::size_t i) const { return poses_[i]; }

  /// Cumulative arc length in the (x, y) plane, one entry per pose.
  const std::vector<double>& arc_lengths() const { return arc_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }

  /// Linear interpolation of position at the given arc length (clamped).
  Eigen::Vector3d position_at(double arc) const;
  /// Unit (x, y) direction of travel at the given arc length.
  Eigen::Vector2d heading_at(double arc) const;

 private:
  std::vector<Pose> poses_;
  std::vector<double> arc_;
};

struct Camera {
  int id = 0;
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  int width = 0;
  int height = 0;

  double fx() const { return K(0, 0); }
  double fy() const { return K(1, 1); }
  double cx() const { return K(0, 2); }
  double cy() const { return K(1, 2); }

  static Camera from_intrinsics(int id, double fx, double fy, double cx, double cy, int width,
                                int height);
  void validate() const;
};

struct Frame {
  int camera_id = 0;
  Eigen::Isometry3d world_from_camera = Eigen::Isometry3d::Identity();
  RgbImage rgb;
  LabelImage sem_labels;
  int traj_index = 0;

  Eigen::Isometry3d camera_from_world() const { return world_from_camera.inverse(); }
};

struct LidarCloud {
  Eigen::Matrix3Xd points;

  Eigen::Index size() const { return points.cols(); }
  void validate() const;
};

/// Everything the optimizer consumes: poses, calibrated cameras, frames and Lidar.
struct SceneData {
  Trajectory trajectory;
  std::vector<Camera> cameras;
  std::vector<Frame> frames;  // sorted by (traj_index, camera_id)
  LidarCloud lidar;

  const Camera& camera(int id) const;
  std::vector<int> camera_ids() const;
  void validate() const;
};

/// Equilateral lattice backing a RoadMesh. Odd rows are shifted by half an edge.
struct Lattice {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double edge = 0.0;
  int rows = 0;
  int cols = 0;
  std::vector<int> node_vertex;  // rows*cols, -1 when the node is not a mesh vertex

  double pitch() const;
  double row_offset(int row) const { return (row & 1) ? 0.5 * edge : 0.0; }
  Eigen::Vector2d node_position(int row, int col) const;
  int vertex_at(int row, int col) const;
  bool empty() const { return rows == 0; }
};

struct SurfacePoint {
  Eigen::Vector3i vertices = Eigen::Vector3i::Constant(-1);
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
};

class RoadMesh {
 public:
  Eigen::Matrix2Xd xy;           // vertex (x, y)
  Eigen::VectorXd z0;            // initial elevation
  Eigen::VectorXd arc;           // arc-length coordinate of the nearest trajectory sample
  std::vector<Eigen::Vector3i> faces;
  double edge_length = 0.0;
  Eigen::AlignedBox2d bbox;
  Lattice lattice;

  Eigen::Index vertex_count() const { return xy.cols(); }
  std::size_t edge_count() const { return adj_indices_.size() / 2; }

  std::span<const int> neighbors(int i) const {
    return {adj_indices_.data() + adj_offsets_[i], adj_indices_.data() + adj_offsets_[i + 1]};
  }

  /// Rebuilds the symmetric adjacency from the faces.
  void build_adjacency_from_faces();
  /// Replaces the adjacency by the given undirected edges.
  void set_adjacency_from_edges(const std::vector<std::pair<int, int>>& edges);

  /// Triangle containing (x, y) and barycentric weights, if inside the footprint.
  std::optional<SurfacePoint> locate(double x, double y) const;
  /// Barycentric interpolation of a per-vertex field.
  std::optional<double> interpolate(const Eigen::VectorXd& field, double x, double y) const;

  /// Total (x, y) area of all faces.
  double area() const;

 private:
  std::optional<SurfacePoint> locate_brute_force(double x, double y) const;

  std::vector<int> adj_offsets_{0};
  std::vector<int> adj_indices_;
};

/// Builds a mesh from explicit geometry (no lattice); used for small hand-made scenes.
RoadMesh make_mesh(Eigen::Matrix2Xd xy, Eigen::VectorXd z0, std::vector<Eigen::Vector3i> faces,
                   double edge_length);

/// Inverse-distance weighted elevation of the four nearest poses, weights 1/(d + 1e-6).
double interpolate_elevation(const Trajectory& traj, double x, double y);

/// Equilateral mesh over the trajectory widened by half_width on both sides.
RoadMesh build_mesh_from_trajectory(const Trajectory& traj, double edge_length, double half_width);

std::span<const int> vertex_neighbors(const RoadMesh& mesh, int i);

}  // namespace roadmesh
