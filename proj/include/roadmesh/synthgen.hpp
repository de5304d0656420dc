#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "roadmesh/common.hpp"
#include "roadmesh/scene_model.hpp"

namespace roadmesh {

enum class ProfileKind { Flat, Ramp, Sine };

/// Analytic ground elevation z*(x, y) in world coordinates.
struct ElevationProfile {
  ProfileKind kind = ProfileKind::Flat;
  double slope = 0.0;       // ramp: z = slope * x
  double amplitude = 0.0;   // sine: z = amplitude * sin(2 pi x / wavelength)
  double wavelength = 50.0;

  double height(double x, double y) const;
  Eigen::Vector2d gradient(double x, double y) const;
  bool planar() const { return kind != ProfileKind::Sine; }
  void validate() const;

  /// "flat", "ramp(0.05)" or "sine(0.5,40)".
  std::string to_string() const;
  static ElevationProfile parse(const std::string& text);
};

/// One camera of the rig: intrinsics, mounting on the vehicle and the
/// photometric transfer c -> clamp(gain * c^gamma).
struct CameraSpec {
  int id = 0;
  double fx = 200.0;
  double fy = 200.0;
  double cx = 80.0;
  double cy = 60.0;
  int width = 160;
  int height = 120;
  Eigen::Isometry3d vehicle_from_camera = Eigen::Isometry3d::Identity();
  double gain = 1.0;
  double gamma = 1.0;

  Camera camera() const { return Camera::from_intrinsics(id, fx, fy, cx, cy, width, height); }
  double transfer(double c) const;
  void validate() const;

  /// Vehicle frame is x forward, y left, z up; camera frame is x right, y down,
  /// z along the optical axis. Yaw turns the camera left, pitch tilts it down.
  static Eigen::Isometry3d mount(const Eigen::Vector3d& position, double yaw_deg,
                                 double pitch_down_deg);
};

struct SceneSpec {
  double route_length = 100.0;
  double heading_deg = 0.0;  // direction of the straight route in the world (x, y) plane
  ElevationProfile profile;

  int lane_count = 2;
  double lane_width = 3.5;
  double marking_width = 0.3;
  double dash_length = 3.0;
  double dash_gap = 3.0;
  double curb_width = 0.5;
  double manhole_spacing = 30.0;  // 0 disables manholes
  double manhole_radius = 0.5;
  double edge_softness = 0.2;     // width of the albedo blend across class boundaries
  double footprint_half_width = 10.0;  // lateral extent of the Lidar sweep

  std::vector<CameraSpec> cameras;
  double trajectory_spacing = 1.0;
  double frame_spacing = 2.0;
  double speed = 10.0;  // m/s, only sets timestamps

  double lidar_density = 30.0;  // points per m^2
  double lidar_sigma = 0.01;

  double dynamic_probability = 0.3;  // chance of a moving-object patch per frame
  std::uint64_t seed = 1;

  void validate() const;
  double road_half_width() const { return 0.5 * lane_count * lane_width; }
};

/// Procedural road layout evaluated in world coordinates.
class SceneLayout {
 public:
  explicit SceneLayout(const SceneSpec& spec);

  const SceneSpec& spec() const { return spec_; }
  /// World (x, y) to route coordinates (s along, l to the left).
  Eigen::Vector2d to_route(double x, double y) const;
  Eigen::Vector2d from_route(double s, double l) const;
  Eigen::Vector2d direction() const { return dir_; }

  double height(double x, double y) const { return spec_.profile.height(x, y); }
  Eigen::Vector3d albedo(double x, double y) const;
  std::uint8_t label(double x, double y) const;

  /// Vehicle pose at arc length s: on the surface, yawed along the route and
  /// pitched with the along-route grade.
  Eigen::Isometry3d vehicle_pose(double s) const;

 private:
  double marking_weight(double s, double l) const;
  bool on_marking(double s, double l) const;
  double manhole_weight(double s, double l) const;
  bool in_manhole(double s, double l) const;

  SceneSpec spec_;
  Eigen::Vector2d dir_;
  Eigen::Vector2d left_;
};

/// Synthetic scene with its analytic generator.
struct GroundTruthScene {
  SceneSpec spec;
  SceneData data;
  std::vector<CameraSpec> rig;

  SceneLayout layout() const { return SceneLayout(spec); }
};

GroundTruthScene generate_scene(const SceneSpec& spec);

/// Uniform samples over the route footprint with z = z*(x, y) + N(0, sigma).
/// The point count is round(density * footprint area).
LidarCloud sample_lidar(const SceneLayout& layout, double density, double sigma,
                        std::uint64_t seed);

/// Renders one frame of the analytic scene through a camera at a vehicle pose.
Frame render_ground_truth_frame(const SceneLayout& layout, const CameraSpec& cam,
                                const Eigen::Isometry3d& world_from_vehicle);

/// Canonical single front camera (pitched down, 160x120).
CameraSpec front_camera(int id = 0);

}  // namespace roadmesh
