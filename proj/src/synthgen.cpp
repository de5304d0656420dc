#include "roadmesh/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <regex>

namespace roadmesh {

namespace {

constexpr double kMaxRayLength = 150.0;
const Eigen::Vector3d kSky(0.55, 0.70, 0.90);
const Eigen::Vector3d kAsphalt(0.30, 0.30, 0.32);
const Eigen::Vector3d kMarking(0.92, 0.92, 0.88);
const Eigen::Vector3d kManhole(0.12, 0.12, 0.14);
const Eigen::Vector3d kCurb(0.62, 0.60, 0.58);
const Eigen::Vector3d kVerge(0.28, 0.48, 0.22);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

/// Blend weight for a signed distance d (positive inside) across a boundary of
/// the given softness.
double inside_weight(double d, double softness) {
  if (softness <= 0.0) return d > 0.0 ? 1.0 : 0.0;
  const double t = std::clamp(d / softness + 0.5, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double positive_mod(double a, double m) { return a - m * std::floor(a / m); }

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

// ---------------------------------------------------------------------------

double ElevationProfile::height(double x, double /*y*/) const {
  switch (kind) {
    case ProfileKind::Flat:
      return 0.0;
    case ProfileKind::Ramp:
      return slope * x;
    case ProfileKind::Sine:
      return amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength);
  }
  return 0.0;
}

Eigen::Vector2d ElevationProfile::gradient(double x, double /*y*/) const {
  switch (kind) {
    case ProfileKind::Flat:
      return Eigen::Vector2d::Zero();
    case ProfileKind::Ramp:
      return {slope, 0.0};
    case ProfileKind::Sine: {
      const double w = 2.0 * std::numbers::pi / wavelength;
      return {amplitude * w * std::cos(w * x), 0.0};
    }
  }
  return Eigen::Vector2d::Zero();
}

void ElevationProfile::validate() const {
  if (!std::isfinite(slope)) throw InvalidInput("ramp slope must be finite");
  if (kind == ProfileKind::Sine) {
    if (!std::isfinite(amplitude)) throw InvalidInput("sine amplitude must be finite");
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
      throw InvalidInput("sine wavelength must be positive");
    }
  }
}

std::string ElevationProfile::to_string() const {
  char buf[96];
  switch (kind) {
    case ProfileKind::Flat:
      return "flat";
    case ProfileKind::Ramp:
      std::snprintf(buf, sizeof buf, "ramp(%.17g)", slope);
      return buf;
    case ProfileKind::Sine:
      std::snprintf(buf, sizeof buf, "sine(%.17g,%.17g)", amplitude, wavelength);
      return buf;
  }
  return "flat";
}

ElevationProfile ElevationProfile::parse(const std::string& text) {
  static const std::regex ramp(R"(\s*ramp\s*\(\s*([^,()\s]+)\s*\)\s*)");
  static const std::regex sine(R"(\s*sine\s*\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)\s*)");
  static const std::regex flat(R"(\s*flat\s*)");
  ElevationProfile p;
  std::smatch m;
  try {
    if (std::regex_match(text, flat)) {
      p.kind = ProfileKind::Flat;
    } else if (std::regex_match(text, m, ramp)) {
      p.kind = ProfileKind::Ramp;
      p.slope = std::stod(m[1]);
    } else if (std::regex_match(text, m, sine)) {
      p.kind = ProfileKind::Sine;
      p.amplitude = std::stod(m[1]);
      p.wavelength = std::stod(m[2]);
    } else {
      throw InvalidInput("unknown elevation profile '" + text + "'");
    }
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InvalidInput*>(&e)) throw;
    throw InvalidInput("malformed elevation profile '" + text + "'");
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

double CameraSpec::transfer(double c) const {
  return std::clamp(gain * std::pow(std::clamp(c, 0.0, 1.0), gamma), 0.0, 1.0);
}

void CameraSpec::validate() const {
  camera().validate();
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidInput("camera gain must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("camera gamma must be positive");
  if (!vehicle_from_camera.matrix().allFinite()) throw InvalidInput("camera mount is not finite");
}

Eigen::Isometry3d CameraSpec::mount(const Eigen::Vector3d& position, double yaw_deg,
                                    double pitch_down_deg) {
  Eigen::Matrix3d forward;  // camera looking along vehicle +x
  forward.col(0) = Eigen::Vector3d(0, -1, 0);
  forward.col(1) = Eigen::Vector3d(0, 0, -1);
  forward.col(2) = Eigen::Vector3d(1, 0, 0);
  const double deg = std::numbers::pi / 180.0;
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  T.linear() = (Eigen::AngleAxisd(yaw_deg * deg, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(pitch_down_deg * deg, Eigen::Vector3d::UnitY()))
                   .toRotationMatrix() *
               forward;
  T.translation() = position;
  return T;
}

CameraSpec front_camera(int id) {
  CameraSpec c;
  c.id = id;
  c.vehicle_from_camera = CameraSpec::mount({1.5, 0.0, 1.6}, 0.0, 20.0);
  return c;
}

void SceneSpec::validate() const {
  if (!(route_length > 0.0)) throw InvalidInput("route length must be positive");
  if (!std::isfinite(heading_deg)) throw InvalidInput("heading must be finite");
  profile.validate();
  if (lane_count < 1) throw InvalidInput("lane count must be at least 1");
  if (!(lane_width > 0.0) || !(marking_width >= 0.0) || marking_width >= lane_width) {
    throw InvalidInput("invalid lane layout");
  }
  if (!(dash_length > 0.0) || !(dash_gap >= 0.0)) throw InvalidInput("invalid dash pattern");
  if (!(curb_width >= 0.0) || !(edge_softness >= 0.0)) throw InvalidInput("invalid curb/softness");
  if (!(manhole_spacing >= 0.0) || !(manhole_radius >= 0.0) ||
      (manhole_spacing > 0.0 && 2.0 * manhole_radius >= manhole_spacing)) {
    throw InvalidInput("invalid manhole layout");
  }
  if (!(footprint_half_width > 0.0)) throw InvalidInput("footprint half width must be positive");
  if (cameras.empty()) throw InvalidInput("scene needs at least one camera");
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (cameras[i].id == cameras[j].id) throw InvalidInput("duplicate camera id");
    }
  }
  if (!(trajectory_spacing > 0.0) || !(frame_spacing > 0.0) || !(speed > 0.0)) {
    throw InvalidInput("spacings and speed must be positive");
  }
  if (!(lidar_density > 0.0)) throw InvalidInput("lidar density must be positive");
  if (!(lidar_sigma >= 0.0)) throw InvalidInput("lidar sigma must be nonnegative");
  if (!(dynamic_probability >= 0.0 && dynamic_probability <= 1.0)) {
    throw InvalidInput("dynamic probability must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------

SceneLayout::SceneLayout(const SceneSpec& spec) : spec_(spec) {
  const double h = spec.heading_deg * std::numbers::pi / 180.0;
  dir_ = Eigen::Vector2d(std::cos(h), std::sin(h));
  left_ = Eigen::Vector2d(-dir_.y(), dir_.x());
}

Eigen::Vector2d SceneLayout::to_route(double x, double y) const {
  const Eigen::Vector2d p(x, y);
  return {p.dot(dir_), p.dot(left_)};
}

Eigen::Vector2d SceneLayout::from_route(double s, double l) const { return s * dir_ + l * left_; }

// Markings: dashed separators between lanes, solid edge lines inset from the curb.
double SceneLayout::marking_weight(double s, double l) const {
  const double R = spec_.road_half_width();
  const double half = 0.5 * spec_.marking_width;
  const double soft = spec_.edge_softness;
  const double edge_inset = 0.3 + half;
  double w = 0.0;
  for (double le : {-R + edge_inset, R - edge_inset}) {
    w = std::max(w, inside_weight(half - std::abs(l - le), soft));
  }
  const double period = spec_.dash_length + spec_.dash_gap;
  const double phase = positive_mod(s, period);
  const double d_along = phase < spec_.dash_length
                             ? std::min(phase, spec_.dash_length - phase)
                             : -std::min(phase - spec_.dash_length, period - phase);
  for (int k = 1; k < spec_.lane_count; ++k) {
    const double lk = -R + k * spec_.lane_width;
    w = std::max(w, inside_weight(std::min(half - std::abs(l - lk), d_along), soft));
  }
  return w;
}

bool SceneLayout::on_marking(double s, double l) const {
  const double R = spec_.road_half_width();
  const double half = 0.5 * spec_.marking_width;
  const double edge_inset = 0.3 + half;
  for (double le : {-R + edge_inset, R - edge_inset}) {
    if (std::abs(l - le) < half) return true;
  }
  const double period = spec_.dash_length + spec_.dash_gap;
  if (positive_mod(s, period) >= spec_.dash_length) return false;
  for (int k = 1; k < spec_.lane_count; ++k) {
    if (std::abs(l - (-R + k * spec_.lane_width)) < half) return true;
  }
  return false;
}

double SceneLayout::manhole_weight(double s, double l) const {
  if (spec_.manhole_spacing <= 0.0 || spec_.manhole_radius <= 0.0) return 0.0;
  const double k = std::floor(s / spec_.manhole_spacing);
  const double sc = (k + 0.5) * spec_.manhole_spacing;
  const long lane = static_cast<long>(positive_mod(k, spec_.lane_count));
  const double lc = -spec_.road_half_width() + (static_cast<double>(lane) + 0.5) * spec_.lane_width;
  const double dist = std::hypot(s - sc, l - lc);
  return inside_weight(spec_.manhole_radius - dist, spec_.edge_softness);
}

bool SceneLayout::in_manhole(double s, double l) const {
  if (spec_.manhole_spacing <= 0.0 || spec_.manhole_radius <= 0.0) return false;
  const double k = std::floor(s / spec_.manhole_spacing);
  const double sc = (k + 0.5) * spec_.manhole_spacing;
  const long lane = static_cast<long>(positive_mod(k, spec_.lane_count));
  const double lc = -spec_.road_half_width() + (static_cast<double>(lane) + 0.5) * spec_.lane_width;
  return std::hypot(s - sc, l - lc) < spec_.manhole_radius;
}

Eigen::Vector3d SceneLayout::albedo(double x, double y) const {
  const Eigen::Vector2d sl = to_route(x, y);
  const double s = sl.x();
  const double l = sl.y();
  const double R = spec_.road_half_width();
  const double soft = spec_.edge_softness;
  const double wave = std::sin(2.0 * std::numbers::pi * s / 7.3) *
                      std::cos(2.0 * std::numbers::pi * l / 5.1);
  Eigen::Vector3d c = kAsphalt + Eigen::Vector3d(0.04, 0.035, 0.03) * wave;
  auto mix = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, double w) {
    return ((1.0 - w) * a + w * b).eval();
  };
  c = mix(c, kManhole, manhole_weight(s, l));
  c = mix(c, kMarking, marking_weight(s, l));
  c = mix(c, kCurb, inside_weight(std::abs(l) - R, soft));
  c = mix(c, kVerge, inside_weight(std::abs(l) - R - spec_.curb_width, soft));
  return c;
}

std::uint8_t SceneLayout::label(double x, double y) const {
  const Eigen::Vector2d sl = to_route(x, y);
  const double s = sl.x();
  const double l = sl.y();
  const double R = spec_.road_half_width();
  if (std::abs(l) > R + spec_.curb_width) return static_cast<std::uint8_t>(SemanticClass::Background);
  if (std::abs(l) > R) return static_cast<std::uint8_t>(SemanticClass::Curb);
  if (on_marking(s, l)) return static_cast<std::uint8_t>(SemanticClass::LaneMarking);
  if (in_manhole(s, l)) return static_cast<std::uint8_t>(SemanticClass::Manhole);
  return static_cast<std::uint8_t>(SemanticClass::Road);
}

Eigen::Isometry3d SceneLayout::vehicle_pose(double s) const {
  const Eigen::Vector2d p = from_route(s, 0.0);
  const double grade = spec_.profile.gradient(p.x(), p.y()).dot(dir_);
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  T.linear() = (Eigen::AngleAxisd(std::atan2(dir_.y(), dir_.x()), Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(-std::atan(grade), Eigen::Vector3d::UnitY()))
                   .toRotationMatrix();
  T.translation() = Eigen::Vector3d(p.x(), p.y(), height(p.x(), p.y()));
  return T;
}

// ---------------------------------------------------------------------------

namespace {

/// Ray parameter of the first surface hit, if any within kMaxRayLength.
std::optional<double> intersect_surface(const ElevationProfile& profile, const Eigen::Vector3d& o,
                                        const Eigen::Vector3d& d) {
  auto f = [&](double t) {
    const Eigen::Vector3d p = o + t * d;
    return p.z() - profile.height(p.x(), p.y());
  };
  if (profile.planar()) {
    const Eigen::Vector2d g = profile.gradient(o.x(), o.y());
    const double denom = d.z() - g.dot(d.head<2>());
    if (!(denom < 0.0)) return std::nullopt;
    const double t = -f(0.0) / denom;
    if (!(t > 0.0) || t > kMaxRayLength) return std::nullopt;
    return t;
  }
  const double step = 0.05;
  double t0 = 0.0;
  double f0 = f(t0);
  if (f0 <= 0.0) return std::nullopt;
  for (double t1 = step; t1 <= kMaxRayLength; t1 += step) {
    const double f1 = f(t1);
    if (f1 <= 0.0) {
      double lo = t0;
      double hi = t1;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    t0 = t1;
  }
  return std::nullopt;
}

}  // namespace

Frame render_ground_truth_frame(const SceneLayout& layout, const CameraSpec& cam,
                                const Eigen::Isometry3d& world_from_vehicle) {
  Frame frame;
  frame.camera_id = cam.id;
  frame.world_from_camera = world_from_vehicle * cam.vehicle_from_camera;
  frame.rgb = RgbImage(cam.width, cam.height, 3, 0.0);
  frame.sem_labels = LabelImage(cam.width, cam.height, 1, 0);
  const Eigen::Vector3d o = frame.world_from_camera.translation();
  const Eigen::Matrix3d R = frame.world_from_camera.linear();
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const Eigen::Vector3d d =
          R * Eigen::Vector3d((col - cam.cx) / cam.fx, (row - cam.cy) / cam.fy, 1.0);
      Eigen::Vector3d albedo = kSky;
      std::uint8_t label = static_cast<std::uint8_t>(SemanticClass::Background);
      if (const auto t = intersect_surface(layout.spec().profile, o, d)) {
        const Eigen::Vector3d p = o + *t * d;
        albedo = layout.albedo(p.x(), p.y());
        label = layout.label(p.x(), p.y());
      }
      for (int c = 0; c < 3; ++c) frame.rgb(col, row, c) = quantize8(cam.transfer(albedo[c]));
      frame.sem_labels(col, row) = label;
    }
  }
  return frame;
}

LidarCloud sample_lidar(const SceneLayout& layout, double density, double sigma,
                        std::uint64_t seed) {
  if (!(density > 0.0)) throw InvalidInput("lidar density must be positive");
  if (!(sigma >= 0.0)) throw InvalidInput("lidar sigma must be nonnegative");
  const double L = layout.spec().route_length;
  const double hw = layout.spec().footprint_half_width;
  const auto n = static_cast<Eigen::Index>(std::llround(density * L * 2.0 * hw));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> along(0.0, L);
  std::uniform_real_distribution<double> across(-hw, hw);
  std::normal_distribution<double> noise(0.0, 1.0);
  LidarCloud cloud;
  cloud.points.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = along(rng);
    const double l = across(rng);
    const double e = noise(rng);
    const Eigen::Vector2d p = layout.from_route(s, l);
    cloud.points.col(i) << p.x(), p.y(), layout.height(p.x(), p.y()) + sigma * e;
  }
  return cloud;
}

namespace {

void paint_dynamic_patch(Frame& frame, const CameraSpec& cam, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int w = std::max(1, static_cast<int>(cam.width * (0.1 + 0.15 * unit(rng))));
  const int h = std::max(1, static_cast<int>(cam.height * (0.1 + 0.15 * unit(rng))));
  const int x0 = static_cast<int>((cam.width - w) * unit(rng));
  const int y0 = cam.height / 3 + static_cast<int>((cam.height - cam.height / 3 - h) * unit(rng));
  const auto label = static_cast<std::uint8_t>(kFirstDynamicLabel + static_cast<int>(3 * unit(rng)) % 3);
  const Eigen::Vector3d color(0.1 + 0.8 * unit(rng), 0.1 + 0.8 * unit(rng), 0.1 + 0.8 * unit(rng));
  for (int y = y0; y < std::min(cam.height, y0 + h); ++y) {
    for (int x = x0; x < std::min(cam.width, x0 + w); ++x) {
      for (int c = 0; c < 3; ++c) frame.rgb(x, y, c) = quantize8(cam.transfer(color[c]));
      frame.sem_labels(x, y) = label;
    }
  }
}

}  // namespace

GroundTruthScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  GroundTruthScene scene;
  scene.spec = spec;
  scene.rig = spec.cameras;
  std::sort(scene.rig.begin(), scene.rig.end(),
            [](const CameraSpec& a, const CameraSpec& b) { return a.id < b.id; });
  const SceneLayout layout(spec);
  const double L = spec.route_length;

  std::vector<Pose> poses;
  std::vector<double> pose_arc;
  for (long j = 0;; ++j) {
    double s = static_cast<double>(j) * spec.trajectory_spacing;
    if (s > L + 1e-9) {
      if (L - pose_arc.back() > 1e-9) s = L;
      else break;
    }
    const Eigen::Isometry3d T = layout.vehicle_pose(s);
    Pose p;
    p.t = s / spec.speed;
    p.position = T.translation();
    p.orientation = Eigen::Quaterniond(T.linear()).normalized();
    poses.push_back(p);
    pose_arc.push_back(s);
    if (s == L) break;
  }
  scene.data.trajectory = Trajectory(std::move(poses));
  for (const auto& c : scene.rig) scene.data.cameras.push_back(c.camera());

  std::mt19937_64 dyn_rng(derive_seed(spec.seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (long k = 0;; ++k) {
    const double s = static_cast<double>(k) * spec.frame_spacing;
    if (s > L + 1e-9) break;
    const auto nearest = std::lower_bound(pose_arc.begin(), pose_arc.end(), s);
    auto idx = static_cast<int>(nearest - pose_arc.begin());
    if (idx == static_cast<int>(pose_arc.size())) --idx;
    if (idx > 0 && s - pose_arc[idx - 1] <= pose_arc[idx] - s) --idx;
    const Eigen::Isometry3d vehicle = layout.vehicle_pose(s);
    for (const auto& cam : scene.rig) {
      Frame f = render_ground_truth_frame(layout, cam, vehicle);
      f.traj_index = idx;
      // Draw unconditionally so the patch stream does not depend on earlier outcomes.
      const double draw = unit(dyn_rng);
      std::mt19937_64 patch_rng(derive_seed(spec.seed, 1000 + scene.data.frames.size()));
      if (draw < spec.dynamic_probability) paint_dynamic_patch(f, cam, patch_rng);
      scene.data.frames.push_back(std::move(f));
    }
  }
  scene.data.lidar = sample_lidar(layout, spec.lidar_density, spec.lidar_sigma,
                                  derive_seed(spec.seed, 2));
  return scene;
}

}  // namespace roadmesh
