#include "roadmesh/scene_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "spatial_index.hpp"

namespace roadmesh {

namespace {

constexpr double kIdwEpsilon = 1e-6;
constexpr int kIdwNeighbors = 4;

double idw(const detail::PointIndex2d& index, const Eigen::VectorXd& z, double x, double y) {
  const auto hits = index.nearest(x, y, kIdwNeighbors);
  double num = 0.0;
  double den = 0.0;
  for (const auto& [d, i] : hits) {
    if (d == 0.0) return z[i];
    const double w = 1.0 / (d + kIdwEpsilon);
    num += w * z[i];
    den += w;
  }
  return num / den;
}

Eigen::Vector3d barycentric(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d v0 = b - a;
  const Eigen::Vector2d v1 = c - a;
  const Eigen::Vector2d v2 = p - a;
  const double den = v0.x() * v1.y() - v1.x() * v0.y();
  const double l1 = (v2.x() * v1.y() - v1.x() * v2.y()) / den;
  const double l2 = (v0.x() * v2.y() - v2.x() * v0.y()) / den;
  return {1.0 - l1 - l2, l1, l2};
}

bool inside(const Eigen::Vector3d& bary) {
  constexpr double tol = -1e-9;
  return bary.minCoeff() >= tol;
}

}  // namespace

Eigen::Isometry3d Pose::world_from_body() const {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  T.linear() = orientation.toRotationMatrix();
  T.translation() = position;
  return T;
}

Trajectory::Trajectory(std::vector<Pose> poses) : poses_(std::move(poses)) {
  arc_.reserve(poses_.size());
  for (std::size_t i = 0; i < poses_.size(); ++i) {
    const Pose& p = poses_[i];
    if (std::abs(p.orientation.norm() - 1.0) > 1e-6) {
      throw InvalidInput("pose " + std::to_string(i) + ": quaternion is not unit length");
    }
    if (!p.position.allFinite() || !std::isfinite(p.t)) {
      throw InvalidInput("pose " + std::to_string(i) + ": non-finite value");
    }
    if (i == 0) {
      arc_.push_back(0.0);
      continue;
    }
    if (!(p.t > poses_[i - 1].t)) {
      throw InvalidInput("pose " + std::to_string(i) + ": timestamps must be strictly increasing");
    }
    arc_.push_back(arc_.back() + (p.position.head<2>() - poses_[i - 1].position.head<2>()).norm());
  }
}

Eigen::Vector3d Trajectory::position_at(double arc) const {
  if (poses_.empty()) throw InvalidInput("empty trajectory");
  if (arc <= 0.0 || poses_.size() == 1) return poses_.front().position;
  if (arc >= arc_.back()) return poses_.back().position;
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), arc);
  const std::size_t hi = static_cast<std::size_t>(it - arc_.begin());
  const std::size_t lo = hi - 1;
  const double span = arc_[hi] - arc_[lo];
  const double t = span > 0.0 ? (arc - arc_[lo]) / span : 0.0;
  return (1.0 - t) * poses_[lo].position + t * poses_[hi].position;
}

Eigen::Vector2d Trajectory::heading_at(double arc) const {
  if (poses_.size() < 2) throw InvalidInput("heading needs at least two poses");
  auto it = std::upper_bound(arc_.begin(), arc_.end(), arc);
  std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - arc_.begin()), 1,
                                           poses_.size() - 1);
  // Skip stationary segments.
  while (hi + 1 < poses_.size() && arc_[hi] == arc_[hi - 1]) ++hi;
  const Eigen::Vector2d d = poses_[hi].position.head<2>() - poses_[hi - 1].position.head<2>();
  return d.normalized();
}

Camera Camera::from_intrinsics(int id, double fx, double fy, double cx, double cy, int width,
                               int height) {
  Camera cam;
  cam.id = id;
  cam.K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  cam.width = width;
  cam.height = height;
  cam.validate();
  return cam;
}

void Camera::validate() const {
  if (!(fx() > 0.0 && fy() > 0.0)) throw InvalidInput("camera focal lengths must be positive");
  if (!(cx() > 0.0 && cx() < width && cy() > 0.0 && cy() < height)) {
    throw InvalidInput("camera principal point outside the image");
  }
  if (K(0, 1) != 0.0) throw InvalidInput("camera skew must be zero");
}

void LidarCloud::validate() const {
  if (!points.allFinite()) throw InvalidInput("lidar cloud contains non-finite coordinates");
}

const Camera& SceneData::camera(int id) const {
  for (const auto& c : cameras) {
    if (c.id == id) return c;
  }
  throw InvalidInput("unknown camera id " + std::to_string(id));
}

std::vector<int> SceneData::camera_ids() const {
  std::vector<int> ids;
  for (const auto& c : cameras) ids.push_back(c.id);
  return ids;
}

void SceneData::validate() const {
  for (const auto& c : cameras) c.validate();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    const Camera& c = camera(f.camera_id);
    if (!f.rgb.same_shape(c.width, c.height) || f.rgb.channels != 3 ||
        !f.sem_labels.same_shape(c.width, c.height)) {
      throw InvalidInput("frame " + std::to_string(k) + " does not match camera " +
                         std::to_string(c.id));
    }
    if (f.traj_index < 0 || static_cast<std::size_t>(f.traj_index) >= trajectory.size()) {
      throw InvalidInput("frame " + std::to_string(k) + " references a missing pose");
    }
    if (k > 0 && f.traj_index < frames[k - 1].traj_index) {
      throw InvalidInput("frames must be ordered by trajectory index");
    }
  }
  lidar.validate();
}

double Lattice::pitch() const { return edge * std::sqrt(3.0) / 2.0; }

Eigen::Vector2d Lattice::node_position(int row, int col) const {
  return origin + Eigen::Vector2d(col * edge + row_offset(row), row * pitch());
}

int Lattice::vertex_at(int row, int col) const {
  if (row < 0 || row >= rows || col < 0 || col >= cols) return -1;
  return node_vertex[static_cast<std::size_t>(row) * cols + col];
}

void RoadMesh::build_adjacency_from_faces() {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(faces.size() * 3);
  for (const auto& f : faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k];
      int b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  set_adjacency_from_edges(edges);
}

void RoadMesh::set_adjacency_from_edges(const std::vector<std::pair<int, int>>& edges) {
  const auto n = static_cast<std::size_t>(vertex_count());
  std::vector<std::vector<int>> lists(n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
      throw InvalidInput("edge references an invalid vertex");
    }
    if (a == b) continue;
    lists[a].push_back(b);
    lists[b].push_back(a);
  }
  adj_offsets_.assign(n + 1, 0);
  adj_indices_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    auto& l = lists[i];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    adj_indices_.insert(adj_indices_.end(), l.begin(), l.end());
    adj_offsets_[i + 1] = static_cast<int>(adj_indices_.size());
  }
}

std::optional<SurfacePoint> RoadMesh::locate_brute_force(double x, double y) const {
  const Eigen::Vector2d p(x, y);
  for (const auto& t : faces) {
    const Eigen::Vector3d b = barycentric(p, xy.col(t[0]), xy.col(t[1]), xy.col(t[2]));
    if (inside(b)) return SurfacePoint{t, b};
  }
  return std::nullopt;
}

std::optional<SurfacePoint> RoadMesh::locate(double x, double y) const {
  if (lattice.empty()) return locate_brute_force(x, y);
  const Lattice& L = lattice;
  const Eigen::Vector2d p(x, y);
  const int row = static_cast<int>(std::floor((y - L.origin.y()) / L.pitch()));
  for (int r = row - 1; r <= row; ++r) {
    if (r < 0 || r + 1 >= L.rows) continue;
    const int c0 = static_cast<int>(std::floor((x - L.origin.x() - L.row_offset(r)) / L.edge));
    for (int c = c0 - 1; c <= c0 + 1; ++c) {
      // Row r + 1 is shifted by +edge/2 relative to an even row, -edge/2 relative to an odd one.
      const int up = (r & 1) ? c + 1 : c;
      const Eigen::Vector3i tris[2] = {
          {L.vertex_at(r, c), L.vertex_at(r, c + 1), L.vertex_at(r + 1, up)},
          {L.vertex_at(r + 1, up - 1), L.vertex_at(r + 1, up), L.vertex_at(r, c)}};
      for (const auto& t : tris) {
        if (t.minCoeff() < 0) continue;
        const Eigen::Vector3d b = barycentric(p, xy.col(t[0]), xy.col(t[1]), xy.col(t[2]));
        if (inside(b)) return SurfacePoint{t, b};
      }
    }
  }
  return std::nullopt;
}

std::optional<double> RoadMesh::interpolate(const Eigen::VectorXd& field, double x,
                                            double y) const {
  const auto hit = locate(x, y);
  if (!hit) return std::nullopt;
  const auto& v = hit->vertices;
  return hit->barycentric.dot(Eigen::Vector3d(field[v[0]], field[v[1]], field[v[2]]));
}

double RoadMesh::area() const {
  double total = 0.0;
  for (const auto& f : faces) {
    const Eigen::Vector2d a = xy.col(f[1]) - xy.col(f[0]);
    const Eigen::Vector2d b = xy.col(f[2]) - xy.col(f[0]);
    total += 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
  }
  return total;
}

RoadMesh make_mesh(Eigen::Matrix2Xd xy, Eigen::VectorXd z0, std::vector<Eigen::Vector3i> faces,
                   double edge_length) {
  if (z0.size() != xy.cols()) throw InvalidInput("make_mesh: z0 size differs from vertex count");
  RoadMesh mesh;
  mesh.xy = std::move(xy);
  mesh.z0 = std::move(z0);
  mesh.arc = Eigen::VectorXd::Zero(mesh.xy.cols());
  mesh.faces = std::move(faces);
  mesh.edge_length = edge_length;
  for (const auto& f : mesh.faces) {
    if (f.minCoeff() < 0 || f.maxCoeff() >= mesh.vertex_count()) {
      throw InvalidInput("make_mesh: face references an invalid vertex");
    }
  }
  for (Eigen::Index i = 0; i < mesh.xy.cols(); ++i) mesh.bbox.extend(mesh.xy.col(i));
  mesh.build_adjacency_from_faces();
  return mesh;
}

double interpolate_elevation(const Trajectory& traj, double x, double y) {
  if (traj.empty()) throw InvalidInput("interpolate_elevation: empty trajectory");
  Eigen::Matrix2Xd xy(2, traj.size());
  Eigen::VectorXd z(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    xy.col(i) = traj[i].position.head<2>();
    z[i] = traj[i].position.z();
  }
  return idw(detail::PointIndex2d(xy), z, x, y);
}

RoadMesh build_mesh_from_trajectory(const Trajectory& traj, double edge_length,
                                    double half_width) {
  if (traj.size() < 2) throw InvalidInput("mesh construction needs at least two poses");
  if (!(edge_length > 0.0)) throw InvalidInput("edge_length must be positive");
  if (!(half_width > 0.0)) throw InvalidInput("half_width must be positive");
  const double length = traj.length();
  if (!(length > 0.0)) throw InvalidInput("trajectory does not move in the (x, y) plane");

  // Trajectory samples at a quarter edge spacing along the arc, the last one
  // exactly at the end of the route.
  const double spacing = 0.25 * edge_length;
  const auto n_samples = static_cast<Eigen::Index>(std::ceil(length / spacing)) + 1;
  Eigen::Matrix2Xd sample_xy(2, n_samples);
  Eigen::VectorXd sample_z(n_samples);
  Eigen::VectorXd sample_arc(n_samples);
  Eigen::Matrix2Xd sample_dir(2, n_samples);
  for (Eigen::Index k = 0; k < n_samples; ++k) {
    const double s = std::min(static_cast<double>(k) * spacing, length);
    const Eigen::Vector3d p = traj.position_at(s);
    sample_xy.col(k) = p.head<2>();
    sample_z[k] = p.z();
    sample_arc[k] = s;
    sample_dir.col(k) = traj.heading_at(s);
  }
  const detail::PointIndex2d samples(sample_xy);

  Eigen::AlignedBox2d region;
  for (Eigen::Index k = 0; k < n_samples; ++k) region.extend(sample_xy.col(k));
  const Eigen::Vector2d pad = Eigen::Vector2d::Constant(half_width + edge_length);

  RoadMesh mesh;
  mesh.edge_length = edge_length;
  Lattice& L = mesh.lattice;
  L.edge = edge_length;
  L.origin = region.min() - pad;
  const Eigen::Vector2d extent = region.max() + pad - L.origin;
  L.cols = static_cast<int>(std::ceil(extent.x() / edge_length)) + 1;
  L.rows = static_cast<int>(std::ceil(extent.y() / L.pitch())) + 1;
  const std::size_t n_nodes = static_cast<std::size_t>(L.rows) * L.cols;

  // Nodes within half_width of the trajectory, without caps past either end.
  std::vector<char> node_in(n_nodes, 0);
  std::vector<int> node_sample(n_nodes, -1);
  constexpr double tol = 1e-9;
  for (int r = 0; r < L.rows; ++r) {
    for (int c = 0; c < L.cols; ++c) {
      const Eigen::Vector2d p = L.node_position(r, c);
      const auto nearest = samples.nearest(p.x(), p.y(), 1);
      const auto [dist, k] = nearest.front();
      if (dist > half_width + tol) continue;
      const double along = (p - sample_xy.col(k)).dot(sample_dir.col(k));
      const bool at_start = sample_arc[k] <= tol;
      const bool at_end = sample_arc[k] >= length - 1e-6 * edge_length;
      if ((at_start && along < -tol) || (at_end && along > tol)) continue;
      const std::size_t id = static_cast<std::size_t>(r) * L.cols + c;
      node_in[id] = 1;
      node_sample[id] = k;
    }
  }

  auto node_ok = [&](int r, int c) {
    return r >= 0 && r < L.rows && c >= 0 && c < L.cols &&
           node_in[static_cast<std::size_t>(r) * L.cols + c];
  };
  std::vector<std::array<std::pair<int, int>, 3>> node_faces;
  for (int r = 0; r + 1 < L.rows; ++r) {
    for (int c = 0; c < L.cols; ++c) {
      const int up = (r & 1) ? c + 1 : c;
      const std::array<std::pair<int, int>, 3> tris[2] = {
          {{{r, c}, {r, c + 1}, {r + 1, up}}},
          {{{r + 1, up - 1}, {r + 1, up}, {r, c}}}};
      for (const auto& t : tris) {
        if (node_ok(t[0].first, t[0].second) && node_ok(t[1].first, t[1].second) &&
            node_ok(t[2].first, t[2].second)) {
          node_faces.push_back(t);
        }
      }
    }
  }

  // Keep only nodes that belong to at least one face, numbered in row-major order.
  std::vector<char> used(n_nodes, 0);
  for (const auto& t : node_faces) {
    for (const auto& [r, c] : t) used[static_cast<std::size_t>(r) * L.cols + c] = 1;
  }
  L.node_vertex.assign(n_nodes, -1);
  int n_vertices = 0;
  for (std::size_t id = 0; id < n_nodes; ++id) {
    if (used[id]) L.node_vertex[id] = n_vertices++;
  }

  mesh.xy.resize(2, n_vertices);
  mesh.z0.resize(n_vertices);
  mesh.arc.resize(n_vertices);
  for (std::size_t id = 0; id < n_nodes; ++id) {
    const int v = L.node_vertex[id];
    if (v < 0) continue;
    const int r = static_cast<int>(id / L.cols);
    const int c = static_cast<int>(id % L.cols);
    const Eigen::Vector2d p = L.node_position(r, c);
    mesh.xy.col(v) = p;
    mesh.z0[v] = idw(samples, sample_z, p.x(), p.y());
    mesh.arc[v] = sample_arc[node_sample[id]];
    mesh.bbox.extend(p);
  }
  mesh.faces.reserve(node_faces.size());
  for (const auto& t : node_faces) {
    mesh.faces.emplace_back(L.vertex_at(t[0].first, t[0].second),
                            L.vertex_at(t[1].first, t[1].second),
                            L.vertex_at(t[2].first, t[2].second));
  }
  mesh.build_adjacency_from_faces();
  return mesh;
}

std::span<const int> vertex_neighbors(const RoadMesh& mesh, int i) {
  if (i < 0 || i >= mesh.vertex_count()) {
    throw InvalidInput("vertex_neighbors: index " + std::to_string(i) + " out of range");
  }
  return mesh.neighbors(i);
}

}  // namespace roadmesh
