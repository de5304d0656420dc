#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "roadmesh/common.hpp"
#include "roadmesh/renderer.hpp"
#include "roadmesh/scene_model.hpp"

namespace roadmesh {

struct LossWeights {
  double rgb = 1.0;
  double sem = 1.0;
  double z = 1.0;
  double smooth = 1.0;

  void validate() const;
};

/// Mean absolute RGB error over masked, covered pixels, with its gradient
/// w.r.t. the rendered image.
struct RgbLoss {
  double value = 0.0;
  std::size_t pixels = 0;  // |M and coverage|
  bool empty_mask = false;
  RgbImage gradient;
};

RgbLoss rgb_loss(const RenderedView& view, const RgbImage& frame_rgb, const MaskImage& mask);

/// Sparse per-vertex gradient block: column k belongs to vertices[k].
struct VertexGradients {
  std::vector<int> vertices;
  Eigen::MatrixXd values;

  void scatter_add(Eigen::MatrixXd& dense, double scale = 1.0) const;
};

struct SemLoss {
  double value = 0.0;
  std::size_t pixels = 0;
  bool empty_mask = false;
  VertexGradients gradient;  // d loss / d sem_logits of the winning vertices
};

/// Mean softmax cross-entropy of the winning vertices' logits against the
/// frame labels over masked, covered pixels.
SemLoss sem_loss(const RenderedView& view, const LabelImage& frame_labels, const MaskImage& mask,
                 const Eigen::MatrixXd& sem_logits);

/// Per-vertex elevation targets: mean z of the Lidar points within `radius`
/// in the (x, y) plane.
struct ElevationTargets {
  Eigen::VectorXd z_gt;
  std::vector<char> supervised;
  double radius = 0.0;

  std::size_t supervised_count() const;
};

ElevationTargets elevation_targets(const RoadMesh& mesh, const LidarCloud& lidar, double radius);

/// Loss over per-vertex elevations with a dense gradient.
struct ElevationLoss {
  double value = 0.0;
  std::size_t count = 0;
  bool empty = false;
  Eigen::VectorXd gradient;
};

/// Mean |z_f - z_gt| over supervised vertices (restricted to `vertices` when given).
ElevationLoss elev_loss(const ElevationTargets& targets, const Eigen::VectorXd& z_f,
                        std::span<const int> vertices = {});
ElevationLoss elev_loss(const RoadMesh& mesh, const Eigen::VectorXd& z_f, const LidarCloud& lidar,
                        double neighborhood_radius);

/// sum_i sum_{j in N(i)} (z_i - z_j)^2, both endpoints of each edge counted.
/// With `vertices`, only edges between listed vertices contribute.
ElevationLoss smooth_loss(const RoadMesh& mesh, const Eigen::VectorXd& z_f,
                          std::span<const int> vertices = {});

struct LossTerms {
  double rgb = 0.0;
  double sem = 0.0;
  double z = 0.0;
  double smooth = 0.0;
};

struct LossReport {
  LossTerms terms;
  double total = 0.0;
  std::size_t masked_pixels = 0;
  std::size_t supervised_vertices = 0;
};

LossReport total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace roadmesh
