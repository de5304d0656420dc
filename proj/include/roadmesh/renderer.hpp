#pragma once

#include <optional>
#include <span>

#include <Eigen/Geometry>

#include "roadmesh/common.hpp"
#include "roadmesh/scene_model.hpp"

namespace roadmesh {

inline constexpr double kNearPlane = 0.1;
inline constexpr std::uint8_t kNoLabel = 255;

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  int col = 0;  // round-half-up of u
  int row = 0;  // round-half-up of v
};

/// Pinhole projection K * T * X. Returns nothing when the point is closer than
/// the near plane or lands outside the image.
std::optional<PixelProjection> project(const Camera& camera,
                                       const Eigen::Isometry3d& camera_from_world,
                                       const Eigen::Vector3d& point);

/// Per-pixel winner of a z-buffered vertex splat.
struct SplatBuffer {
  Image<int> vertex_of_pixel;  // -1 where uncovered
  Image<double> depth;         // 0 where uncovered
  std::size_t covered = 0;
};

/// Splats the listed vertices at (xy, z); the minimum-depth vertex wins each
/// pixel, ties going to the vertex listed first.
SplatBuffer splat_vertices(const Camera& camera, const Eigen::Isometry3d& camera_from_world,
                           const Eigen::Matrix2Xd& xy, const Eigen::VectorXd& z,
                           std::span<const int> vertices);

struct RenderedView {
  RgbImage rgb;                // 3 channels, 0 where uncovered
  LabelImage sem;              // kNoLabel where uncovered
  MaskImage coverage;          // 1 where a vertex landed
  Image<int> vertex_of_pixel;  // -1 where uncovered
  Image<double> depth;

  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
};

/// Renders per-vertex colors (3 x N) and semantics (argmax of kNumClasses x N
/// logits) of the mesh at elevations z_f. `vertices` restricts the splat to a
/// subset (all vertices when empty).
RenderedView render_view(const RoadMesh& mesh, const Eigen::VectorXd& z_f,
                         const Eigen::MatrixXd& vertex_rgb, const Eigen::MatrixXd& sem_logits,
                         const Camera& camera, const Eigen::Isometry3d& camera_from_world,
                         std::span<const int> vertices = {});

/// Shades an existing splat.
RenderedView shade_view(const SplatBuffer& splat, const Eigen::MatrixXd& vertex_rgb,
                        const Eigen::MatrixXd& sem_logits);

/// True exactly on road-surface labels (lane marking, curb, manhole, road).
MaskImage build_road_mask(const LabelImage& labels);

/// argmax over a logit column; ties resolve to the lowest class index.
int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& logits);

}  // namespace roadmesh
