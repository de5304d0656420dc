#include "roadmesh/renderer.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace roadmesh {

std::optional<PixelProjection> project(const Camera& camera,
                                       const Eigen::Isometry3d& camera_from_world,
                                       const Eigen::Vector3d& point) {
  const Eigen::Vector3d pc = camera_from_world * point;
  if (!(pc.z() > kNearPlane)) return std::nullopt;
  const Eigen::Vector3d uvw = camera.K * pc;
  PixelProjection p;
  p.u = uvw.x() / uvw.z();
  p.v = uvw.y() / uvw.z();
  p.depth = pc.z();
  const double col = std::floor(p.u + 0.5);
  const double row = std::floor(p.v + 0.5);
  if (col < 0.0 || row < 0.0 || col >= camera.width || row >= camera.height) return std::nullopt;
  p.col = static_cast<int>(col);
  p.row = static_cast<int>(row);
  return p;
}

SplatBuffer splat_vertices(const Camera& camera, const Eigen::Isometry3d& camera_from_world,
                           const Eigen::Matrix2Xd& xy, const Eigen::VectorXd& z,
                           std::span<const int> vertices) {
  SplatBuffer out;
  out.vertex_of_pixel = Image<int>(camera.width, camera.height, 1, -1);
  out.depth = Image<double>(camera.width, camera.height, 1, 0.0);
  auto visit = [&](int v) {
    const auto p = project(camera, camera_from_world, Eigen::Vector3d(xy(0, v), xy(1, v), z[v]));
    if (!p) return;
    int& winner = out.vertex_of_pixel(p->col, p->row);
    double& depth = out.depth(p->col, p->row);
    if (winner < 0) {
      ++out.covered;
    } else if (!(p->depth < depth)) {
      return;
    }
    winner = v;
    depth = p->depth;
  };
  if (vertices.empty()) {
    for (Eigen::Index v = 0; v < xy.cols(); ++v) visit(static_cast<int>(v));
  } else {
    for (int v : vertices) visit(v);
  }
  return out;
}

int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<int>(best);
}

RenderedView shade_view(const SplatBuffer& splat, const Eigen::MatrixXd& vertex_rgb,
                        const Eigen::MatrixXd& sem_logits) {
  const int w = splat.vertex_of_pixel.width;
  const int h = splat.vertex_of_pixel.height;
  RenderedView view;
  view.rgb = RgbImage(w, h, 3, 0.0);
  view.sem = LabelImage(w, h, 1, kNoLabel);
  view.coverage = MaskImage(w, h, 1, 0);
  view.vertex_of_pixel = splat.vertex_of_pixel;
  view.depth = splat.depth;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int v = splat.vertex_of_pixel(x, y);
      if (v < 0) continue;
      view.coverage(x, y) = 1;
      for (int c = 0; c < 3; ++c) view.rgb(x, y, c) = vertex_rgb(c, v);
      view.sem(x, y) = static_cast<std::uint8_t>(argmax_class(sem_logits.col(v)));
    }
  }
  return view;
}

RenderedView render_view(const RoadMesh& mesh, const Eigen::VectorXd& z_f,
                         const Eigen::MatrixXd& vertex_rgb, const Eigen::MatrixXd& sem_logits,
                         const Camera& camera, const Eigen::Isometry3d& camera_from_world,
                         std::span<const int> vertices) {
  const Eigen::Index n = mesh.vertex_count();
  if (z_f.size() != n || vertex_rgb.cols() != n || sem_logits.cols() != n) {
    throw InvalidInput("render_view: attribute arrays are not aligned with the mesh vertices");
  }
  if (vertex_rgb.rows() != 3) throw InvalidInput("render_view: colors must have 3 rows");
  const SplatBuffer splat = splat_vertices(camera, camera_from_world, mesh.xy, z_f, vertices);
  return shade_view(splat, vertex_rgb, sem_logits);
}

MaskImage build_road_mask(const LabelImage& labels) {
  MaskImage mask(labels.width, labels.height, 1, 0);
  for (std::size_t i = 0; i < labels.pixels.size(); ++i) {
    mask.pixels[i] = labels.pixels[i] <= static_cast<std::uint8_t>(SemanticClass::Road) ? 1 : 0;
  }
  return mask;
}

}  // namespace roadmesh
