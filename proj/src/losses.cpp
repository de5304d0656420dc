#include "roadmesh/losses.hpp"

#include <cmath>

#include "roadmesh/neural_core.hpp"
#include "spatial_index.hpp"

namespace roadmesh {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void check_shape(const RenderedView& view, int w, int h, const char* what) {
  if (!view.rgb.same_shape(w, h)) {
    throw InvalidInput(std::string(what) + ": image shape differs from the rendered view");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!(rgb >= 0.0 && sem >= 0.0 && z >= 0.0 && smooth >= 0.0)) {
    throw InvalidInput("loss weights must be nonnegative");
  }
}

RgbLoss rgb_loss(const RenderedView& view, const RgbImage& frame_rgb, const MaskImage& mask) {
  check_shape(view, frame_rgb.width, frame_rgb.height, "rgb_loss");
  check_shape(view, mask.width, mask.height, "rgb_loss mask");
  RgbLoss out;
  out.gradient = RgbImage(view.width(), view.height(), 3, 0.0);
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      if (mask(x, y) && view.coverage(x, y)) ++out.pixels;
    }
  }
  if (out.pixels == 0) {
    out.empty_mask = true;
    return out;
  }
  const double norm = 1.0 / (3.0 * static_cast<double>(out.pixels));
  double sum = 0.0;
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      if (!(mask(x, y) && view.coverage(x, y))) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = view.rgb(x, y, c) - frame_rgb(x, y, c);
        sum += std::abs(d);
        out.gradient(x, y, c) = sign(d) * norm;
      }
    }
  }
  out.value = sum * norm;
  return out;
}

void VertexGradients::scatter_add(Eigen::MatrixXd& dense, double scale) const {
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    dense.col(vertices[k]) += scale * values.col(static_cast<Eigen::Index>(k));
  }
}

SemLoss sem_loss(const RenderedView& view, const LabelImage& frame_labels, const MaskImage& mask,
                 const Eigen::MatrixXd& sem_logits) {
  check_shape(view, frame_labels.width, frame_labels.height, "sem_loss");
  check_shape(view, mask.width, mask.height, "sem_loss mask");
  SemLoss out;
  std::vector<std::pair<int, int>> hits;  // (vertex, label)
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      if (!(mask(x, y) && view.coverage(x, y))) continue;
      const int label = frame_labels(x, y);
      if (label >= sem_logits.rows()) continue;  // not a surface class; mask should exclude it
      hits.emplace_back(view.vertex_of_pixel(x, y), label);
    }
  }
  out.pixels = hits.size();
  if (hits.empty()) {
    out.empty_mask = true;
    return out;
  }
  const double norm = 1.0 / static_cast<double>(hits.size());
  out.gradient.vertices.reserve(hits.size());
  out.gradient.values.resize(sem_logits.rows(), static_cast<Eigen::Index>(hits.size()));
  double sum = 0.0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    const auto [v, label] = hits[k];
    const CrossEntropy ce = softmax_cross_entropy(sem_logits.col(v), label);
    sum += ce.loss;
    out.gradient.vertices.push_back(v);
    out.gradient.values.col(static_cast<Eigen::Index>(k)) = ce.gradient * norm;
  }
  out.value = sum * norm;
  return out;
}

std::size_t ElevationTargets::supervised_count() const {
  std::size_t n = 0;
  for (char s : supervised) n += s ? 1 : 0;
  return n;
}

ElevationTargets elevation_targets(const RoadMesh& mesh, const LidarCloud& lidar, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("neighborhood radius must be positive");
  const Eigen::Index n = mesh.vertex_count();
  ElevationTargets t;
  t.radius = radius;
  t.z_gt = Eigen::VectorXd::Zero(n);
  t.supervised.assign(static_cast<std::size_t>(n), 0);
  if (lidar.size() == 0) return t;
  const Eigen::Matrix2Xd lidar_xy = lidar.points.topRows<2>();
  const detail::PointIndex2d index(lidar_xy);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto hits = index.within(mesh.xy(0, i), mesh.xy(1, i), radius);
    if (hits.empty()) continue;
    // Sum in index order so the mean does not depend on the order of the cloud.
    std::vector<int> ids;
    ids.reserve(hits.size());
    for (const auto& h : hits) ids.push_back(h.second);
    std::sort(ids.begin(), ids.end());
    double sum = 0.0;
    for (int id : ids) sum += lidar.points(2, id);
    t.z_gt[i] = sum / static_cast<double>(ids.size());
    t.supervised[static_cast<std::size_t>(i)] = 1;
  }
  return t;
}

ElevationLoss elev_loss(const ElevationTargets& targets, const Eigen::VectorXd& z_f,
                        std::span<const int> vertices) {
  if (z_f.size() != targets.z_gt.size()) throw InvalidInput("elev_loss: size mismatch");
  ElevationLoss out;
  out.gradient = Eigen::VectorXd::Zero(z_f.size());
  std::vector<int> used;
  auto consider = [&](int i) {
    if (targets.supervised[static_cast<std::size_t>(i)]) used.push_back(i);
  };
  if (vertices.empty()) {
    for (Eigen::Index i = 0; i < z_f.size(); ++i) consider(static_cast<int>(i));
  } else {
    for (int i : vertices) consider(i);
  }
  out.count = used.size();
  if (used.empty()) {
    out.empty = true;
    return out;
  }
  const double norm = 1.0 / static_cast<double>(used.size());
  double sum = 0.0;
  for (int i : used) {
    const double d = z_f[i] - targets.z_gt[i];
    sum += std::abs(d);
    out.gradient[i] = sign(d) * norm;
  }
  out.value = sum * norm;
  return out;
}

ElevationLoss elev_loss(const RoadMesh& mesh, const Eigen::VectorXd& z_f, const LidarCloud& lidar,
                        double neighborhood_radius) {
  return elev_loss(elevation_targets(mesh, lidar, neighborhood_radius), z_f);
}

ElevationLoss smooth_loss(const RoadMesh& mesh, const Eigen::VectorXd& z_f,
                          std::span<const int> vertices) {
  const Eigen::Index n = mesh.vertex_count();
  if (z_f.size() != n) throw InvalidInput("smooth_loss: size mismatch");
  ElevationLoss out;
  out.gradient = Eigen::VectorXd::Zero(n);
  double sum = 0.0;
  auto accumulate = [&](int i, auto&& member) {
    for (int j : mesh.neighbors(i)) {
      if (!member(j)) continue;
      const double d = z_f[i] - z_f[j];
      sum += d * d;
      out.gradient[i] += 4.0 * d;  // (i, j) and (j, i) both contribute 2 d
    }
  };
  if (vertices.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) accumulate(static_cast<int>(i), [](int) { return true; });
    out.count = static_cast<std::size_t>(n);
  } else {
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (int i : vertices) in[static_cast<std::size_t>(i)] = 1;
    auto member = [&in](int j) { return in[static_cast<std::size_t>(j)] != 0; };
    for (int i : vertices) accumulate(i, member);
    out.count = vertices.size();
  }
  out.value = sum;
  return out;
}

LossReport total_loss(const LossTerms& terms, const LossWeights& weights) {
  LossReport r;
  r.terms = terms;
  r.total = weights.rgb * terms.rgb + weights.sem * terms.sem + weights.z * terms.z +
            weights.smooth * terms.smooth;
  return r;
}

}  // namespace roadmesh
