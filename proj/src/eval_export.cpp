#include "roadmesh/eval_export.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "roadmesh/io.hpp"
#include "roadmesh/renderer.hpp"
#include "roadmesh/trainer.hpp"

namespace roadmesh {

void SquaredError::add(const RgbImage& image, const RgbImage& reference, const MaskImage& mask) {
  if (!image.same_shape(reference.width, reference.height) || !image.same_shape(mask.width, mask.height) ||
      image.channels != reference.channels) {
    throw InvalidInput("psnr: image shapes differ");
  }
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < image.channels; ++c) {
        const double d = image(x, y, c) - reference(x, y, c);
        sum += d * d;
      }
      samples += static_cast<std::size_t>(image.channels);
    }
  }
}

double SquaredError::psnr() const {
  if (samples == 0) throw InvalidInput("psnr: empty mask");
  if (sum == 0.0) return kPsnrCap;
  return std::min(10.0 * std::log10(static_cast<double>(samples) / sum), kPsnrCap);
}

double psnr(const RgbImage& image, const RgbImage& reference, const MaskImage& mask) {
  SquaredError e;
  e.add(image, reference, mask);
  return e.psnr();
}

IouAccumulator::IouAccumulator(int num_classes)
    : num_classes_(num_classes),
      intersection_(static_cast<std::size_t>(num_classes), 0),
      union_(static_cast<std::size_t>(num_classes), 0) {
  if (num_classes < 1) throw InvalidInput("miou: need at least one class");
}

void IouAccumulator::add(const LabelImage& pred, const LabelImage& gt, const MaskImage& mask) {
  if (!pred.same_shape(gt.width, gt.height) || !pred.same_shape(mask.width, mask.height)) {
    throw InvalidInput("miou: image shapes differ");
  }
  for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
    if (!mask.pixels[i]) continue;
    const int p = pred.pixels[i];
    const int g = gt.pixels[i];
    if (p >= num_classes_ || g >= num_classes_) throw InvalidInput("miou: label out of range");
    ++pixels_;
    if (p == g) {
      ++intersection_[static_cast<std::size_t>(p)];
      ++union_[static_cast<std::size_t>(p)];
    } else {
      ++union_[static_cast<std::size_t>(p)];
      ++union_[static_cast<std::size_t>(g)];
    }
  }
}

double IouAccumulator::miou() const {
  if (pixels_ == 0) throw InvalidInput("miou: empty mask");
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < num_classes_; ++k) {
    const auto u = union_[static_cast<std::size_t>(k)];
    if (u == 0) continue;
    sum += static_cast<double>(intersection_[static_cast<std::size_t>(k)]) / static_cast<double>(u);
    ++present;
  }
  return sum / present;
}

std::optional<double> IouAccumulator::class_iou(int cls) const {
  if (cls < 0 || cls >= num_classes_) throw InvalidInput("miou: class out of range");
  const auto u = union_[static_cast<std::size_t>(cls)];
  if (u == 0) return std::nullopt;
  return static_cast<double>(intersection_[static_cast<std::size_t>(cls)]) / static_cast<double>(u);
}

double miou(const LabelImage& pred, const LabelImage& gt, const MaskImage& mask, int num_classes) {
  IouAccumulator acc(num_classes);
  acc.add(pred, gt, mask);
  return acc.miou();
}

ElevationError elevation_error(const LidarCloud& lidar, const RoadMesh& mesh,
                               const Eigen::VectorXd& z_f) {
  if (z_f.size() != mesh.vertex_count()) throw InvalidInput("elev_error: z size mismatch");
  ElevationError e;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lidar.size(); ++i) {
    const auto z = mesh.interpolate(z_f, lidar.points(0, i), lidar.points(1, i));
    if (!z) continue;
    sum += std::abs(*z - lidar.points(2, i));
    ++e.points;
  }
  if (e.points == 0) throw InvalidInput("elev_error: no Lidar point over the mesh footprint");
  e.cm = 100.0 * sum / static_cast<double>(e.points);
  return e;
}

double MetricsReport::mean_psnr() const {
  if (psnr.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : psnr) s += p.db;
  return s / static_cast<double>(psnr.size());
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  char buf[128];
  out << "metric,value,count\n";
  for (const auto& p : psnr) {
    std::snprintf(buf, sizeof buf, "psnr_cam%d,%.6f,%zu\n", p.camera_id, p.db, p.samples);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "miou,%.6f,%zu\n", miou, miou_pixels);
  out << buf;
  std::snprintf(buf, sizeof buf, "elev_error_cm,%.6f,%zu\n", elev_error_cm, elev_points);
  out << buf;
  return out.str();
}

std::string MetricsReport::summary() const {
  std::ostringstream out;
  char buf[160];
  for (const auto& p : psnr) {
    std::snprintf(buf, sizeof buf, "PSNR camera %d: %.2f dB over %zu samples\n", p.camera_id,
                  p.db, p.samples);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mIoU: %.4f over %zu pixels\n", miou, miou_pixels);
  out << buf;
  std::snprintf(buf, sizeof buf, "Elev-error: %.3f cm over %zu points\n", elev_error_cm, elev_points);
  out << buf;
  return out.str();
}

namespace {

MaskImage and_mask(const MaskImage& a, const MaskImage& b) {
  MaskImage m(a.width, a.height, 1, 0);
  for (std::size_t i = 0; i < m.pixels.size(); ++i) m.pixels[i] = (a.pixels[i] && b.pixels[i]) ? 1 : 0;
  return m;
}

bool any(const MaskImage& m) {
  for (auto v : m.pixels) {
    if (v) return true;
  }
  return false;
}

}  // namespace

MetricsReport evaluate(const SceneData& scene, const RoadMesh& mesh, const ModelParams& params) {
  MetricsReport report;
  const Eigen::VectorXd z = model_elevations(mesh, params);
  std::map<int, Eigen::MatrixXd> colors;
  std::map<int, SquaredError> errors;
  for (int id : scene.camera_ids()) colors[id] = model_colors(params, id);
  IouAccumulator iou;
  for (const auto& frame : scene.frames) {
    const Camera& cam = scene.camera(frame.camera_id);
    const RenderedView view =
        render_view(mesh, z, colors.at(frame.camera_id), params.sem_logits, cam, frame.camera_from_world());
    const MaskImage mask = and_mask(build_road_mask(frame.sem_labels), view.coverage);
    if (!any(mask)) continue;
    errors[frame.camera_id].add(view.rgb, frame.rgb, mask);
    iou.add(view.sem, frame.sem_labels, mask);
  }
  for (const auto& [id, e] : errors) report.psnr.push_back({id, e.psnr(), e.samples});
  if (iou.pixels() > 0) {
    report.miou = iou.miou();
    report.miou_pixels = iou.pixels();
  }
  const ElevationError ee = elevation_error(scene.lidar, mesh, z);
  report.elev_error_cm = ee.cm;
  report.elev_points = ee.points;
  return report;
}

Eigen::Vector3d heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  static const Eigen::Vector3d stops[] = {{0.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}};
  const double s = t * 3.0;
  const int k = std::min(2, static_cast<int>(s));
  return stops[k] + (s - k) * (stops[k + 1] - stops[k]);
}

void export_bev_maps(const std::filesystem::path& dir, const RoadMesh& mesh,
                     const Eigen::VectorXd& z_f, const std::vector<int>& camera_ids,
                     const std::vector<Eigen::MatrixXd>& colors, const Eigen::MatrixXd& sem_logits) {
  if (camera_ids.size() != colors.size()) throw InvalidInput("export_bev_maps: one color set per camera");
  if (mesh.vertex_count() == 0) throw InvalidInput("export_bev_maps: empty mesh");
  const double res = mesh.edge_length;
  const Eigen::Vector2d lo = mesh.bbox.min();
  const Eigen::Vector2d ext = mesh.bbox.sizes();
  const int w = static_cast<int>(std::floor(ext.x() / res)) + 1;
  const int h = static_cast<int>(std::floor(ext.y() / res)) + 1;

  std::vector<RgbImage> rgb(colors.size(), RgbImage(w, h, 3, 0.0));
  LabelImage sem(w, h, 1, kNoLabel);
  Image<double> elev(w, h, 1, 0.0);
  MaskImage inside(w, h, 1, 0);
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -zmin;
  for (int row = 0; row < h; ++row) {
    const double y = lo.y() + (h - 1 - row) * res;
    for (int col = 0; col < w; ++col) {
      const double x = lo.x() + col * res;
      const auto sp = mesh.locate(x, y);
      if (!sp) continue;
      inside(col, row) = 1;
      int best = 0;
      double zv = 0.0;
      for (int k = 0; k < 3; ++k) {
        zv += sp->barycentric[k] * z_f[sp->vertices[k]];
        if (sp->barycentric[k] > sp->barycentric[best]) best = k;
      }
      elev(col, row) = zv;
      zmin = std::min(zmin, zv);
      zmax = std::max(zmax, zv);
      sem(col, row) = static_cast<std::uint8_t>(argmax_class(sem_logits.col(sp->vertices[best])));
      for (std::size_t c = 0; c < colors.size(); ++c) {
        for (int k = 0; k < 3; ++k) {
          for (int ch = 0; ch < 3; ++ch) rgb[c](col, row, ch) += sp->barycentric[k] * colors[c](ch, sp->vertices[k]);
        }
      }
    }
  }
  for (std::size_t c = 0; c < colors.size(); ++c) {
    write_png_rgb(dir / ("rgb_cam" + std::to_string(camera_ids[c]) + ".png"), rgb[c]);
  }
  write_png_indexed(dir / "semantic.png", sem, semantic_palette());
  RgbImage heat(w, h, 3, 0.0);
  const double range = zmax - zmin;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!inside(col, row)) continue;
      const double t = range > 1e-12 ? (elev(col, row) - zmin) / range : 0.5;
      const Eigen::Vector3d c = heat_color(t);
      for (int ch = 0; ch < 3; ++ch) heat(col, row, ch) = c[ch];
    }
  }
  write_png_rgb(dir / "elevation.png", heat);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "z_min %.17g\nz_max %.17g\nresolution %.17g\norigin_x %.17g\norigin_y %.17g\n"
                "width %d\nheight %d\ncolormap blue-cyan-yellow-red\n",
                std::isfinite(zmin) ? zmin : 0.0, std::isfinite(zmax) ? zmax : 0.0, res, lo.x(),
                lo.y() + (h - 1) * res, w, h);
  write_text_file(dir / "elevation.txt", buf);
}

void export_renders(const std::filesystem::path& dir, const SceneData& scene, const RoadMesh& mesh,
                    const ModelParams& params) {
  const Eigen::VectorXd z = model_elevations(mesh, params);
  std::map<int, Eigen::MatrixXd> colors;
  for (int id : scene.camera_ids()) colors[id] = model_colors(params, id);
  std::map<int, int> counter;
  for (const auto& frame : scene.frames) {
    const int k = counter[frame.camera_id]++;
    const RenderedView view = render_view(mesh, z, colors.at(frame.camera_id), params.sem_logits,
                                          scene.camera(frame.camera_id), frame.camera_from_world());
    char name[64];
    std::snprintf(name, sizeof name, "%d_%05d", frame.camera_id, k);
    write_png_rgb(dir / (std::string(name) + ".png"), view.rgb);
    write_png_indexed(dir / (std::string(name) + "_sem.png"), view.sem, semantic_palette());
  }
}

void export_mesh(const std::filesystem::path& dir, const RoadMesh& mesh, const ModelParams& params) {
  const Eigen::VectorXd z = model_elevations(mesh, params);
  const Eigen::MatrixXd rgb = model_colors(params, params.camera_ids.front());
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(mesh.vertex_count()));
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(argmax_class(params.sem_logits.col(i)));
  }
  write_mesh_ply(dir / "mesh.ply", mesh, z, rgb, labels);
  write_mesh_obj(dir / "mesh.obj", mesh, z);
}

}  // namespace roadmesh
