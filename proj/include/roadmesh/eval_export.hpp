#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roadmesh/common.hpp"
#include "roadmesh/neural_core.hpp"
#include "roadmesh/scene_model.hpp"

namespace roadmesh {

inline constexpr double kPsnrCap = 99.0;

/// Sum of squared per-channel differences over masked pixels.
struct SquaredError {
  double sum = 0.0;
  std::size_t samples = 0;  // pixels x channels

  void add(const RgbImage& image, const RgbImage& reference, const MaskImage& mask);
  /// Capped at kPsnrCap (also for zero error); throws when nothing was accumulated.
  double psnr() const;
};

/// 10 log10(1 / MSE) over masked pixels and channels, capped at kPsnrCap.
double psnr(const RgbImage& image, const RgbImage& reference, const MaskImage& mask);

/// Per-class intersection and union counts accumulated over images.
class IouAccumulator {
 public:
  explicit IouAccumulator(int num_classes = kNumClasses);

  void add(const LabelImage& pred, const LabelImage& gt, const MaskImage& mask);
  std::size_t pixels() const { return pixels_; }
  /// Mean IoU over classes present in prediction or reference.
  double miou() const;
  /// IoU of one class; empty when the class appears in neither image.
  std::optional<double> class_iou(int cls) const;

 private:
  int num_classes_;
  std::vector<std::size_t> intersection_;
  std::vector<std::size_t> union_;
  std::size_t pixels_ = 0;
};

double miou(const LabelImage& pred, const LabelImage& gt, const MaskImage& mask,
            int num_classes = kNumClasses);

struct ElevationError {
  double cm = 0.0;
  std::size_t points = 0;
};

/// Mean vertical distance (cm) from the Lidar points over the mesh footprint
/// to the piecewise-planar surface z_f.
ElevationError elevation_error(const LidarCloud& lidar, const RoadMesh& mesh,
                               const Eigen::VectorXd& z_f);
inline double elev_error(const LidarCloud& lidar, const RoadMesh& mesh, const Eigen::VectorXd& z_f) {
  return elevation_error(lidar, mesh, z_f).cm;
}

struct CameraPsnr {
  int camera_id = 0;
  double db = 0.0;
  std::size_t samples = 0;
};

struct MetricsReport {
  std::vector<CameraPsnr> psnr;
  double miou = 0.0;
  std::size_t miou_pixels = 0;
  double elev_error_cm = 0.0;
  std::size_t elev_points = 0;

  /// Mean of the per-camera values.
  double mean_psnr() const;
  /// `metric,value,count` rows: psnr_cam<id>, miou, elev_error_cm.
  std::string to_csv() const;
  std::string summary() const;
};

/// Renders every frame from the model and scores it against the frame
/// (masked by the road mask and coverage), plus Elev-error against the Lidar.
MetricsReport evaluate(const SceneData& scene, const RoadMesh& mesh, const ModelParams& params);

/// Top-down maps at edge_length resolution, north up: rgb_cam<id>.png per
/// camera, semantic.png (paletted), elevation.png and elevation.txt.
void export_bev_maps(const std::filesystem::path& dir, const RoadMesh& mesh,
                     const Eigen::VectorXd& z_f, const std::vector<int>& camera_ids,
                     const std::vector<Eigen::MatrixXd>& colors, const Eigen::MatrixXd& sem_logits);

/// Rendered RGB and semantic views of every frame: <id>_<k>.png and <id>_<k>_sem.png.
void export_renders(const std::filesystem::path& dir, const SceneData& scene, const RoadMesh& mesh,
                    const ModelParams& params);

/// mesh.ply (colors from the first camera) and mesh.obj.
void export_mesh(const std::filesystem::path& dir, const RoadMesh& mesh, const ModelParams& params);

/// Heat-map color of t in [0, 1] (blue -> cyan -> yellow -> red).
Eigen::Vector3d heat_color(double t);

}  // namespace roadmesh
