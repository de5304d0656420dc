#include "roadmesh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "roadmesh/renderer.hpp"

namespace roadmesh {

std::string Ablation::to_string() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(no_elevation_mlp, "no_elevation_mlp");
  add(direct_rgb, "direct_rgb");
  add(shared_mlp_embedding, "shared_mlp_embedding");
  add(no_semantics, "no_semantics");
  add(no_lidar, "no_lidar");
  return out.empty() ? "none" : out;
}

void Ablation::enable(const std::string& name) {
  if (name == "no_elevation_mlp") no_elevation_mlp = true;
  else if (name == "direct_rgb") direct_rgb = true;
  else if (name == "shared_mlp_embedding") shared_mlp_embedding = true;
  else if (name == "no_semantics") no_semantics = true;
  else if (name == "no_lidar") no_lidar = true;
  else if (name == "none" || name.empty()) return;
  else throw InvalidInput("unknown ablation '" + name + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
  if (epochs < 0) throw InvalidInput("epochs must be nonnegative");
  if (!(window_distance > 0.0)) throw InvalidInput("window_distance must be positive");
  if (ablation.direct_rgb && ablation.shared_mlp_embedding) {
    throw InvalidInput("direct_rgb and shared_mlp_embedding are mutually exclusive");
  }
  if (!(edge_length > 0.0) || !(half_width > 0.0)) {
    throw InvalidInput("edge_length and half_width must be positive");
  }
  if (!(neighborhood_radius >= 0.0)) throw InvalidInput("neighborhood_radius must be nonnegative");
  if (threads < 1) throw InvalidInput("threads must be at least 1");
  weights.validate();
  for (auto g : {ParamGroup::ElevationMlp, ParamGroup::ColorMlps, ParamGroup::SemLogits,
                 ParamGroup::ColorCodes}) {
    if (!(learning_rates.at(g) >= 0.0)) throw InvalidInput("learning rates must be nonnegative");
  }
}

ModelOptions TrainConfig::model_options() const {
  ModelOptions o;
  o.elevation_mlp = !ablation.no_elevation_mlp;
  if (ablation.direct_rgb) o.color_model = ColorModel::DirectRgb;
  else if (ablation.shared_mlp_embedding) o.color_model = ColorModel::SharedMlpEmbedding;
  return o;
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w = weights;
  if (ablation.no_semantics) w.sem = 0.0;
  if (ablation.no_lidar) w.z = 0.0;
  return w;
}

std::vector<int> sample_batch(const std::vector<Frame>& frames, int batch_size,
                              std::size_t& cursor) {
  if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
  std::vector<int> batch;
  while (cursor < frames.size() && batch.size() < static_cast<std::size_t>(batch_size)) {
    batch.push_back(static_cast<int>(cursor++));
  }
  return batch;
}

std::vector<std::vector<int>> epoch_batches(const std::vector<Frame>& frames, int batch_size,
                                            std::uint64_t seed, int epoch, bool shuffle) {
  std::vector<std::vector<int>> batches;
  std::size_t cursor = 0;
  while (cursor < frames.size()) batches.push_back(sample_batch(frames, batch_size, cursor));
  if (shuffle) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(batches.begin(), batches.end(), rng);
  }
  return batches;
}

std::vector<int> observation_window(const RoadMesh& mesh, const Trajectory& traj,
                                    const std::vector<Frame>& frames,
                                    const std::vector<int>& batch, double window_distance) {
  if (batch.empty()) throw InvalidInput("observation_window: empty batch");
  std::vector<int> poses;
  for (int f : batch) poses.push_back(frames.at(static_cast<std::size_t>(f)).traj_index);
  std::sort(poses.begin(), poses.end());
  const int center = poses[(poses.size() - 1) / 2];
  const double center_arc = traj.arc_lengths().at(static_cast<std::size_t>(center));
  std::vector<int> window;
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    if (std::abs(mesh.arc[i] - center_arc) <= window_distance) window.push_back(static_cast<int>(i));
  }
  return window;
}

ModelParams initial_params(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config) {
  return init_model_params(mesh.bbox, mesh.vertex_count(), scene.camera_ids(),
                           config.model_options(), config.seed);
}

Eigen::VectorXd model_elevations(const RoadMesh& mesh, const ModelParams& params) {
  if (!params.options.elevation_mlp) return mesh.z0;
  return predict_elevations(mesh, params.pe, params.elevation);
}

Eigen::MatrixXd model_colors(const ModelParams& params, int camera_id) {
  switch (params.options.color_model) {
    case ColorModel::PerCameraMlp:
      return decode_colors(params.color_codes, camera_id, params);
    case ColorModel::SharedMlpEmbedding:
      return decode_colors_with_embedding(params.color_codes, camera_id, params);
    case ColorModel::DirectRgb:
      params.camera_slot(camera_id);  // validates the id
      return params.vertex_rgb;
  }
  return {};
}

std::string loss_csv_header() { return "iter,L_rgb,L_sem,L_z,L_smooth,L_total"; }

std::string loss_csv_row(const LossRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g", row.iter, row.terms.rgb,
                row.terms.sem, row.terms.z, row.terms.smooth, row.total);
  return buf;
}

namespace {

constexpr std::size_t kElevationChunk = 4096;

/// Loss values and sparse gradients of one rendered frame.
struct FrameResult {
  double rgb = 0.0;
  double sem = 0.0;
  std::vector<int> rgb_vertices;
  Eigen::Matrix3Xd rgb_grad;  // d L_rgb / d color of rgb_vertices
  VertexGradients sem_grad;
};

Eigen::Matrix2Xd gather_xy(const RoadMesh& mesh, const std::vector<int>& ids, std::size_t begin,
                           std::size_t end) {
  Eigen::Matrix2Xd xy(2, static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) xy.col(static_cast<Eigen::Index>(k - begin)) = mesh.xy.col(ids[k]);
  return xy;
}

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& m, const std::vector<int>& ids) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(ids[k]);
  return out;
}

void check_finite(double value, const char* term, long iter) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite ") + term + " at iteration " + std::to_string(iter));
  }
}

template <typename Fn>
void for_each_index(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(std::min(workers, n));
  for (std::size_t w = 0; w < errors.size(); ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += errors.size()) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Optimizer {
 public:
  Optimizer(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config,
            ModelParams& params)
      : scene_(scene), mesh_(mesh), config_(config), params_(params),
        weights_(config.effective_weights()), grad_(params.zeros_like()) {
    // Computed even when L_z is disabled so the term is still reported.
    targets_ = elevation_targets(mesh, scene.lidar, config.radius());
    masks_.reserve(scene.frames.size());
    for (const auto& f : scene.frames) masks_.push_back(build_road_mask(f.sem_labels));
    for (const auto& t : params_.tensors()) {
      moments_.push_back({Eigen::ArrayXd::Zero(t.rows * t.cols), Eigen::ArrayXd::Zero(t.rows * t.cols)});
    }
  }

  LossRow step(long iter, const std::vector<int>& batch) {
    const std::vector<int> window =
        observation_window(mesh_, scene_.trajectory, scene_.frames, batch, config_.window_distance);
    for (auto& t : grad_.tensors()) t.flat().setZero();

    // Elevation of the window.
    Eigen::VectorXd z = mesh_.z0;
    if (params_.options.elevation_mlp) z = predict_elevations(mesh_, params_.pe, params_.elevation, window);

    // Per-camera colors of the window.
    std::vector<int> cams;
    for (int f : batch) cams.push_back(scene_.frames[static_cast<std::size_t>(f)].camera_id);
    std::sort(cams.begin(), cams.end());
    cams.erase(std::unique(cams.begin(), cams.end()), cams.end());
    const Eigen::Index n = mesh_.vertex_count();
    std::vector<Eigen::MatrixXd> colors(params_.camera_ids.size());
    for (int cam : cams) {
      const int slot = params_.camera_slot(cam);
      Eigen::MatrixXd full = Eigen::MatrixXd::Zero(3, n);
      if (params_.options.color_model == ColorModel::DirectRgb) {
        full = params_.vertex_rgb;
      } else {
        const Eigen::MatrixXd codes = gather_cols(params_.color_codes, window);
        const Eigen::MatrixXd rgb = params_.options.color_model == ColorModel::PerCameraMlp
                                        ? decode_colors(codes, cam, params_)
                                        : decode_colors_with_embedding(codes, cam, params_);
        for (std::size_t k = 0; k < window.size(); ++k) full.col(window[k]) = rgb.col(static_cast<Eigen::Index>(k));
      }
      colors[static_cast<std::size_t>(slot)] = std::move(full);
    }

    // Render and score every frame of the batch.
    std::vector<FrameResult> results(batch.size());
    for_each_index(batch.size(), config_.threads, [&](std::size_t k) {
      const auto fi = static_cast<std::size_t>(batch[k]);
      const Frame& frame = scene_.frames[fi];
      const Camera& camera = scene_.camera(frame.camera_id);
      const int slot = params_.camera_slot(frame.camera_id);
      const SplatBuffer splat = splat_vertices(camera, frame.camera_from_world(), mesh_.xy, z, window);
      const RenderedView view = shade_view(splat, colors[static_cast<std::size_t>(slot)], params_.sem_logits);
      FrameResult& r = results[k];
      const RgbLoss rgb = rgb_loss(view, frame.rgb, masks_[fi]);
      r.rgb = rgb.value;
      if (!rgb.empty_mask) {
        r.rgb_grad.resize(3, static_cast<Eigen::Index>(rgb.pixels));
        for (int y = 0; y < view.height(); ++y) {
          for (int x = 0; x < view.width(); ++x) {
            if (!(masks_[fi](x, y) && view.coverage(x, y))) continue;
            const auto col = static_cast<Eigen::Index>(r.rgb_vertices.size());
            r.rgb_vertices.push_back(view.vertex_of_pixel(x, y));
            for (int c = 0; c < 3; ++c) r.rgb_grad(c, col) = rgb.gradient(x, y, c);
          }
        }
      }
      SemLoss sem = sem_loss(view, frame.sem_labels, masks_[fi], params_.sem_logits);
      r.sem = sem.value;
      r.sem_grad = std::move(sem.gradient);
    });

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    LossTerms terms;
    for (const auto& r : results) {
      terms.rgb += r.rgb * inv_batch;
      terms.sem += r.sem * inv_batch;
    }
    check_finite(terms.rgb, "L_rgb", iter);
    check_finite(terms.sem, "L_sem", iter);

    const ElevationLoss lz = elev_loss(targets_, z, window);
    ElevationLoss ls = smooth_loss(mesh_, z, window);
    if (config_.smooth_normalization == SmoothNormalization::PerVertex && !window.empty()) {
      const double inv = 1.0 / static_cast<double>(window.size());
      ls.value *= inv;
      ls.gradient *= inv;
    }
    terms.z = lz.value;
    terms.smooth = ls.value;
    check_finite(terms.z, "L_z", iter);
    check_finite(terms.smooth, "L_smooth", iter);

    // Merge per-frame gradients in batch order.
    std::vector<Eigen::MatrixXd> d_colors(params_.camera_ids.size());
    std::vector<std::vector<char>> touched(params_.camera_ids.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const FrameResult& r = results[k];
      const int slot = params_.camera_slot(scene_.frames[static_cast<std::size_t>(batch[k])].camera_id);
      auto& dc = d_colors[static_cast<std::size_t>(slot)];
      auto& tc = touched[static_cast<std::size_t>(slot)];
      if (dc.size() == 0) {
        dc = Eigen::MatrixXd::Zero(3, n);
        tc.assign(static_cast<std::size_t>(n), 0);
      }
      const double scale = weights_.rgb * inv_batch;
      for (std::size_t j = 0; j < r.rgb_vertices.size(); ++j) {
        dc.col(r.rgb_vertices[j]) += scale * r.rgb_grad.col(static_cast<Eigen::Index>(j));
        tc[static_cast<std::size_t>(r.rgb_vertices[j])] = 1;
      }
      r.sem_grad.scatter_add(grad_.sem_logits, weights_.sem * inv_batch);
    }
    for (std::size_t slot = 0; slot < d_colors.size(); ++slot) {
      if (d_colors[slot].size() == 0) continue;
      backward_colors(static_cast<int>(slot), d_colors[slot], touched[slot]);
    }

    if (params_.options.elevation_mlp) {
      const Eigen::VectorXd dz = weights_.z * lz.gradient + weights_.smooth * ls.gradient;
      backward_elevation(window, dz);
    }

    apply_updates(iter + 1);
    LossRow row;
    row.iter = iter;
    row.terms = terms;
    row.total = total_loss(terms, weights_).total;
    check_finite(row.total, "L_total", iter);
    return row;
  }

 private:
  void backward_colors(int slot, const Eigen::MatrixXd& d_rgb, const std::vector<char>& touched) {
    std::vector<int> ids;
    for (std::size_t i = 0; i < touched.size(); ++i) {
      if (touched[i]) ids.push_back(static_cast<int>(i));
    }
    if (ids.empty()) return;
    const Eigen::MatrixXd upstream = gather_cols(d_rgb, ids);
    switch (params_.options.color_model) {
      case ColorModel::DirectRgb:
        for (std::size_t k = 0; k < ids.size(); ++k) grad_.vertex_rgb.col(ids[k]) += upstream.col(static_cast<Eigen::Index>(k));
        return;
      case ColorModel::PerCameraMlp: {
        const auto s = static_cast<std::size_t>(slot);
        MlpD::Cache cache;
        params_.decoders[s].forward(gather_cols(params_.color_codes, ids), &cache);
        const Eigen::MatrixXd d_in = params_.decoders[s].backward(cache, upstream, grad_.decoders[s]);
        for (std::size_t k = 0; k < ids.size(); ++k) grad_.color_codes.col(ids[k]) += d_in.col(static_cast<Eigen::Index>(k));
        return;
      }
      case ColorModel::SharedMlpEmbedding: {
        MlpD::Cache cache;
        params_.shared_decoder.forward(
            embedding_input(gather_cols(params_.color_codes, ids), params_.camera_embeddings.col(slot)),
            &cache);
        const Eigen::MatrixXd d_in = params_.shared_decoder.backward(cache, upstream, grad_.shared_decoder);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          grad_.color_codes.col(ids[k]) += d_in.col(static_cast<Eigen::Index>(k)).head(kColorCodeDim);
        }
        grad_.camera_embeddings.col(slot) += d_in.bottomRows(kCameraEmbeddingDim).rowwise().sum();
        return;
      }
    }
  }

  void backward_elevation(const std::vector<int>& window, const Eigen::VectorXd& dz) {
    std::vector<int> ids;
    for (int i : window) {
      if (dz[i] != 0.0) ids.push_back(i);
    }
    for (std::size_t begin = 0; begin < ids.size(); begin += kElevationChunk) {
      const std::size_t end = std::min(ids.size(), begin + kElevationChunk);
      MlpD::Cache cache;
      params_.elevation.forward(params_.pe.encode(gather_xy(mesh_, ids, begin, end)), &cache);
      Eigen::MatrixXd upstream(1, static_cast<Eigen::Index>(end - begin));
      for (std::size_t k = begin; k < end; ++k) upstream(0, static_cast<Eigen::Index>(k - begin)) = dz[ids[k]];
      params_.elevation.backward(cache, upstream, grad_.elevation);
    }
  }

  void apply_updates(long step) {
    auto params = params_.tensors();
    auto grads = grad_.tensors();
    for (std::size_t k = 0; k < params.size(); ++k) {
      AdamConfig cfg;
      cfg.lr = config_.learning_rates.at(params[k].group);
      adam_step(params[k].flat(), grads[k].flat(), moments_[k], cfg, step);
    }
  }

  const SceneData& scene_;
  const RoadMesh& mesh_;
  const TrainConfig& config_;
  ModelParams& params_;
  LossWeights weights_;
  ModelParams grad_;
  ElevationTargets targets_;
  std::vector<MaskImage> masks_;
  std::vector<AdamMoments> moments_;
};

}  // namespace

TrainResult train(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config,
                  const ProgressCallback& progress) {
  config.validate();
  return train(scene, mesh, config, initial_params(scene, mesh, config), progress);
}

TrainResult train(const SceneData& scene, const RoadMesh& mesh, const TrainConfig& config,
                  ModelParams initial, const ProgressCallback& progress) {
  config.validate();
  scene.validate();
  if (initial.vertex_count() != mesh.vertex_count()) {
    throw InvalidInput("parameters do not match the mesh vertex count");
  }
  TrainResult result;
  result.params = std::move(initial);
  if (config.epochs == 0 || scene.frames.empty()) return result;

  Optimizer opt(scene, mesh, config, result.params);
  const long per_epoch =
      (static_cast<long>(scene.frames.size()) + config.batch_size - 1) / config.batch_size;
  const long total = per_epoch * config.epochs;
  long iter = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch :
         epoch_batches(scene.frames, config.batch_size, config.seed, epoch, config.shuffle_batches)) {
      LossRow row = opt.step(iter++, batch);
      if (progress) progress(row, total);
      result.history.push_back(row);
    }
  }
  return result;
}

}  // namespace roadmesh
