#include "roadmesh/neural_core.hpp"

#include <algorithm>
#include <numbers>

#include "roadmesh/scene_model.hpp"

namespace roadmesh {

PositionalEncoding::PositionalEncoding(const Eigen::AlignedBox2d& bbox) : bbox_(bbox) {
  if (bbox.isEmpty()) throw InvalidInput("positional encoding: empty bounding box");
  const Eigen::Vector2d extent = bbox.sizes();
  if (!(extent.x() > 0.0) || !(extent.y() > 0.0)) {
    throw InvalidInput("positional encoding: bounding box has zero extent on an axis");
  }
}

Eigen::Vector2d PositionalEncoding::normalize(double x, double y) const {
  const Eigen::Vector2d lo = bbox_.min();
  const Eigen::Vector2d extent = bbox_.sizes();
  Eigen::Vector2d p = (2.0 * (Eigen::Vector2d(x, y) - lo).array() / extent.array() - 1.0).matrix();
  return p.cwiseMax(-1.0).cwiseMin(1.0);
}

PositionalEncoding::Feature PositionalEncoding::encode_normalized(const Eigen::Vector2d& p) {
  Feature f;
  f.head<2>() = p;
  double freq = std::numbers::pi;
  for (int k = 0; k < kFrequencies; ++k, freq *= 2.0) {
    const int base = 2 + 4 * k;
    f[base + 0] = std::sin(freq * p.x());
    f[base + 1] = std::sin(freq * p.y());
    f[base + 2] = std::cos(freq * p.x());
    f[base + 3] = std::cos(freq * p.y());
  }
  return f;
}

PositionalEncoding::Feature PositionalEncoding::encode(double x, double y) const {
  if (bbox_.isEmpty()) throw InvalidInput("positional encoding used before initialization");
  return encode_normalized(normalize(x, y));
}

Eigen::MatrixXd PositionalEncoding::encode(const Eigen::Ref<const Eigen::Matrix2Xd>& xy) const {
  if (bbox_.isEmpty()) throw InvalidInput("positional encoding used before initialization");
  Eigen::MatrixXd out(kOutputDim, xy.cols());
  for (Eigen::Index i = 0; i < xy.cols(); ++i) {
    out.col(i) = encode_normalized(normalize(xy(0, i), xy(1, i)));
  }
  return out;
}

MlpD make_elevation_mlp() {
  std::vector<int> sizes{PositionalEncoding::kOutputDim};
  for (int l = 0; l < 7; ++l) sizes.push_back(128);
  sizes.push_back(1);
  return MlpD(sizes, OutputActivation::None);
}

MlpD make_color_decoder(int input_dim) { return MlpD({input_dim, 16, 3}, OutputActivation::Sigmoid); }

CrossEntropy softmax_cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& logits, int target) {
  if (target < 0 || target >= logits.size()) {
    throw InvalidInput("softmax_cross_entropy: class " + std::to_string(target) + " out of range");
  }
  const double shift = logits.maxCoeff();
  const Eigen::ArrayXd e = (logits.array() - shift).exp();
  const double sum = e.sum();
  CrossEntropy out;
  out.loss = std::log(sum) - (logits[target] - shift);
  out.gradient = (e / sum).matrix();
  out.gradient[target] -= 1.0;
  return out;
}

void adam_step(Eigen::Ref<Eigen::ArrayXd> param, const Eigen::Ref<const Eigen::ArrayXd>& grad,
               AdamMoments& moments, const AdamConfig& config, long step) {
  if (grad.size() != param.size()) throw InvalidInput("adam_step: gradient shape mismatch");
  if (step < 1) throw InvalidInput("adam_step: step counter starts at 1");
  if (moments.m.size() != param.size()) {
    moments.m = Eigen::ArrayXd::Zero(param.size());
    moments.v = Eigen::ArrayXd::Zero(param.size());
  }
  moments.m = config.beta1 * moments.m + (1.0 - config.beta1) * grad;
  moments.v = config.beta2 * moments.v + (1.0 - config.beta2) * grad.square();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  param -= config.lr * (moments.m / c1) / ((moments.v / c2).sqrt() + config.eps);
}

const char* to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::ElevationMlp: return "elevation_mlp";
    case ParamGroup::ColorMlps: return "color_mlps";
    case ParamGroup::SemLogits: return "sem_logits";
    case ParamGroup::ColorCodes: return "color_codes";
  }
  return "unknown";
}

double LearningRates::at(ParamGroup group) const {
  switch (group) {
    case ParamGroup::ElevationMlp: return elevation_mlp;
    case ParamGroup::ColorMlps: return color_mlps;
    case ParamGroup::SemLogits: return sem_logits;
    case ParamGroup::ColorCodes: return color_codes;
  }
  return 0.0;
}

int ModelParams::camera_slot(int camera_id) const {
  const auto it = std::find(camera_ids.begin(), camera_ids.end(), camera_id);
  if (it == camera_ids.end()) {
    throw InvalidInput("no color decoder registered for camera " + std::to_string(camera_id));
  }
  return static_cast<int>(it - camera_ids.begin());
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.pe = pe;
  z.options = options;
  z.elevation = elevation.zeros_like();
  z.camera_ids = camera_ids;
  for (const auto& d : decoders) z.decoders.push_back(d.zeros_like());
  z.shared_decoder = shared_decoder.zeros_like();
  z.camera_embeddings = Eigen::MatrixXd::Zero(camera_embeddings.rows(), camera_embeddings.cols());
  z.sem_logits = Eigen::MatrixXd::Zero(sem_logits.rows(), sem_logits.cols());
  z.color_codes = Eigen::MatrixXd::Zero(color_codes.rows(), color_codes.cols());
  z.vertex_rgb = Eigen::MatrixXd::Zero(vertex_rgb.rows(), vertex_rgb.cols());
  return z;
}

namespace {

template <typename Derived>
TensorView view(std::string name, ParamGroup group, Eigen::PlainObjectBase<Derived>& t) {
  return {std::move(name), group, t.data(), t.rows(), t.cols()};
}

void append_mlp(std::vector<TensorView>& out, const std::string& prefix, ParamGroup group,
                MlpD& mlp) {
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    auto& layer = mlp.layers()[l];
    out.push_back(view(prefix + "." + std::to_string(l) + ".weight", group, layer.weight));
    out.push_back(view(prefix + "." + std::to_string(l) + ".bias", group, layer.bias));
  }
}

}  // namespace

std::vector<TensorView> ModelParams::tensors() {
  std::vector<TensorView> out;
  if (options.elevation_mlp) append_mlp(out, "elevation", ParamGroup::ElevationMlp, elevation);
  switch (options.color_model) {
    case ColorModel::PerCameraMlp:
      for (std::size_t s = 0; s < decoders.size(); ++s) {
        append_mlp(out, "decoder_cam" + std::to_string(camera_ids[s]), ParamGroup::ColorMlps,
                   decoders[s]);
      }
      out.push_back(view("color_codes", ParamGroup::ColorCodes, color_codes));
      break;
    case ColorModel::SharedMlpEmbedding:
      append_mlp(out, "shared_decoder", ParamGroup::ColorMlps, shared_decoder);
      out.push_back(view("camera_embeddings", ParamGroup::ColorMlps, camera_embeddings));
      out.push_back(view("color_codes", ParamGroup::ColorCodes, color_codes));
      break;
    case ColorModel::DirectRgb:
      out.push_back(view("vertex_rgb", ParamGroup::ColorCodes, vertex_rgb));
      break;
  }
  out.push_back(view("sem_logits", ParamGroup::SemLogits, sem_logits));
  return out;
}

ModelParams init_model_params(const Eigen::AlignedBox2d& bbox, Eigen::Index vertex_count,
                              std::vector<int> camera_ids, const ModelOptions& options,
                              std::uint64_t seed) {
  if (camera_ids.empty()) throw InvalidInput("model needs at least one camera");
  ModelParams p;
  p.pe = PositionalEncoding(bbox);
  p.options = options;
  p.camera_ids = std::move(camera_ids);

  std::mt19937_64 rng(seed);
  auto fill_uniform = [&rng](Eigen::MatrixXd& m, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    }
  };

  // Every tensor is drawn in a fixed order whether or not the variant uses it,
  // so variants sharing a seed share their common initial values.
  p.elevation = make_elevation_mlp();
  p.elevation.init_uniform(rng);
  p.elevation.layers().back().weight.setZero();
  p.elevation.layers().back().bias.setZero();

  for (std::size_t s = 0; s < p.camera_ids.size(); ++s) {
    p.decoders.push_back(make_color_decoder());
    p.decoders.back().init_uniform(rng);
  }
  p.shared_decoder = make_color_decoder(kColorCodeDim + kCameraEmbeddingDim);
  p.shared_decoder.init_uniform(rng);
  p.camera_embeddings.resize(kCameraEmbeddingDim, static_cast<Eigen::Index>(p.camera_ids.size()));
  fill_uniform(p.camera_embeddings, 0.1);

  p.sem_logits.resize(kNumClasses, vertex_count);
  fill_uniform(p.sem_logits, 0.01);
  p.color_codes.resize(kColorCodeDim, vertex_count);
  fill_uniform(p.color_codes, 0.1);
  p.vertex_rgb = Eigen::MatrixXd::Constant(3, vertex_count, 0.5);
  return p;
}

Eigen::VectorXd predict_elevations(const RoadMesh& mesh, const PositionalEncoding& pe,
                                   const MlpD& mlp_hr, const std::vector<int>& vertices) {
  if (mlp_hr.input_dim() != PositionalEncoding::kOutputDim || mlp_hr.output_dim() != 1) {
    throw InvalidInput("elevation MLP must map 22 inputs to 1 output");
  }
  Eigen::VectorXd z = mesh.z0;
  std::vector<int> all;
  const std::vector<int>* ids = &vertices;
  if (vertices.empty()) {
    all.resize(static_cast<std::size_t>(mesh.vertex_count()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    ids = &all;
  }
  constexpr std::size_t kChunk = 4096;
  for (std::size_t begin = 0; begin < ids->size(); begin += kChunk) {
    const std::size_t end = std::min(ids->size(), begin + kChunk);
    Eigen::Matrix2Xd xy(2, static_cast<Eigen::Index>(end - begin));
    for (std::size_t k = begin; k < end; ++k) xy.col(k - begin) = mesh.xy.col((*ids)[k]);
    const Eigen::MatrixXd r = mlp_hr.forward(pe.encode(xy));
    for (std::size_t k = begin; k < end; ++k) z[(*ids)[k]] += r(0, k - begin);
  }
  return z;
}

Eigen::MatrixXd decode_colors(const Eigen::Ref<const Eigen::MatrixXd>& color_codes, int camera_id,
                              const ModelParams& params) {
  if (color_codes.rows() != kColorCodeDim) throw InvalidInput("color codes must have 32 rows");
  return params.decoders.at(params.camera_slot(camera_id)).forward(color_codes);
}

Eigen::MatrixXd embedding_input(const Eigen::Ref<const Eigen::MatrixXd>& color_codes,
                                const Eigen::VectorXd& embedding) {
  Eigen::MatrixXd in(color_codes.rows() + embedding.size(), color_codes.cols());
  in.topRows(color_codes.rows()) = color_codes;
  in.bottomRows(embedding.size()) = embedding.replicate(1, color_codes.cols());
  return in;
}

Eigen::MatrixXd decode_colors_with_embedding(const Eigen::Ref<const Eigen::MatrixXd>& color_codes,
                                             int camera_id, const ModelParams& params) {
  if (color_codes.rows() != kColorCodeDim) throw InvalidInput("color codes must have 32 rows");
  const int slot = params.camera_slot(camera_id);
  return params.shared_decoder.forward(
      embedding_input(color_codes, params.camera_embeddings.col(slot)));
}

}  // namespace roadmesh
