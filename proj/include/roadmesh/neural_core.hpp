#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "roadmesh/common.hpp"

namespace roadmesh {

class RoadMesh;

// ---------------------------------------------------------------------------
// Positional encoding

/// Fourier features of bbox-normalized (x, y):
/// [p, sin(pi p), cos(pi p), sin(2 pi p), cos(2 pi p), ..., sin(16 pi p), cos(16 pi p)],
/// each entry being the (x, y) pair, for 22 values in total.
class PositionalEncoding {
 public:
  static constexpr int kFrequencies = 5;
  static constexpr int kOutputDim = 2 + 2 * 2 * kFrequencies;
  using Feature = Eigen::Matrix<double, kOutputDim, 1>;

  PositionalEncoding() = default;
  explicit PositionalEncoding(const Eigen::AlignedBox2d& bbox);

  const Eigen::AlignedBox2d& bbox() const { return bbox_; }

  /// Maps (x, y) to [-1, 1]^2, clamping points outside the box.
  Eigen::Vector2d normalize(double x, double y) const;
  Feature encode(double x, double y) const;
  /// Column-wise encoding of a 2 x N block of points.
  Eigen::MatrixXd encode(const Eigen::Ref<const Eigen::Matrix2Xd>& xy) const;

  static Feature encode_normalized(const Eigen::Vector2d& p);

 private:
  Eigen::AlignedBox2d bbox_;
};

inline PositionalEncoding::Feature positional_encode(double x, double y,
                                                     const PositionalEncoding& pe) {
  return pe.encode(x, y);
}

// ---------------------------------------------------------------------------
// Multilayer perceptron

enum class OutputActivation { None, Sigmoid };

/// Fully connected network with ReLU between layers. Batches are column-major:
/// one sample per column.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
  };

  /// Post-activation values of every layer; activations[0] is the input.
  struct Cache {
    std::vector<Matrix> activations;
  };

  Mlp() = default;

  /// Zero-initialized network, e.g. sizes {32, 16, 3} is 32 -> 16 -> 3.
  Mlp(std::vector<int> layer_sizes, OutputActivation output)
      : sizes_(std::move(layer_sizes)), output_(output) {
    if (sizes_.size() < 2) throw InvalidInput("Mlp needs at least an input and an output size");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw InvalidInput("Mlp layer sizes must be positive");
      layers_.push_back({Matrix::Zero(sizes_[l + 1], sizes_[l]), Vector::Zero(sizes_[l + 1])});
    }
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  OutputActivation output_activation() const { return output_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  Mlp zeros_like() const { return Mlp(sizes_, output_); }

  void set_zero() {
    for (auto& l : layers_) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }

  /// He-uniform weights for layers followed by ReLU, Xavier-uniform for the
  /// output layer; zero biases.
  template <typename Rng>
  void init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& layer = layers_[l];
      const double fan_in = static_cast<double>(layer.weight.cols());
      const double fan_out = static_cast<double>(layer.weight.rows());
      const bool last = l + 1 == layers_.size();
      const double bound = last ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      // Row-major fill order keeps initialization independent of storage order.
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
          layer.weight(r, c) = static_cast<Scalar>(dist(rng));
        }
      }
      layer.bias.setZero();
    }
  }

  Matrix forward(const Eigen::Ref<const Matrix>& input, Cache* cache = nullptr) const {
    if (input.rows() != input_dim()) {
      throw InvalidInput("Mlp::forward: expected input width " + std::to_string(input_dim()) +
                         ", got " + std::to_string(input.rows()));
    }
    if (cache) {
      cache->activations.clear();
      cache->activations.reserve(layers_.size() + 1);
      cache->activations.emplace_back(input);
    }
    Matrix x = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      Matrix z(layer.weight.rows(), x.cols());
      z.noalias() = layer.weight * x;
      z.colwise() += layer.bias;
      if (l + 1 < layers_.size()) {
        x = z.cwiseMax(Scalar(0));
      } else if (output_ == OutputActivation::Sigmoid) {
        x = (Scalar(1) + (-z.array()).exp()).inverse().matrix();
      } else {
        x = std::move(z);
      }
      if (cache) cache->activations.push_back(x);
    }
    return x;
  }

  Vector forward_one(const Vector& input) const {
    return forward(Eigen::Ref<const Matrix>(input)).col(0);
  }

  /// Reverse pass for a cached forward batch. Parameter gradients are added to
  /// `grad` (same architecture); returns the gradient w.r.t. the input batch.
  Matrix backward(const Cache& cache, const Eigen::Ref<const Matrix>& upstream, Mlp& grad) const {
    if (cache.activations.size() != layers_.size() + 1) {
      throw InvalidInput("Mlp::backward: cache does not match this network");
    }
    if (grad.layers_.size() != layers_.size()) {
      throw InvalidInput("Mlp::backward: gradient architecture mismatch");
    }
    const Matrix& out = cache.activations.back();
    if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
      throw InvalidInput("Mlp::backward: upstream gradient shape mismatch");
    }
    Matrix g = upstream;
    if (output_ == OutputActivation::Sigmoid) {
      g.array() *= out.array() * (Scalar(1) - out.array());
    }
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& layer = layers_[li];
      const Matrix& a_in = cache.activations[li];
      grad.layers_[li].weight.noalias() += g * a_in.transpose();
      grad.layers_[li].bias += g.rowwise().sum();
      Matrix g_in(layer.weight.cols(), g.cols());
      g_in.noalias() = layer.weight.transpose() * g;
      if (li > 0) g_in.array() *= (a_in.array() > Scalar(0)).template cast<Scalar>();
      g = std::move(g_in);
    }
    return g;
  }

  Mlp& operator+=(const Mlp& other) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weight += other.layers_[l].weight;
      layers_[l].bias += other.layers_[l].bias;
    }
    return *this;
  }

  Mlp& operator*=(Scalar s) {
    for (auto& l : layers_) {
      l.weight *= s;
      l.bias *= s;
    }
    return *this;
  }

 private:
  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::None;
  std::vector<Layer> layers_;
};

using MlpD = Mlp<double>;

inline MlpD::Matrix mlp_forward(const MlpD& params, const Eigen::Ref<const MlpD::Matrix>& input,
                                MlpD::Cache* cache = nullptr) {
  return params.forward(input, cache);
}

/// Returns the input gradient and adds parameter gradients into `grad`.
inline MlpD::Matrix mlp_backward(const MlpD& params, const MlpD::Cache& cache,
                                 const Eigen::Ref<const MlpD::Matrix>& upstream, MlpD& grad) {
  return params.backward(cache, upstream, grad);
}

/// 22 -> 128 (x7) -> 1, ReLU hidden, linear head.
MlpD make_elevation_mlp();
/// 32 -> 16 -> 3 with a sigmoid head.
MlpD make_color_decoder(int input_dim = kColorCodeDim);

// ---------------------------------------------------------------------------
// Cross entropy

struct CrossEntropy {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // d loss / d logits
};

CrossEntropy softmax_cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& logits, int target);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Eigen::ArrayXd m;
  Eigen::ArrayXd v;
};

/// One bias-corrected Adam update; `step` is the 1-based step count.
void adam_step(Eigen::Ref<Eigen::ArrayXd> param, const Eigen::Ref<const Eigen::ArrayXd>& grad,
               AdamMoments& moments, const AdamConfig& config, long step);

enum class ParamGroup { ElevationMlp, ColorMlps, SemLogits, ColorCodes };

const char* to_string(ParamGroup group);

struct LearningRates {
  double elevation_mlp = 0.01;
  double color_mlps = 0.005;
  double sem_logits = 0.1;
  double color_codes = 0.005;

  double at(ParamGroup group) const;
};

// ---------------------------------------------------------------------------
// Road-surface model parameters

enum class ColorModel { PerCameraMlp, SharedMlpEmbedding, DirectRgb };

inline constexpr int kCameraEmbeddingDim = 8;

struct ModelOptions {
  ColorModel color_model = ColorModel::PerCameraMlp;
  bool elevation_mlp = true;
};

/// Flat view of one learnable tensor.
struct TensorView {
  std::string name;
  ParamGroup group;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Map<Eigen::ArrayXd> flat() const { return {data, rows * cols}; }
};

/// Every learnable quantity of the road-surface model. Only the tensors used
/// by `options` are exposed through tensors().
struct ModelParams {
  PositionalEncoding pe;
  ModelOptions options;
  MlpD elevation;
  std::vector<int> camera_ids;
  std::vector<MlpD> decoders;          // one per camera id (PerCameraMlp)
  MlpD shared_decoder;                 // SharedMlpEmbedding
  Eigen::MatrixXd camera_embeddings;   // kCameraEmbeddingDim x cameras
  Eigen::MatrixXd sem_logits;          // kNumClasses x vertices
  Eigen::MatrixXd color_codes;         // kColorCodeDim x vertices
  Eigen::MatrixXd vertex_rgb;          // 3 x vertices (DirectRgb)

  Eigen::Index vertex_count() const { return sem_logits.cols(); }
  /// Index of camera_id in camera_ids; throws for unknown cameras.
  int camera_slot(int camera_id) const;

  ModelParams zeros_like() const;
  std::vector<TensorView> tensors();
};

/// Seeded initialization: semantic logits ~ U(-0.01, 0.01), color codes ~
/// U(-0.1, 0.1), embeddings ~ U(-0.1, 0.1), direct RGB at 0.5, decoders
/// He/Xavier-uniform, elevation head zero so that z_f starts at z0.
ModelParams init_model_params(const Eigen::AlignedBox2d& bbox, Eigen::Index vertex_count,
                              std::vector<int> camera_ids, const ModelOptions& options,
                              std::uint64_t seed);

/// z_f = z0 + MLP(PE(x, y)) over the given vertices (all when `vertices` is empty).
/// Returns a full-length vector; entries outside `vertices` hold z0.
Eigen::VectorXd predict_elevations(const RoadMesh& mesh, const PositionalEncoding& pe,
                                   const MlpD& mlp_hr, const std::vector<int>& vertices = {});

/// Per-camera decoding of a kColorCodeDim x M block of codes into 3 x M RGB.
Eigen::MatrixXd decode_colors(const Eigen::Ref<const Eigen::MatrixXd>& color_codes, int camera_id,
                              const ModelParams& params);

/// Shared decoder over [code; embedding(camera)].
Eigen::MatrixXd decode_colors_with_embedding(const Eigen::Ref<const Eigen::MatrixXd>& color_codes,
                                             int camera_id, const ModelParams& params);

/// Builds the decoder input [codes; embedding] for the shared decoder.
Eigen::MatrixXd embedding_input(const Eigen::Ref<const Eigen::MatrixXd>& color_codes,
                                const Eigen::VectorXd& embedding);

}  // namespace roadmesh
