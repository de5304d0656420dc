#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "roadmesh/neural_core.hpp"
#include "roadmesh/scene_model.hpp"

using namespace roadmesh;

namespace {

PositionalEncoding unit_pe() {
  return PositionalEncoding(Eigen::AlignedBox2d(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)));
}

}  // namespace

TEST(PositionalEncoding, OriginGivesZeroSinesAndUnitCosines) {
  const auto f = unit_pe().encode(0.0, 0.0);
  EXPECT_EQ(f(0), 0.0);
  EXPECT_EQ(f(1), 0.0);
  for (int k = 0; k < PositionalEncoding::kFrequencies; ++k) {
    const int base = 2 + 4 * k;
    EXPECT_EQ(f(base + 0), 0.0);
    EXPECT_EQ(f(base + 1), 0.0);
    EXPECT_EQ(f(base + 2), 1.0);
    EXPECT_EQ(f(base + 3), 1.0);
  }
}

TEST(PositionalEncoding, HasTwentyTwoEntries) {
  EXPECT_EQ(PositionalEncoding::kOutputDim, 22);
  const PositionalEncoding pe(Eigen::AlignedBox2d(Eigen::Vector2d(0, -15), Eigen::Vector2d(100, 15)));
  std::mt19937_64 rng(3);
  const Eigen::Matrix2Xd xy = oracle::random_matrix(2, 17, -200, 200, rng);
  const Eigen::MatrixXd f = pe.encode(xy);
  EXPECT_EQ(f.rows(), 22);
  EXPECT_EQ(f.cols(), 17);
  EXPECT_TRUE(f.allFinite());
}

TEST(PositionalEncoding, MatchesDirectFormula) {
  const auto f = unit_pe().encode(0.5, 0.0);
  EXPECT_NEAR(f(2), 1.0, 1e-15);  // sin(pi * 0.5) on the x axis
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = d(rng), y = d(rng);
    const auto g = unit_pe().encode(x, y);
    EXPECT_DOUBLE_EQ(g(0), x);
    EXPECT_DOUBLE_EQ(g(1), y);
    for (int k = 0; k < 5; ++k) {
      const double w = std::numbers::pi * std::pow(2.0, k);
      EXPECT_NEAR(g(2 + 4 * k + 0), std::sin(w * x), 1e-12);
      EXPECT_NEAR(g(2 + 4 * k + 1), std::sin(w * y), 1e-12);
      EXPECT_NEAR(g(2 + 4 * k + 2), std::cos(w * x), 1e-12);
      EXPECT_NEAR(g(2 + 4 * k + 3), std::cos(w * y), 1e-12);
    }
  }
}

TEST(PositionalEncoding, NormalizesToBoxAndClamps) {
  const PositionalEncoding pe(Eigen::AlignedBox2d(Eigen::Vector2d(10, 20), Eigen::Vector2d(30, 60)));
  EXPECT_TRUE(pe.normalize(10, 20).isApprox(Eigen::Vector2d(-1, -1)));
  EXPECT_TRUE(pe.normalize(20, 40).isZero(1e-15));
  EXPECT_TRUE(pe.normalize(100, -5).isApprox(Eigen::Vector2d(1, -1)));
}

TEST(PositionalEncoding, RejectsDegenerateBox) {
  EXPECT_THROW(PositionalEncoding(Eigen::AlignedBox2d(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0))),
               InvalidInput);
}

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  const MlpD net({4, 8, 3}, OutputActivation::None);
  const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Constant(4, 5, 2.5));
  EXPECT_TRUE(y.isZero(0.0));
}

TEST(Mlp, ZeroWeightsWithSigmoidGiveOneHalf) {
  const MlpD net({4, 8, 3}, OutputActivation::Sigmoid);
  const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Random(4, 5));
  EXPECT_TRUE(y.isConstant(0.5, 0.0));
}

TEST(Mlp, TinyNetworkByHand) {
  // 1 -> 1 (ReLU) -> 1 with w1 = 2, b1 = 1, w2 = 3, b2 = 0.5.
  MlpD net({1, 1, 1}, OutputActivation::None);
  net.layers()[0].weight(0, 0) = 2.0;
  net.layers()[0].bias(0) = 1.0;
  net.layers()[1].weight(0, 0) = 3.0;
  net.layers()[1].bias(0) = 0.5;
  Eigen::MatrixXd x(1, 3);
  x << -1.0, 0.0, 2.0;
  const Eigen::MatrixXd y = net.forward(x);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);          // ReLU(-1) = 0
  EXPECT_DOUBLE_EQ(y(0, 1), 3.0 * 1 + 0.5);
  EXPECT_DOUBLE_EQ(y(0, 2), 3.0 * 5 + 0.5);
}

TEST(Mlp, ArchitecturesMatchTheModel) {
  const MlpD elev = make_elevation_mlp();
  const std::vector<int> expected{22, 128, 128, 128, 128, 128, 128, 128, 1};
  EXPECT_EQ(elev.layer_sizes(), expected);
  EXPECT_EQ(elev.output_activation(), OutputActivation::None);
  const MlpD dec = make_color_decoder();
  EXPECT_EQ(dec.layer_sizes(), (std::vector<int>{32, 16, 3}));
  EXPECT_EQ(dec.output_activation(), OutputActivation::Sigmoid);
}

TEST(Mlp, RejectsWrongInputWidth) {
  const MlpD net({3, 2}, OutputActivation::None);
  EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(4, 1)), InvalidInput);
  EXPECT_THROW(MlpD({3}, OutputActivation::None), InvalidInput);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(5);
  const MlpD net = oracle::random_color_decoder(rng, 32);
  const Eigen::MatrixXd x = oracle::random_matrix(32, 4, -1, 1, rng);
  MlpD::Cache cache;
  net.forward(x, &cache);
  MlpD grad = net.zeros_like();
  const Eigen::MatrixXd gin = net.backward(cache, Eigen::MatrixXd::Zero(3, 4), grad);
  EXPECT_TRUE(gin.isZero(0.0));
  for (const auto& l : grad.layers()) {
    EXPECT_TRUE(l.weight.isZero(0.0));
    EXPECT_TRUE(l.bias.isZero(0.0));
  }
}

TEST(MlpBackward, LinearLayerWeightGradientIsOuterProduct) {
  std::mt19937_64 rng(8);
  MlpD net({3, 2}, OutputActivation::None);
  net.init_uniform(rng);
  const Eigen::MatrixXd x = oracle::random_matrix(3, 1, -1, 1, rng);
  const Eigen::MatrixXd u = oracle::random_matrix(2, 1, -1, 1, rng);
  MlpD::Cache cache;
  net.forward(x, &cache);
  MlpD grad = net.zeros_like();
  const Eigen::MatrixXd gin = net.backward(cache, u, grad);
  EXPECT_TRUE(grad.layers()[0].weight.isApprox(u * x.transpose(), 1e-14));
  EXPECT_TRUE(grad.layers()[0].bias.isApprox(u.col(0), 1e-14));
  EXPECT_TRUE(gin.isApprox(net.layers()[0].weight.transpose() * u, 1e-14));
}

TEST(MlpBackward, ElevationMlpMatchesFiniteDifferences) {
  oracle::GradCheck total;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const MlpD net = oracle::random_elevation_mlp(rng);
    const Eigen::MatrixXd x = oracle::random_matrix(22, 3, -1, 1, rng);
    const Eigen::MatrixXd u = oracle::random_matrix(1, 3, -1, 1, rng);
    total.merge(oracle::check_mlp_gradients(net, x, u, 40, rng));
  }
  EXPECT_GT(total.checked, 500);
  EXPECT_LT(total.max_rel, 1e-4);
}

TEST(MlpBackward, ColorDecoderMatchesFiniteDifferences) {
  oracle::GradCheck total;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(2000 + seed);
    const int in = seed % 2 ? kColorCodeDim : kColorCodeDim + kCameraEmbeddingDim;
    const MlpD net = oracle::random_color_decoder(rng, in);
    const Eigen::MatrixXd x = oracle::random_matrix(in, 3, -1, 1, rng);
    const Eigen::MatrixXd u = oracle::random_matrix(3, 3, -1, 1, rng);
    total.merge(oracle::check_mlp_gradients(net, x, u, -1, rng));
  }
  EXPECT_GT(total.checked, 5000);
  EXPECT_LT(total.max_rel, 1e-4);
}

TEST(CrossEntropy, UniformLogitsGiveLogOfClassCount) {
  const CrossEntropy ce = softmax_cross_entropy(Eigen::VectorXd::Constant(5, 0.3), 2);
  EXPECT_NEAR(ce.loss, std::log(5.0), 1e-12);
}

TEST(CrossEntropy, SaturatedCorrectClassIsNearZero) {
  Eigen::VectorXd logits(5);
  logits << 10, -10, -10, -10, -10;
  EXPECT_NEAR(softmax_cross_entropy(logits, 0).loss, 0.0, 1e-8);
}

TEST(CrossEntropy, GradientSumsToZeroAndMatchesSoftmax) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd logits = oracle::random_matrix(5, 1, -20, 20, rng);
    const int target = t % 5;
    const CrossEntropy ce = softmax_cross_entropy(logits, target);
    EXPECT_NEAR(ce.gradient.sum(), 0.0, 1e-12);
    const Eigen::ArrayXd p = (logits.array() - logits.maxCoeff()).exp();
    Eigen::ArrayXd softmax = p / p.sum();
    EXPECT_NEAR(ce.loss, -std::log(softmax(target)), 1e-9);
    softmax(target) -= 1.0;
    EXPECT_TRUE(ce.gradient.isApprox(softmax.matrix(), 1e-10));
  }
}

TEST(CrossEntropy, LargeLogitsStayFinite) {
  Eigen::VectorXd logits(5);
  logits << 1000, -1000, 0, 500, 2;
  const CrossEntropy ce = softmax_cross_entropy(logits, 1);
  EXPECT_TRUE(std::isfinite(ce.loss));
  EXPECT_NEAR(ce.loss, 2000.0, 1e-9);
  EXPECT_THROW(softmax_cross_entropy(logits, 5), InvalidInput);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Eigen::ArrayXd p = Eigen::ArrayXd::Zero(1);
  AdamMoments m;
  adam_step(p, Eigen::ArrayXd::Ones(1), m, AdamConfig{0.01}, 1);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p(0), -0.01 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientAtZeroStateIsNoOp) {
  Eigen::ArrayXd p(3);
  p << 1.0, -2.0, 3.0;
  const Eigen::ArrayXd before = p;
  AdamMoments m;
  adam_step(p, Eigen::ArrayXd::Zero(3), m, AdamConfig{0.1}, 1);
  EXPECT_TRUE((p == before).all());
}

TEST(Adam, GradientSignFlipFlipsUpdate) {
  Eigen::ArrayXd a = Eigen::ArrayXd::Zero(2), b = Eigen::ArrayXd::Zero(2);
  Eigen::ArrayXd g(2);
  g << 0.3, -2.0;
  AdamMoments ma, mb;
  adam_step(a, g, ma, AdamConfig{0.05}, 1);
  adam_step(b, -g, mb, AdamConfig{0.05}, 1);
  EXPECT_TRUE(a.isApprox(-b));
  EXPECT_LT(a(0), 0.0);
  EXPECT_GT(a(1), 0.0);
}

TEST(Adam, MatchesRecurrenceOverSeveralSteps) {
  const AdamConfig cfg{0.02, 0.9, 0.999, 1e-8};
  Eigen::ArrayXd p = Eigen::ArrayXd::Constant(1, 0.5);
  AdamMoments mom;
  double q = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 20; ++t) {
    const double g = 2.0 * q - 0.3 * t;
    Eigen::ArrayXd ga = Eigen::ArrayXd::Constant(1, 2.0 * p(0) - 0.3 * t);
    adam_step(p, ga, mom, cfg, t);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    q -= 0.02 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p(0), q, 1e-13);
  }
}

TEST(LearningRates, DefaultsPerGroup) {
  const LearningRates lr;
  EXPECT_DOUBLE_EQ(lr.at(ParamGroup::ElevationMlp), 0.01);
  EXPECT_DOUBLE_EQ(lr.at(ParamGroup::ColorMlps), 0.005);
  EXPECT_DOUBLE_EQ(lr.at(ParamGroup::SemLogits), 0.1);
  EXPECT_DOUBLE_EQ(lr.at(ParamGroup::ColorCodes), 0.005);
  EXPECT_STREQ(to_string(ParamGroup::ElevationMlp), "elevation_mlp");
}

namespace {

RoadMesh flat_mesh() { return oracle::patch_mesh(6.0, 2.0, 0.25); }

void adam_update(MlpD& net, MlpD& grad, std::vector<AdamMoments>& moments, double lr, long step) {
  moments.resize(2 * net.layers().size());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    auto& g = grad.layers()[l];
    Eigen::Map<Eigen::ArrayXd> w(layer.weight.data(), layer.weight.size());
    Eigen::Map<Eigen::ArrayXd> b(layer.bias.data(), layer.bias.size());
    adam_step(w, Eigen::Map<Eigen::ArrayXd>(g.weight.data(), g.weight.size()), moments[2 * l],
              AdamConfig{lr}, step);
    adam_step(b, Eigen::Map<Eigen::ArrayXd>(g.bias.data(), g.bias.size()), moments[2 * l + 1],
              AdamConfig{lr}, step);
  }
}

}  // namespace

TEST(PredictElevations, ZeroMlpReturnsInitialElevation) {
  RoadMesh mesh = flat_mesh();
  mesh.z0 = Eigen::VectorXd::LinSpaced(mesh.vertex_count(), -1, 1);
  const PositionalEncoding pe(mesh.bbox);
  const Eigen::VectorXd z = predict_elevations(mesh, pe, make_elevation_mlp());
  EXPECT_TRUE(z.isApprox(mesh.z0, 0.0));
}

TEST(PredictElevations, ResidualIsTheMlpOutput) {
  const RoadMesh mesh = flat_mesh();
  const PositionalEncoding pe(mesh.bbox);
  std::mt19937_64 rng(9);
  const MlpD net = oracle::random_elevation_mlp(rng);
  const Eigen::VectorXd z = predict_elevations(mesh, pe, net);
  const Eigen::MatrixXd r = net.forward(pe.encode(mesh.xy));
  EXPECT_TRUE((z - mesh.z0).transpose().isApprox(r, 1e-12));
  // Restricted prediction leaves other vertices at z0. Listed vertices agree to
  // rounding only: Eigen picks different product kernels for different batch widths.
  const std::vector<int> subset{0, 5, 7};
  const Eigen::VectorXd zs = predict_elevations(mesh, pe, net, subset);
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    const bool listed = i == 0 || i == 5 || i == 7;
    if (listed) {
      EXPECT_NEAR(zs(i), z(i), 1e-12 * std::max(1.0, std::abs(z(i))));
    } else {
      EXPECT_EQ(zs(i), mesh.z0(i));
    }
  }
}

TEST(PredictElevations, FitsConstantResidual) {
  const RoadMesh mesh = flat_mesh();
  const PositionalEncoding pe(mesh.bbox);
  std::mt19937_64 rng(21);
  MlpD net = make_elevation_mlp();
  net.init_uniform(rng);
  net.layers().back().weight.setZero();
  const Eigen::MatrixXd x = pe.encode(mesh.xy);
  std::vector<AdamMoments> moments;
  for (int step = 1; step <= 200; ++step) {
    MlpD::Cache cache;
    const Eigen::MatrixXd y = net.forward(x, &cache);
    const Eigen::MatrixXd u = 2.0 * (y.array() - 0.1).matrix() / static_cast<double>(y.cols());
    MlpD grad = net.zeros_like();
    net.backward(cache, u, grad);
    adam_update(net, grad, moments, 1e-3, step);
  }
  const Eigen::VectorXd z = predict_elevations(mesh, pe, net);
  EXPECT_LT((z.array() - 0.1).abs().maxCoeff(), 5e-3);
}

namespace {

ModelParams small_params(ColorModel model, std::uint64_t seed = 1) {
  ModelOptions opt;
  opt.color_model = model;
  return init_model_params(Eigen::AlignedBox2d(Eigen::Vector2d(0, -1), Eigen::Vector2d(4, 1)), 30,
                           {0, 3}, opt, seed);
}

}  // namespace

TEST(DecodeColors, ZeroDecoderGivesMidGray) {
  ModelParams p = small_params(ColorModel::PerCameraMlp);
  for (auto& d : p.decoders) d.set_zero();
  const Eigen::MatrixXd rgb = decode_colors(p.color_codes, 3, p);
  EXPECT_EQ(rgb.rows(), 3);
  EXPECT_EQ(rgb.cols(), 30);
  EXPECT_TRUE(rgb.isConstant(0.5, 0.0));
}

TEST(DecodeColors, OutputsStayInOpenUnitInterval) {
  ModelParams p = small_params(ColorModel::PerCameraMlp, 7);
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd codes = oracle::random_matrix(kColorCodeDim, 50, -5, 5, rng);
  for (int cam : {0, 3}) {
    const Eigen::MatrixXd rgb = decode_colors(codes, cam, p);
    EXPECT_GT(rgb.minCoeff(), 0.0);
    EXPECT_LT(rgb.maxCoeff(), 1.0);
  }
  EXPECT_THROW(decode_colors(codes, 1, p), InvalidInput);
}

TEST(DecodeColors, PerCameraDecodersLearnDifferentGains) {
  // One latent scene seen through gains 1.0 and 0.5.
  std::mt19937_64 rng(17);
  ModelParams p = small_params(ColorModel::PerCameraMlp, 17);
  const Eigen::MatrixXd target0 = oracle::random_matrix(3, 30, 0.3, 0.9, rng);
  const Eigen::MatrixXd target1 = 0.5 * target0;
  std::vector<AdamMoments> dec_moments[2], code_moments(1);
  for (int step = 1; step <= 3000; ++step) {
    Eigen::MatrixXd gcodes = Eigen::MatrixXd::Zero(kColorCodeDim, 30);
    for (int slot = 0; slot < 2; ++slot) {
      MlpD& dec = p.decoders[slot];
      MlpD::Cache cache;
      const Eigen::MatrixXd y = dec.forward(p.color_codes, &cache);
      const Eigen::MatrixXd u = 2.0 * (y - (slot ? target1 : target0)) / 90.0;
      MlpD grad = dec.zeros_like();
      gcodes += dec.backward(cache, u, grad);
      adam_update(dec, grad, dec_moments[slot], 0.005, step);
    }
    Eigen::Map<Eigen::ArrayXd> c(p.color_codes.data(), p.color_codes.size());
    adam_step(c, Eigen::Map<Eigen::ArrayXd>(gcodes.data(), gcodes.size()), code_moments[0],
              AdamConfig{0.01}, step);
  }
  const Eigen::MatrixXd y0 = decode_colors(p.color_codes, 0, p);
  const Eigen::MatrixXd y1 = decode_colors(p.color_codes, 3, p);
  EXPECT_LT((y0 - target0).cwiseAbs().maxCoeff(), 0.03);
  EXPECT_LT((y1 - target1).cwiseAbs().maxCoeff(), 0.03);
  const double ratio = y0.sum() / y1.sum();
  EXPECT_NEAR(ratio, 2.0, 0.1);
}

TEST(DecodeColorsWithEmbedding, IdenticalEmbeddingsGiveIdenticalOutputs) {
  ModelParams p = small_params(ColorModel::SharedMlpEmbedding, 3);
  p.camera_embeddings.col(1) = p.camera_embeddings.col(0);
  const Eigen::MatrixXd a = decode_colors_with_embedding(p.color_codes, 0, p);
  const Eigen::MatrixXd b = decode_colors_with_embedding(p.color_codes, 3, p);
  EXPECT_TRUE(a.isApprox(b, 0.0));
  EXPECT_GT(a.minCoeff(), 0.0);
  EXPECT_LT(a.maxCoeff(), 1.0);
}

TEST(DecodeColorsWithEmbedding, InputStacksCodeAndEmbedding) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd codes = oracle::random_matrix(kColorCodeDim, 4, -1, 1, rng);
  const Eigen::VectorXd e = oracle::random_matrix(kCameraEmbeddingDim, 1, -1, 1, rng);
  const Eigen::MatrixXd in = embedding_input(codes, e);
  ASSERT_EQ(in.rows(), kColorCodeDim + kCameraEmbeddingDim);
  EXPECT_TRUE(in.topRows(kColorCodeDim).isApprox(codes, 0.0));
  for (int c = 0; c < 4; ++c) EXPECT_TRUE(in.col(c).tail(kCameraEmbeddingDim).isApprox(e, 0.0));
}

TEST(ModelParams, InitializationIsSeededAndShaped) {
  const ModelParams a = small_params(ColorModel::PerCameraMlp, 5);
  const ModelParams b = small_params(ColorModel::PerCameraMlp, 5);
  const ModelParams c = small_params(ColorModel::PerCameraMlp, 6);
  EXPECT_TRUE(a.color_codes.isApprox(b.color_codes, 0.0));
  EXPECT_FALSE(a.color_codes.isApprox(c.color_codes, 0.0));
  EXPECT_EQ(a.sem_logits.rows(), kNumClasses);
  EXPECT_EQ(a.color_codes.rows(), kColorCodeDim);
  EXPECT_LE(a.sem_logits.cwiseAbs().maxCoeff(), 0.01);
  EXPECT_LE(a.color_codes.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_TRUE(a.elevation.layers().back().weight.isZero(0.0));
  EXPECT_EQ(a.decoders.size(), 2u);
  EXPECT_EQ(a.camera_slot(3), 1);
  EXPECT_THROW(a.camera_slot(2), InvalidInput);
}

TEST(ModelParams, TensorsCoverOnlyActiveParts) {
  ModelParams per_cam = small_params(ColorModel::PerCameraMlp);
  ModelParams direct = small_params(ColorModel::DirectRgb);
  ModelParams shared = small_params(ColorModel::SharedMlpEmbedding);
  auto count = [](ModelParams& p, ParamGroup g) {
    Eigen::Index n = 0;
    for (const auto& t : p.tensors()) n += t.group == g ? t.rows * t.cols : 0;
    return n;
  };
  EXPECT_EQ(count(per_cam, ParamGroup::ElevationMlp), make_elevation_mlp().parameter_count());
  EXPECT_EQ(count(per_cam, ParamGroup::ColorMlps), 2 * make_color_decoder().parameter_count());
  EXPECT_EQ(count(per_cam, ParamGroup::SemLogits), kNumClasses * 30);
  EXPECT_EQ(count(per_cam, ParamGroup::ColorCodes), kColorCodeDim * 30);
  EXPECT_EQ(count(direct, ParamGroup::ColorMlps), 0);
  EXPECT_EQ(count(direct, ParamGroup::ColorCodes), 3 * 30);
  EXPECT_EQ(count(shared, ParamGroup::ColorMlps),
            make_color_decoder(kColorCodeDim + kCameraEmbeddingDim).parameter_count() +
                kCameraEmbeddingDim * 2);
}
