#include <gtest/gtest.h>

#include <array>
#include <random>

#include "oracles.hpp"
#include "roadmesh/renderer.hpp"

using namespace roadmesh;

namespace {

Camera vga() { return Camera::from_intrinsics(0, 100, 100, 320, 240, 640, 480); }

/// Camera `height` metres above (x, y, 0) looking straight down, image x along world x.
Eigen::Isometry3d top_down(double x, double y, double height) {
  Eigen::Isometry3d world_from_camera = Eigen::Isometry3d::Identity();
  Eigen::Matrix3d r;
  r.col(0) = Eigen::Vector3d(1, 0, 0);
  r.col(1) = Eigen::Vector3d(0, -1, 0);
  r.col(2) = Eigen::Vector3d(0, 0, -1);
  world_from_camera.linear() = r;
  world_from_camera.translation() = Eigen::Vector3d(x, y, height);
  return world_from_camera.inverse();
}

}  // namespace

TEST(Project, OpticalAxisHitsPrincipalPoint) {
  const auto p = project(vga(), Eigen::Isometry3d::Identity(), {0, 0, 5});
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(p->u, 320.0);
  EXPECT_DOUBLE_EQ(p->v, 240.0);
  EXPECT_DOUBLE_EQ(p->depth, 5.0);
  EXPECT_EQ(p->col, 320);
  EXPECT_EQ(p->row, 240);
}

TEST(Project, LateralOffsetScalesWithFocalLength) {
  const auto p = project(vga(), Eigen::Isometry3d::Identity(), {1, 0, 5});
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(p->u, 340.0);
}

TEST(Project, RejectsPointsBehindOrBeforeNearPlane) {
  EXPECT_FALSE(project(vga(), Eigen::Isometry3d::Identity(), {0, 0, -1}).has_value());
  EXPECT_FALSE(project(vga(), Eigen::Isometry3d::Identity(), {0, 0, 0.05}).has_value());
  EXPECT_FALSE(project(vga(), Eigen::Isometry3d::Identity(), {100, 0, 5}).has_value());
}

TEST(Project, RoundsHalfUp) {
  // u = x + 1, v = y + 1 at unit depth.
  const Camera cam = Camera::from_intrinsics(0, 1, 1, 1, 1, 10, 10);
  const auto a = project(cam, Eigen::Isometry3d::Identity(), {1.5, 2.49, 1});
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->col, 3);
  EXPECT_EQ(a->row, 3);
  EXPECT_FALSE(project(cam, Eigen::Isometry3d::Identity(), {-1.5000001, 0, 1}).has_value());
  EXPECT_TRUE(project(cam, Eigen::Isometry3d::Identity(), {-1.5, 0, 1}).has_value());
  EXPECT_FALSE(project(cam, Eigen::Isometry3d::Identity(), {8.5, 0, 1}).has_value());
}

TEST(Project, AppliesTheExtrinsics) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translation() = Eigen::Vector3d(-1, 0, 2);
  const auto p = project(vga(), t, {1, 0, 3});
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(p->u, 320.0);
  EXPECT_DOUBLE_EQ(p->depth, 5.0);
}

TEST(Splat, NearerVertexWinsThePixel) {
  Eigen::Matrix2Xd xy(2, 2);
  xy << 0, 0, 0, 0;
  Eigen::VectorXd z(2);
  z << 6, 4;  // identity pose: camera-frame depth equals z
  const std::array<int, 2> both{0, 1};
  const SplatBuffer s = splat_vertices(vga(), Eigen::Isometry3d::Identity(), xy, z, both);
  EXPECT_EQ(s.vertex_of_pixel(320, 240), 1);
  EXPECT_DOUBLE_EQ(s.depth(320, 240), 4.0);
  EXPECT_EQ(s.covered, 1u);
  const std::array<int, 2> reversed{1, 0};
  EXPECT_EQ(splat_vertices(vga(), Eigen::Isometry3d::Identity(), xy, z, reversed).vertex_of_pixel(320, 240), 1);
}

TEST(Splat, TiesGoToTheFirstListedVertex) {
  Eigen::Matrix2Xd xy = Eigen::Matrix2Xd::Zero(2, 3);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(3, 5.0);
  const std::array<int, 3> order{2, 0, 1};
  EXPECT_EQ(splat_vertices(vga(), Eigen::Isometry3d::Identity(), xy, z, order).vertex_of_pixel(320, 240), 2);
}

TEST(RenderView, EmptyMeshCoversNothing) {
  const RoadMesh mesh = make_mesh(Eigen::Matrix2Xd(2, 0), Eigen::VectorXd(0), {}, 0.1);
  const RenderedView v = render_view(mesh, mesh.z0, Eigen::MatrixXd(3, 0), Eigen::MatrixXd(5, 0), vga(),
                                     top_down(0, 0, 5));
  for (auto c : v.coverage.pixels) EXPECT_EQ(c, 0);
  for (auto s : v.sem.pixels) EXPECT_EQ(s, kNoLabel);
}

TEST(RenderView, ShadesWinnersWithTheirAttributes) {
  RoadMesh mesh = oracle::patch_mesh(4, 1, 0.2);
  const Eigen::Index n = mesh.vertex_count();
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd rgb = oracle::random_matrix(3, n, 0, 1, rng);
  const Eigen::MatrixXd logits = oracle::random_matrix(5, n, -1, 1, rng);
  const Camera cam = Camera::from_intrinsics(0, 40, 40, 20, 15, 40, 30);
  const RenderedView v = render_view(mesh, mesh.z0, rgb, logits, cam, top_down(2, 0, 4));
  std::size_t covered = 0;
  for (int y = 0; y < v.height(); ++y) {
    for (int x = 0; x < v.width(); ++x) {
      const int w = v.vertex_of_pixel(x, y);
      if (w < 0) {
        EXPECT_EQ(v.coverage(x, y), 0);
        continue;
      }
      ++covered;
      EXPECT_EQ(v.coverage(x, y), 1);
      for (int c = 0; c < 3; ++c) EXPECT_EQ(v.rgb(x, y, c), rgb(c, w));
      Eigen::Index best;
      logits.col(w).maxCoeff(&best);
      EXPECT_EQ(v.sem(x, y), best);
    }
  }
  EXPECT_GT(covered, 100u);
  EXPECT_THROW(render_view(mesh, mesh.z0, rgb.leftCols(3), logits, cam, top_down(2, 0, 4)), InvalidInput);
}

TEST(RenderView, SubsetRestrictsTheSplat) {
  const RoadMesh mesh = oracle::patch_mesh(4, 1, 0.2);
  const Eigen::Index n = mesh.vertex_count();
  const Camera cam = Camera::from_intrinsics(0, 40, 40, 20, 15, 40, 30);
  const std::vector<int> subset{3, 10, 40};
  const RenderedView v = render_view(mesh, mesh.z0, Eigen::MatrixXd::Zero(3, n), Eigen::MatrixXd::Zero(5, n),
                                     cam, top_down(2, 0, 4), subset);
  for (int w : v.vertex_of_pixel.pixels) EXPECT_TRUE(w == -1 || w == 3 || w == 10 || w == 40);
}

TEST(RenderView, DenseTopDownViewIsFullyCoveredAndMatchesNearestSurface) {
  // 0.1 m edges under a camera with 0.1 m pixels.
  const RoadMesh mesh = oracle::patch_mesh(20, 5, 0.1);
  const Camera cam = Camera::from_intrinsics(0, 100, 100, 31.5, 31.5, 64, 64);
  const Eigen::Isometry3d pose = top_down(10, 0, 10);
  const SplatBuffer s = splat_vertices(cam, pose, mesh.xy, mesh.z0, {});
  EXPECT_GE(static_cast<double>(s.covered) / cam.width / cam.height, 0.99);
  const oracle::PixelOracle o = oracle::brute_force_nearest_surface(cam, pose, mesh.xy, 0.0);
  std::size_t agree = 0;
  for (std::size_t k = 0; k < s.vertex_of_pixel.pixels.size(); ++k) {
    agree += s.vertex_of_pixel.pixels[k] >= 0 && s.vertex_of_pixel.pixels[k] == o.winner.pixels[k];
  }
  EXPECT_GE(static_cast<double>(agree) / s.covered, 0.99);
}

TEST(BuildRoadMask, SelectsSurfaceClasses) {
  LabelImage road(4, 3, 1, static_cast<std::uint8_t>(SemanticClass::Road));
  for (auto m : build_road_mask(road).pixels) EXPECT_EQ(m, 1);
  LabelImage bg(4, 3, 1, static_cast<std::uint8_t>(SemanticClass::Background));
  for (auto m : build_road_mask(bg).pixels) EXPECT_EQ(m, 0);
  LabelImage checker(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker(x, y) = (x + y) % 2 ? kFirstDynamicLabel + 1 : 3;
  const MaskImage m = build_road_mask(checker);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(m(x, y), (x + y) % 2 ? 0 : 1);
  LabelImage all(5, 1, 1);
  for (int c = 0; c < 5; ++c) all(c, 0) = static_cast<std::uint8_t>(c);
  const MaskImage ma = build_road_mask(all);
  EXPECT_EQ(ma.pixels, (std::vector<std::uint8_t>{1, 1, 1, 1, 0}));
}

TEST(ArgmaxClass, LowestIndexWinsTies) {
  Eigen::VectorXd l(5);
  l << 0.1, 0.7, 0.7, -1, 0.2;
  EXPECT_EQ(argmax_class(l), 1);
}
