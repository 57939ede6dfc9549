#include "support/oracles.hpp"
#include "ttrf/cloud.hpp"
#include "ttrf/error.hpp"
#include "ttrf/field.hpp"
#include "ttrf/triangulation.hpp"

#include <gtest/gtest.h>

using namespace ttrf;

namespace {

struct Scene {
  PointCloud cloud;
  TetMesh mesh;
};

Scene make_scene() {
  Scene s;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (const auto& p : oracle::random_points(60, 42)) s.cloud.push_back(p, Rgba{u(rng), u(rng), u(rng), 1.0f});
  s.cloud = augment_random_points(s.cloud, 0.5, 3);
  s.mesh = delaunay_triangulate(s.cloud.positions);
  return s;
}

FeatureField<double> random_field(Eigen::Index n, Eigen::Index f, unsigned seed) {
  FeatureField<double> field(n, f);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < field.features.size(); ++i) field.features.data()[i] = u(rng);
  return field;
}

Barycentric4 random_bary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Barycentric4 b;
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += (b[i] = u(rng));
  for (int i = 0; i < 4; ++i) b[i] /= s;
  return b;
}

}  // namespace

TEST(InitField, RgbaSeedAndNoiseRange) {
  const auto s = make_scene();
  const auto field = init_field<float>(s.mesh, s.cloud, 64, 5);
  ASSERT_EQ(field.num_vertices(), static_cast<Eigen::Index>(s.cloud.size()));
  ASSERT_EQ(field.dim(), 64);
  float max_abs = 0.0f;
  for (Eigen::Index v = 0; v < field.num_vertices(); ++v) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(field.features(v, c), s.cloud.colors[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)]);
    for (Eigen::Index k = 4; k < 64; ++k) max_abs = std::max(max_abs, std::abs(field.features(v, k)));
  }
  EXPECT_LE(max_abs, 1e-4f);
  EXPECT_GT(max_abs, 5e-5f);
  EXPECT_TRUE(field.grad.isZero());
}

TEST(InitField, OriginalAndSyntheticAlpha) {
  PointCloud c;
  c.push_back(Point3(0, 0, 0), Rgba{1, 0, 0, 1});
  for (const auto& p : oracle::random_points(10, 43)) c.push_back(p, Rgba{0.5f, 0.5f, 0.5f, 1.0f});
  c = augment_random_points(c, 0.5, 1);
  const auto mesh = delaunay_triangulate(c.positions);
  const auto field = init_field<float>(mesh, c, 8, 1);
  EXPECT_EQ(field.features(0, 0), 1.0f);
  EXPECT_EQ(field.features(0, 1), 0.0f);
  EXPECT_EQ(field.features(0, 2), 0.0f);
  EXPECT_EQ(field.features(0, 3), 1.0f);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.synthetic[i]) EXPECT_EQ(field.features(static_cast<Eigen::Index>(i), 3), 0.0f);
  }
}

TEST(InitField, DeterministicAndSizeChecked) {
  const auto s = make_scene();
  const auto a = init_field<float>(s.mesh, s.cloud, 16, 7);
  const auto b = init_field<float>(s.mesh, s.cloud, 16, 7);
  EXPECT_EQ(a.features, b.features);
  PointCloud shorter = s.cloud;
  shorter.positions.pop_back();
  shorter.colors.pop_back();
  shorter.synthetic.pop_back();
  try {
    (void)init_field<float>(s.mesh, shorter, 16, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
}

TEST(Interpolate, OneHotAndUniform) {
  auto field = random_field(10, 6, 44);
  const Tetra t{{1, 4, 7, 9}};
  Barycentric4 hot;
  hot[2] = 1.0;
  EXPECT_EQ(field.interpolate(t, hot), field.features.row(7).transpose());
  Barycentric4 even;
  even.w = {0.25, 0.25, 0.25, 0.25};
  const Eigen::VectorXd mean =
      (field.features.row(1) + field.features.row(4) + field.features.row(7) + field.features.row(9)).transpose() / 4.0;
  EXPECT_LT((field.interpolate(t, even) - mean).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Interpolate, MatchesDotProductOracleInFloat) {
  FeatureField<float> field(12, 64);
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (Eigen::Index i = 0; i < field.features.size(); ++i) field.features.data()[i] = u(rng);
  for (int trial = 0; trial < 100; ++trial) {
    const Tetra t{{static_cast<VertexId>(rng() % 12), static_cast<VertexId>(rng() % 12),
                   static_cast<VertexId>(rng() % 12), static_cast<VertexId>(rng() % 12)}};
    const auto b = random_bary(rng);
    const auto got = field.interpolate(t, b);
    for (Eigen::Index j = 0; j < 64; ++j) {
      double ref = 0.0;
      for (int i = 0; i < 4; ++i) ref += b[i] * static_cast<double>(field.features(t[i], j));
      EXPECT_NEAR(got[j], ref, 1e-6);
    }
  }
}

TEST(Interpolate, Linearity) {
  auto field = random_field(8, 5, 46);
  std::mt19937_64 rng(47);
  const Tetra t{{0, 3, 5, 6}};
  for (int k = 0; k < 50; ++k) {
    const auto b1 = random_bary(rng);
    const auto b2 = random_bary(rng);
    const double a = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto mix = Barycentric4::lerp(b2, b1, a);
    const Eigen::VectorXd lhs = field.interpolate(t, mix);
    const Eigen::VectorXd rhs = a * field.interpolate(t, b1) + (1 - a) * field.interpolate(t, b2);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Interpolate, ContinuousAcrossSharedFaces) {
  const auto s = make_scene();
  const auto field = init_field<float>(s.mesh, s.cloud, 16, 9);
  std::mt19937_64 rng(48);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (TetId a = 0; a < s.mesh.num_tets(); ++a) {
    for (int slot = 0; slot < 4; ++slot) {
      const TetId b = s.mesh.neighbors[a][static_cast<std::size_t>(slot)];
      if (b == kBoundary || b < a) continue;
      double p = u(rng), q = u(rng);
      if (p + q > 1) p = 1 - p, q = 1 - q;
      const auto la = lift_barycentric(p, q, slot);
      const Point3 x = reconstruct(la, s.mesh.corners(a));
      const auto lb = barycentric_coords(x, s.mesh.corners(b));
      const Eigen::VectorXf fa = field.interpolate(s.mesh.tets[a], la);
      const Eigen::VectorXf fb = field.interpolate(s.mesh.tets[b], lb);
      EXPECT_LT((fa - fb).cwiseAbs().maxCoeff(), 1e-5f);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(InterpolateBackward, OneHotAndAccumulation) {
  FeatureField<double> field(6, 3);
  const Tetra t{{0, 2, 3, 5}};
  Barycentric4 hot;
  hot[1] = 1.0;
  const Eigen::Vector3d g(1.0, -2.0, 0.5);
  field.interpolate_backward(t, hot, g);
  EXPECT_EQ(field.grad.row(2).transpose(), g);
  EXPECT_EQ(field.grad.norm(), g.norm());
  field.interpolate_backward(t, hot, g);
  EXPECT_EQ(field.grad.row(2).transpose(), 2.0 * g);
  field.zero_grad();
  EXPECT_TRUE(field.grad.isZero());
}

TEST(InterpolateBackward, FiniteDifference) {
  auto field = random_field(9, 4, 49);
  std::mt19937_64 rng(50);
  const Tetra t{{8, 1, 4, 2}};
  const auto b = random_bary(rng);
  const double h = 1e-3;
  for (int i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      // Output j responds to features[v_i][j] with slope lambda_i.
      auto up = field, down = field;
      up.features(t[i], j) += h;
      down.features(t[i], j) -= h;
      const double fd = (up.interpolate(t, b)[j] - down.interpolate(t, b)[j]) / (2 * h);
      FeatureField<double> g(9, 4);
      Eigen::Vector4d e = Eigen::Vector4d::Zero();
      e[j] = 1.0;
      g.interpolate_backward(t, b, e);
      EXPECT_NEAR(fd, b[i], 1e-4 * std::max(1.0, std::abs(b[i])));
      EXPECT_NEAR(g.grad(t[i], j), b[i], 1e-15);
    }
  }
}

TEST(InterpolateBackward, DotProductTest) {
  auto field = random_field(20, 7, 51);
  std::mt19937_64 rng(52);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tetra t{{static_cast<VertexId>(rng() % 20), static_cast<VertexId>(rng() % 20),
                   static_cast<VertexId>(rng() % 20), static_cast<VertexId>(rng() % 20)}};
    const auto b = random_bary(rng);
    Eigen::VectorXd g(7);
    for (auto& x : g) x = n(rng);
    Eigen::MatrixXd dF(20, 7);
    for (Eigen::Index k = 0; k < dF.size(); ++k) dF.data()[k] = n(rng);
    FeatureField<double> pert(20, 7);
    pert.features = dF;
    // <interp(dF), g> == <dF, backward(g)>
    const double lhs = pert.interpolate(t, b).dot(g);
    field.zero_grad();
    field.interpolate_backward(t, b, g);
    const double rhs = (dF.array() * field.grad.array()).sum();
    EXPECT_NEAR(lhs, rhs, 1e-5);
  }
}
