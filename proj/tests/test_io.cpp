#include "support/oracles.hpp"
#include "support/tempdir.hpp"
#include "ttrf/camera.hpp"
#include "ttrf/dataset.hpp"
#include "ttrf/dense_grid.hpp"
#include "ttrf/error.hpp"
#include "ttrf/fixture.hpp"
#include "ttrf/image.hpp"
#include "ttrf/metrics.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "json.hpp"

using namespace ttrf;
using testing_support::TempDir;

namespace {

Image random_image(int w, int h, unsigned seed) {
  Image img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : img.data) v = u(rng);
  for (std::size_t i = 3; i < img.data.size(); i += 4) img.data[i] = 1.0f;
  return img;
}

Eigen::Matrix4d random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Point3 eye = 4.0 * Vec3(g(rng), g(rng), g(rng)).normalized();
  return look_at(eye, Point3::Zero(), Vec3::UnitZ());
}

void write_frames(const std::filesystem::path& file, double angle, const std::vector<std::pair<std::string, Eigen::Matrix4d>>& frames) {
  nlohmann::json j;
  j["camera_angle_x"] = angle;
  for (const auto& [path, m] : frames) {
    nlohmann::json f;
    f["file_path"] = path;
    for (int r = 0; r < 4; ++r) {
      f["transform_matrix"].push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    }
    j["frames"].push_back(f);
  }
  std::ofstream(file) << j.dump(2);
}

}  // namespace

TEST(Png, RoundTripRgba) {
  const TempDir dir;
  Image img(5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 256) / 255.0f;
  write_png(dir / "a.png", img);
  const auto back = read_png(dir / "a.png");
  ASSERT_EQ(back.width, 5);
  ASSERT_EQ(back.height, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 1e-6f);
  write_png(dir / "b.png", img, false);
  const auto rgb = read_png(dir / "b.png");
  EXPECT_EQ(rgb.at(2, 1)[3], 1.0f);
  EXPECT_NEAR(rgb.at(2, 1)[0], img.at(2, 1)[0], 1e-6f);
}

TEST(Png, MissingFile) {
  try {
    (void)read_png("/nonexistent/x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingImage);
  }
}

TEST(Image, CompositeOverBackground) {
  Image img(1, 1);
  float* p = img.at(0, 0);
  p[0] = 1.0f, p[1] = 0.0f, p[2] = 0.5f, p[3] = 0.25f;
  const auto c = img.rgb_over(0, 0, Eigen::Vector3d(1, 1, 1));
  EXPECT_NEAR(c[0], 1.0, 1e-7);
  EXPECT_NEAR(c[1], 0.75, 1e-7);
  EXPECT_NEAR(c[2], 0.875, 1e-7);
  EXPECT_EQ(img.composited(Eigen::Vector3d::Zero()).at(0, 0)[3], 1.0f);
}

TEST(Camera, FocalFromFov) {
  const auto cam = Camera::from_fov(M_PI / 2, 800, 600, Eigen::Matrix4d::Identity());
  EXPECT_NEAR(cam.fx, 400.0, 1e-9);
  EXPECT_NEAR(cam.fy, 400.0, 1e-9);
  EXPECT_EQ(cam.cx, 400.0);
  EXPECT_EQ(cam.cy, 300.0);
}

TEST(Camera, PrincipalPixelLooksDownMinusZ) {
  std::mt19937_64 rng(81);
  // Odd sizes put a pixel centre exactly on the principal point.
  const auto cam = Camera::from_fov(0.8, 65, 33, random_pose(rng));
  const Ray r = pixel_ray(cam, 32, 16);
  EXPECT_LT((r.direction + cam.rotation().col(2)).norm(), 1e-12);
  EXPECT_LT((r.origin - cam.center()).norm(), 1e-15);
}

TEST(Camera, SymmetricPixelsMirror) {
  const auto cam = Camera::from_fov(0.9, 64, 48, Eigen::Matrix4d::Identity());
  for (int x = 0; x < 64; x += 7) {
    const Vec3 a = pixel_ray(cam, x, 10).direction;
    const Vec3 b = pixel_ray(cam, 63 - x, 10).direction;
    EXPECT_NEAR(a.x(), -b.x(), 1e-12);
    EXPECT_NEAR(a.y(), b.y(), 1e-12);
    EXPECT_NEAR(a.z(), b.z(), 1e-12);
    const Vec3 c = pixel_ray(cam, x, 47 - 10).direction;
    EXPECT_NEAR(a.y(), -c.y(), 1e-12);
  }
}

TEST(Camera, ProjectRoundTrip) {
  std::mt19937_64 rng(82);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto cam = Camera::from_fov(0.3 + u(rng), 120, 90, random_pose(rng));
    const int px = static_cast<int>(u(rng) * 120), py = static_cast<int>(u(rng) * 90);
    const Ray r = pixel_ray(cam, px, py);
    const auto uv = project(cam, r.at(0.5 + 5 * u(rng)));
    EXPECT_NEAR(uv.x(), px, 1e-6);
    EXPECT_NEAR(uv.y(), py, 1e-6);
  }
}

TEST(Camera, Errors) {
  const auto cam = Camera::from_fov(0.9, 8, 8, Eigen::Matrix4d::Identity());
  EXPECT_THROW((void)pixel_ray(cam, 8, 0), Error);
  EXPECT_THROW((void)pixel_ray(cam, 0, -1), Error);
  EXPECT_THROW((void)project(cam, Point3(0, 0, 1)), Error);
}

TEST(Dataset, LoadsSplitsAndIntrinsics) {
  const TempDir dir;
  std::filesystem::create_directories(dir / "train");
  std::filesystem::create_directories(dir / "test");
  std::mt19937_64 rng(83);
  const auto p0 = random_pose(rng), p1 = random_pose(rng), p2 = random_pose(rng);
  write_png(dir / "train/r_0.png", random_image(10, 6, 1));
  write_png(dir / "train/r_1.png", random_image(10, 6, 2));
  write_png(dir / "test/r_0.png", random_image(10, 6, 3));
  write_frames(dir / "transforms_train.json", M_PI / 2, {{"./train/r_0", p0}, {"./train/r_1.png", p1}});
  write_frames(dir / "transforms_test.json", M_PI / 2, {{"./test/r_0", p2}});
  const auto ds = load_nerf_transforms(dir.path());
  ASSERT_EQ(ds.train.size(), 2u);
  ASSERT_EQ(ds.test.size(), 1u);
  EXPECT_NEAR(ds.train[0].camera.fx, 5.0, 1e-12);
  EXPECT_EQ(ds.train[1].camera.width, 10);
  EXPECT_EQ(ds.train[1].camera.height, 6);
  EXPECT_EQ(ds.train[1].camera.pose, p1);
  EXPECT_EQ(ds.test[0].camera.pose, p2);
  EXPECT_EQ(ds.train[0].image.width, 10);
}

TEST(Dataset, CornerRaysMatchPinholeOracle) {
  const TempDir dir;
  FixtureOptions opt;
  opt.train_views = 3;
  opt.test_views = 1;
  opt.width = 32;
  opt.height = 24;
  opt.points = 100;
  make_sphere_fixture(dir.path(), opt);
  const auto ds = load_nerf_transforms(dir.path());
  ASSERT_EQ(ds.train.size(), 3u);
  // The pose is read back independently from the JSON text.
  std::ifstream in(dir / "transforms_train.json");
  const auto j = nlohmann::json::parse(in);
  const double angle = j["camera_angle_x"].get<double>();
  for (std::size_t v = 0; v < 3; ++v) {
    Eigen::Matrix4d c2w;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) c2w(r, c) = j["frames"][v]["transform_matrix"][r][c].get<double>();
    }
    const double f = 0.5 * 32 / std::tan(0.5 * angle);
    Eigen::Matrix3d K;
    K << f, 0, 16, 0, f, 12, 0, 0, 1;
    for (auto [px, py] : {std::pair{0, 0}, {31, 0}, {0, 23}, {31, 23}}) {
      const Vec3 ref = oracle::pinhole_direction(K, c2w, px, py);
      const Vec3 got = pixel_ray(ds.train[v].camera, px, py).direction;
      EXPECT_LT((got - ref).norm(), 1e-9);
    }
  }
}

TEST(Dataset, Errors) {
  const TempDir dir;
  EXPECT_THROW((void)load_nerf_transforms(dir.path()), Error);
  std::ofstream(dir / "transforms_train.json") << "{ not json";
  try {
    (void)load_nerf_transforms(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  write_frames(dir / "transforms_train.json", 0.7, {{"./train/nothing", Eigen::Matrix4d::Identity()}});
  try {
    (void)load_nerf_transforms(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingImage);
  }
}

TEST(Psnr, ClosedFormsAndSymmetry) {
  const Image a = random_image(16, 16, 4);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  Image gray(8, 8, 0.5f), shifted(8, 8, 0.6f);
  EXPECT_NEAR(psnr(gray, shifted), 20.0, 1e-5);
  const Image b = random_image(16, 16, 5);
  EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
  double mse = 0;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.at(x, y)[c]) - b.at(x, y)[c];
        mse += d * d;
      }
    }
  }
  mse /= 16 * 16 * 3;
  EXPECT_NEAR(psnr(a, b), 10 * std::log10(1 / mse), 1e-9);
  EXPECT_THROW((void)psnr(a, gray), Error);
}

TEST(Ssim, IdentityConstantAndOracle) {
  const Image a = random_image(24, 20, 6);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  Image half(16, 16, 0.5f);
  Image neg = half;
  for (std::size_t i = 0; i < neg.data.size(); ++i) neg.data[i] = 1.0f - half.data[i];
  EXPECT_NEAR(ssim(half, neg), 1.0, 1e-12);
  const Image b = random_image(24, 20, 7);
  double ref = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x, y;
    for (int yy = 0; yy < 20; ++yy) {
      for (int xx = 0; xx < 24; ++xx) {
        x.push_back(a.at(xx, yy)[c]);
        y.push_back(b.at(xx, yy)[c]);
      }
    }
    ref += oracle::ssim_channel(x, y, 24, 20) / 3.0;
  }
  EXPECT_NEAR(ssim(a, b), ref, 1e-6);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_THROW((void)ssim(a, half), Error);
  EXPECT_THROW((void)ssim(Image(8, 8), Image(8, 8)), Error);
}

TEST(DenseGrid, ResolutionRule) {
  EXPECT_EQ(grid_resolution_for(1), 2);
  EXPECT_EQ(grid_resolution_for(8), 2);
  EXPECT_EQ(grid_resolution_for(9), 3);
  EXPECT_EQ(grid_resolution_for(7500), 20);
  EXPECT_EQ(grid_resolution_for(8000), 20);
  EXPECT_EQ(grid_resolution_for(8001), 21);
  for (std::size_t n : {2u, 100u, 999u, 1000u, 1001u, 123456u}) {
    const int r = grid_resolution_for(n);
    EXPECT_GE(static_cast<std::size_t>(r) * r * r, n);
    EXPECT_LT(static_cast<std::size_t>(r - 1) * (r - 1) * (r - 1), std::max<std::size_t>(n, 2));
  }
}

TEST(DenseGrid, NodeCellCentreAndOracle) {
  DenseGridField<double> g;
  g.resolution = 4;
  g.lo = Point3(-1, 0, 2);
  g.hi = Point3(2, 3, 5);
  g.field = FeatureField<double>(64, 2);
  std::mt19937_64 rng(84);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < g.field.features.size(); ++i) g.field.features.data()[i] = u(rng);
  // Node (1, 2, 3) sits at lo + (1, 2, 3).
  const auto at_node = dense_grid_interpolate(g, Point3(0, 2, 5));
  EXPECT_LT((at_node - g.field.features.row(static_cast<Eigen::Index>(g.node(1, 2, 3))).transpose()).norm(), 1e-12);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int c = 0; c < 8; ++c) mean += g.field.features.row(static_cast<Eigen::Index>(g.node(c & 1, (c >> 1) & 1, c >> 2))).transpose() / 8.0;
  EXPECT_LT((dense_grid_interpolate(g, Point3(-0.5, 0.5, 2.5)) - mean).norm(), 1e-12);
  std::vector<double> col0(64);
  for (int i = 0; i < 64; ++i) col0[static_cast<std::size_t>(i)] = g.field.features(i, 0);
  for (int k = 0; k < 200; ++k) {
    const Point3 p(-1 + 3 * u(rng), 3 * u(rng), 2 + 3 * u(rng));
    EXPECT_NEAR(dense_grid_interpolate(g, p)[0], oracle::trilinear(col0, 4, g.lo, g.hi, p), 1e-6);
  }
  EXPECT_NEAR(dense_grid_interpolate(g, g.hi)[0], col0[63], 1e-12);
  try {
    (void)dense_grid_interpolate(g, Point3(2.5, 1, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBox);
  }
}

TEST(DenseGrid, BuiltFromCloud) {
  PointCloud cloud;
  for (const auto& p : oracle::random_points(100, 85)) cloud.push_back(p, Rgba{0.25f, 0.5f, 0.75f, 1.0f});
  const auto g = make_dense_grid<float>(cloud, 16, 3);
  EXPECT_EQ(g.resolution, 5);
  EXPECT_EQ(g.field.num_vertices(), 125);
  for (Eigen::Index i = 0; i < 125; ++i) {
    EXPECT_EQ(g.field.features(i, 2), 0.75f);
    EXPECT_LE(g.field.features.row(i).tail(12).cwiseAbs().maxCoeff(), 1e-4f);
  }
  for (const auto& p : cloud.positions) EXPECT_NO_THROW((void)dense_grid_interpolate(g, p));
}

TEST(DenseGrid, ViewTraceIsTheBoxSlab) {
  DenseGridField<float> g;
  g.resolution = 3;
  g.lo = Point3(0, 0, 0);
  g.hi = Point3(1, 1, 1);
  g.field = FeatureField<float>(27, 4);
  const GridFieldView<float> view(g);
  const auto tr = view.trace(Ray::make({-1, 0.5, 0.5}, {1, 0, 0}));
  ASSERT_EQ(tr.segments.size(), 1u);
  EXPECT_NEAR(tr.segments[0].t_in, 1.0, 1e-12);
  EXPECT_NEAR(tr.segments[0].t_out, 2.0, 1e-12);
  EXPECT_TRUE(view.trace(Ray::make({-1, 2, 0.5}, {1, 0, 0})).empty());
}

TEST(Fixture, SphereRenderAndPoints) {
  const SphereScene scene;
  const auto cam = Camera::from_fov(M_PI / 4, 32, 32, look_at({0, 0, 4}, {0, 0, 0}, {0, 1, 0}));
  const auto img = render_sphere(scene, cam, 2);
  EXPECT_EQ(img.at(16, 16)[3], 1.0f);
  EXPECT_EQ(img.at(0, 0)[3], 0.0f);
  const auto hit = scene.intersect(Ray::make({0, 0, 4}, {0, 0, -1}));
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(*hit, 3.0, 1e-12);
  const auto pts = sample_sphere_points(scene, 500, 1);
  ASSERT_EQ(pts.size(), 500u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts.positions[i].norm(), 1.0, 1e-6);
    EXPECT_EQ(pts.colors[i][3], 1.0f);
  }
}
