#include "ttrf/fixture.hpp"

#include "ttrf/dataset.hpp"
#include "ttrf/error.hpp"
#include "ttrf/random.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace ttrf {

Eigen::Vector3d SphereScene::albedo(const Vec3& n) const {
  const double band = 0.08 * std::sin(5.0 * std::atan2(n.y(), n.x()));
  Eigen::Vector3d c(0.55 + 0.35 * n.x() + band, 0.55 + 0.35 * n.y(), 0.55 + 0.35 * n.z() - band);
  const double shade = 0.8 + 0.2 * n.dot(Vec3(1.0, 1.0, 1.0).normalized());
  return (c * shade).cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<double> SphereScene::intersect(const Ray& ray) const {
  const Vec3 oc = ray.origin - center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t < ray.t_min) t = -b + root;
  if (t < ray.t_min || t > ray.t_max) return std::nullopt;
  return t;
}

Image render_sphere(const SphereScene& scene, const Camera& cam, int supersample) {
  if (supersample < 1) throw Error(ErrorCode::InvalidArgument, "supersample must be positive");
  Image img(cam.width, cam.height);
  const double inv = 1.0 / supersample;
  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      int hits = 0;
      for (int sy = 0; sy < supersample; ++sy) {
        for (int sx = 0; sx < supersample; ++sx) {
          const double u = px + (sx + 0.5) * inv;
          const double v = py + (sy + 0.5) * inv;
          const Vec3 local((u - cam.cx) / cam.fx, -(v - cam.cy) / cam.fy, -1.0);
          const Ray ray = Ray::make(cam.center(), cam.rotation() * local);
          if (auto t = scene.intersect(ray)) {
            const Vec3 n = (ray.at(*t) - scene.center).normalized();
            sum += scene.albedo(n);
            ++hits;
          }
        }
      }
      float* p = img.at(px, py);
      if (hits > 0) {
        const Eigen::Vector3d c = sum / hits;
        for (int k = 0; k < 3; ++k) p[k] = static_cast<float>(c[k]);
      }
      p[3] = static_cast<float>(hits) / static_cast<float>(supersample * supersample);
    }
  }
  return img;
}

PointCloud sample_sphere_points(const SphereScene& scene, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5f3e);
  std::normal_distribution<double> normal;
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 d(normal(rng), normal(rng), normal(rng));
    while (d.norm() < 1e-12) d = Vec3(normal(rng), normal(rng), normal(rng));
    d.normalize();
    const Eigen::Vector3d c = scene.albedo(d);
    // Quantized like colours stored in a PLY file.
    Rgba rgba{};
    for (int k = 0; k < 3; ++k) rgba[static_cast<std::size_t>(k)] = static_cast<float>(std::lround(c[k] * 255.0) / 255.0);
    rgba[3] = 1.0f;
    cloud.push_back(scene.center + scene.radius * d, rgba);
  }
  return cloud;
}

std::vector<Eigen::Matrix4d> fixture_poses(int count, double distance, bool fibonacci, std::uint64_t seed) {
  std::vector<Eigen::Matrix4d> poses;
  Rng rng = make_rng(seed, fibonacci ? 0xf1b0 : 0x7e57);
  std::normal_distribution<double> normal;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    Vec3 d;
    if (fibonacci) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      d = Vec3(r * std::cos(golden * i), r * std::sin(golden * i), z);
    } else {
      do {
        d = Vec3(normal(rng), normal(rng), normal(rng));
      } while (d.norm() < 1e-9);
      d.normalize();
    }
    poses.push_back(look_at(distance * d, Point3::Zero(), Vec3::UnitZ()));
  }
  return poses;
}

void make_sphere_fixture(const std::filesystem::path& dir, const FixtureOptions& opt) {
  const SphereScene scene;
  std::filesystem::create_directories(dir / "train");
  std::filesystem::create_directories(dir / "test");
  auto write_split = [&](const char* split, int count, bool fibonacci) {
    std::vector<View> views;
    const auto poses = fixture_poses(count, opt.camera_distance, fibonacci, opt.seed);
    for (int i = 0; i < count; ++i) {
      View v;
      char name[32];
      std::snprintf(name, sizeof name, "r_%03d", i);
      v.name = name;
      v.camera = Camera::from_fov(opt.camera_angle_x, opt.width, opt.height, poses[static_cast<std::size_t>(i)]);
      write_png(dir / split / (v.name + ".png"), render_sphere(scene, v.camera, opt.supersample));
      views.push_back(std::move(v));
    }
    write_transforms_file(dir / (std::string("transforms_") + split + ".json"), opt.camera_angle_x, views);
  };
  write_split("train", opt.train_views, true);
  write_split("test", opt.test_views, false);
  write_ply(dir / "points.ply", sample_sphere_points(scene, opt.points, opt.seed));
}

}  // namespace ttrf
