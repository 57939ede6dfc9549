#pragma once

#include "ttrf/camera.hpp"
#include "ttrf/cloud.hpp"
#include "ttrf/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>

namespace ttrf {

/// Analytic test scene: an opaque sphere with a smooth colour pattern and a
/// fixed, view-independent shading term.
struct SphereScene {
  Point3 center = Point3::Zero();
  double radius = 1.0;

  /// Colour of the surface point with outward unit normal n.
  [[nodiscard]] Eigen::Vector3d albedo(const Vec3& n) const;
  /// Nearest positive hit distance of a ray, if any.
  [[nodiscard]] std::optional<double> intersect(const Ray& ray) const;
};

struct FixtureOptions {
  int train_views = 50;
  int test_views = 10;
  int width = 128;
  int height = 128;
  double camera_distance = 4.0;
  double camera_angle_x = 0.7853981633974483;  // 45 degrees
  std::size_t points = 5000;
  int supersample = 4;  // per axis
  std::uint64_t seed = 0;
};

/// Straight-alpha RGBA render: alpha is the sphere's pixel coverage estimated
/// on a regular supersample x supersample grid of rays per pixel; background
/// pixels have alpha 0.
Image render_sphere(const SphereScene& scene, const Camera& cam, int supersample);

/// Points uniform on the sphere surface, coloured by the scene.
PointCloud sample_sphere_points(const SphereScene& scene, std::size_t n, std::uint64_t seed);

/// Camera poses looking at the origin: Fibonacci-sphere directions for the
/// training split, random directions for the test split.
std::vector<Eigen::Matrix4d> fixture_poses(int count, double distance, bool fibonacci, std::uint64_t seed);

/// Writes train/ and test/ PNGs, transforms_{train,test}.json and points.ply
/// into dir.
void make_sphere_fixture(const std::filesystem::path& dir, const FixtureOptions& options);

}  // namespace ttrf
