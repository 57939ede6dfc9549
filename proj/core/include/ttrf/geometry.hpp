#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>

namespace ttrf {

using Vec3 = Eigen::Vector3d;
using Point3 = Eigen::Vector3d;
using VertexId = std::uint32_t;
using TetId = std::uint32_t;

/// Tolerance for "inside" tests on barycentric coordinates.
inline constexpr double kBaryEps = 1e-9;
/// A tetrahedron is degenerate when |V| < kVolumeEps * diag^3.
inline constexpr double kVolumeEps = 1e-12;

struct Ray {
  Point3 origin = Point3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();

  /// Normalizes `direction`; throws InvalidArgument on zero/non-finite input.
  static Ray make(const Point3& origin, const Vec3& direction, double t_min = 0.0,
                  double t_max = std::numeric_limits<double>::infinity());

  [[nodiscard]] Point3 at(double t) const { return origin + t * direction; }
};

struct Tetra {
  std::array<VertexId, 4> v{};

  VertexId operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

struct Barycentric4 {
  std::array<double, 4> w{};

  double operator[](int i) const { return w[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return w[static_cast<std::size_t>(i)]; }

  [[nodiscard]] double sum() const { return w[0] + w[1] + w[2] + w[3]; }
  [[nodiscard]] double min() const;
  [[nodiscard]] bool inside(double eps = kBaryEps) const { return min() >= -eps; }

  static Barycentric4 lerp(const Barycentric4& a, const Barycentric4& b, double s);
};

using TetCorners = std::array<Point3, 4>;

double signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d);
inline double signed_volume(const TetCorners& t) { return signed_volume(t[0], t[1], t[2], t[3]); }

/// Bounding-box diagonal of a set of points.
double bbox_diagonal(std::span<const Point3> points);

/// Volume-ratio barycentric coordinates of p. Throws DegenerateTetra when the
/// tetrahedron's volume is below the scale-relative epsilon.
Barycentric4 barycentric_coords(const Point3& p, const TetCorners& tet);

/// Sum of lambda_i * corner_i.
Point3 reconstruct(const Barycentric4& lambda, const TetCorners& tet);

/// Slots of the face opposite `opposite`, in ascending order.
constexpr std::array<int, 3> face_slots(int opposite) {
  switch (opposite) {
    case 0: return {1, 2, 3};
    case 1: return {0, 2, 3};
    case 2: return {0, 1, 3};
    default: return {0, 1, 2};
  }
}

/// Hit of a ray with triangle (a, b, c): point = (1-u-v) a + u b + v c.
struct TriangleHit {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// Watertight ray/triangle test with per-ray precomputation; shared edges
/// evaluate identical edge functions so a ray never slips between two faces.
class RayTriangleTester {
 public:
  explicit RayTriangleTester(const Ray& ray);

  [[nodiscard]] std::optional<TriangleHit> intersect(const Point3& a, const Point3& b,
                                                     const Point3& c) const;

  [[nodiscard]] const Ray& ray() const { return ray_; }

 private:
  Ray ray_;
  int kx_ = 0, ky_ = 1, kz_ = 2;
  double sx_ = 0.0, sy_ = 0.0, sz_ = 1.0;
};

std::optional<TriangleHit> ray_triangle_intersect(const Ray& ray, const Point3& a, const Point3& b,
                                                  const Point3& c);

/// Lifts triangle barycentrics on the face opposite `opposite_slot` to the
/// tetrahedron: the face's slots (ascending) receive (1-u-v, u, v) and the
/// opposite slot receives 0.
Barycentric4 lift_barycentric(double u, double v, int opposite_slot);

}  // namespace ttrf
