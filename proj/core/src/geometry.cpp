#include "ttrf/geometry.hpp"

#include "ttrf/error.hpp"

#include <algorithm>
#include <cmath>

namespace ttrf {

Ray Ray::make(const Point3& origin, const Vec3& direction, double t_min, double t_max) {
  const double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n) || !origin.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "ray needs a finite origin and non-zero direction");
  }
  if (!(t_min >= 0.0) || !(t_min <= t_max)) {
    throw Error(ErrorCode::InvalidArgument, "ray requires 0 <= t_min <= t_max");
  }
  return Ray{origin, direction / n, t_min, t_max};
}

double Barycentric4::min() const { return *std::min_element(w.begin(), w.end()); }

Barycentric4 Barycentric4::lerp(const Barycentric4& a, const Barycentric4& b, double s) {
  Barycentric4 out;
  for (int i = 0; i < 4; ++i) out[i] = (1.0 - s) * a[i] + s * b[i];
  return out;
}

double signed_volume(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ad = d - a;
  return ab.dot(ac.cross(ad)) / 6.0;
}

double bbox_diagonal(std::span<const Point3> points) {
  if (points.empty()) return 0.0;
  Point3 lo = points.front();
  Point3 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

Barycentric4 barycentric_coords(const Point3& p, const TetCorners& tet) {
  const double volume = signed_volume(tet);
  const double diag = bbox_diagonal(tet);
  if (!(std::abs(volume) >= kVolumeEps * diag * diag * diag) || diag == 0.0) {
    throw Error(ErrorCode::DegenerateTetra, "tetrahedron volume below tolerance");
  }
  Barycentric4 out;
  out[0] = signed_volume(p, tet[1], tet[2], tet[3]) / volume;
  out[1] = signed_volume(tet[0], p, tet[2], tet[3]) / volume;
  out[2] = signed_volume(tet[0], tet[1], p, tet[3]) / volume;
  out[3] = signed_volume(tet[0], tet[1], tet[2], p) / volume;
  return out;
}

Point3 reconstruct(const Barycentric4& lambda, const TetCorners& tet) {
  return lambda[0] * tet[0] + lambda[1] * tet[1] + lambda[2] * tet[2] + lambda[3] * tet[3];
}

RayTriangleTester::RayTriangleTester(const Ray& ray) : ray_(ray) {
  const Vec3& d = ray.direction;
  Eigen::Index kz = 0;
  d.cwiseAbs().maxCoeff(&kz);
  kz_ = static_cast<int>(kz);
  kx_ = (kz_ + 1) % 3;
  ky_ = (kx_ + 1) % 3;
  sx_ = d[kx_] / d[kz_];
  sy_ = d[ky_] / d[kz_];
  sz_ = 1.0 / d[kz_];
}

std::optional<TriangleHit> RayTriangleTester::intersect(const Point3& a, const Point3& b,
                                                        const Point3& c) const {
  const Vec3 A = a - ray_.origin;
  const Vec3 B = b - ray_.origin;
  const Vec3 C = c - ray_.origin;

  const double ax = A[kx_] - sx_ * A[kz_];
  const double ay = A[ky_] - sy_ * A[kz_];
  const double bx = B[kx_] - sx_ * B[kz_];
  const double by = B[ky_] - sy_ * B[kz_];
  const double cx = C[kx_] - sx_ * C[kz_];
  const double cy = C[ky_] - sy_ * C[kz_];

  const double U = cx * by - cy * bx;
  const double V = ax * cy - ay * cx;
  const double W = bx * ay - by * ax;

  if ((U < 0.0 || V < 0.0 || W < 0.0) && (U > 0.0 || V > 0.0 || W > 0.0)) return std::nullopt;
  const double det = U + V + W;
  if (det == 0.0) return std::nullopt;

  const double az = sz_ * A[kz_];
  const double bz = sz_ * B[kz_];
  const double cz = sz_ * C[kz_];
  const double t = (U * az + V * bz + W * cz) / det;
  if (!(t >= ray_.t_min && t <= ray_.t_max)) return std::nullopt;
  return TriangleHit{t, V / det, W / det};
}

std::optional<TriangleHit> ray_triangle_intersect(const Ray& ray, const Point3& a, const Point3& b,
                                                  const Point3& c) {
  return RayTriangleTester(ray).intersect(a, b, c);
}

Barycentric4 lift_barycentric(double u, double v, int opposite_slot) {
  const auto slots = face_slots(opposite_slot);
  Barycentric4 out;
  out[slots[0]] = 1.0 - u - v;
  out[slots[1]] = u;
  out[slots[2]] = v;
  out[opposite_slot] = 0.0;
  return out;
}

}  // namespace ttrf
