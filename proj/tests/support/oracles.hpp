#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library code it checks.

#include "ttrf/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

namespace oracle {

using ttrf::Point3;
using ttrf::Vec3;

/// 3x3 determinant by cofactor expansion along the first row.
inline double det3(const Vec3& a, const Vec3& b, const Vec3& c) {
  return a.x() * (b.y() * c.z() - b.z() * c.y()) - a.y() * (b.x() * c.z() - b.z() * c.x()) +
         a.z() * (b.x() * c.y() - b.y() * c.x());
}

/// Signed volume from the 4x4 homogeneous determinant, expanded by cofactors
/// along the column of ones.
inline double volume_4x4(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
  const std::array<const Point3*, 4> p{&a, &b, &c, &d};
  double det = 0.0;
  for (int r = 0; r < 4; ++r) {
    std::array<Vec3, 3> rows;
    int k = 0;
    for (int s = 0; s < 4; ++s) {
      if (s != r) rows[static_cast<std::size_t>(k++)] = *p[static_cast<std::size_t>(s)];
    }
    const double minor = det3(rows[0], rows[1], rows[2]);
    // Column of ones is the last column (index 3): sign (-1)^(r+3).
    det += ((r + 3) % 2 == 0 ? 1.0 : -1.0) * minor;
  }
  // det [[a 1],[b 1],[c 1],[d 1]] = -det[b-a, c-a, d-a]; flip to the usual orientation.
  return -det / 6.0;
}

/// Barycentric weights from the 4x4 system [v0 v1 v2 v3; 1 1 1 1] w = [p; 1].
inline std::array<double, 4> barycentric_solve(const Point3& p, const std::array<Point3, 4>& v) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i) {
    m.block<3, 1>(0, i) = v[static_cast<std::size_t>(i)];
    m(3, i) = 1.0;
  }
  Eigen::Vector4d rhs;
  rhs << p, 1.0;
  const Eigen::Vector4d w = m.fullPivLu().solve(rhs);
  return {w[0], w[1], w[2], w[3]};
}

struct PlaneHit {
  double t;
  double u;
  double v;
};

/// Plane intersection followed by a 2D point-in-triangle test on the dominant
/// projection plane.
inline std::optional<PlaneHit> ray_triangle_two_step(const Point3& o, const Vec3& d, double t_min, double t_max,
                                                     const Point3& a, const Point3& b, const Point3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-14 * n.norm()) return std::nullopt;
  const double t = n.dot(a - o) / denom;
  if (t < t_min || t > t_max) return std::nullopt;
  const Point3 x = o + t * d;
  int drop = 0;
  n.cwiseAbs().maxCoeff(&drop);
  const int i0 = (drop + 1) % 3;
  const int i1 = (drop + 2) % 3;
  auto cross2 = [&](const Point3& p, const Point3& q, const Point3& r) {
    return (q[i0] - p[i0]) * (r[i1] - p[i1]) - (q[i1] - p[i1]) * (r[i0] - p[i0]);
  };
  const double area = cross2(a, b, c);
  const double wa = cross2(x, b, c) / area;
  const double wb = cross2(a, x, c) / area;
  const double wc = cross2(a, b, x) / area;
  if (wa < 0.0 || wb < 0.0 || wc < 0.0) return std::nullopt;
  return PlaneHit{t, wb, wc};
}

struct Sphere {
  Point3 center;
  double radius;
};

inline Sphere circumsphere(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
  Eigen::Matrix3d m;
  m.row(0) = (b - a).transpose();
  m.row(1) = (c - a).transpose();
  m.row(2) = (d - a).transpose();
  const Eigen::Vector3d rhs(0.5 * (b - a).squaredNorm(), 0.5 * (c - a).squaredNorm(), 0.5 * (d - a).squaredNorm());
  const Eigen::Vector3d x = m.fullPivLu().solve(rhs);
  return {a + x, x.norm()};
}

/// Incremental convex hull (O(n * faces)); returns the enclosed volume.
inline double convex_hull_volume(std::span<const Point3> pts) {
  const std::size_t n = pts.size();
  if (n < 4) return 0.0;
  // Initial tetrahedron from extreme points.
  std::size_t i0 = 0, i1 = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
    if (pts[i].x() > pts[i1].x()) i1 = i;
  }
  std::size_t i2 = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = (pts[i] - pts[i0]).cross(pts[i1] - pts[i0]).norm();
    if (dist > best) best = dist, i2 = i;
  }
  std::size_t i3 = 0;
  best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = std::abs(det3(pts[i1] - pts[i0], pts[i2] - pts[i0], pts[i] - pts[i0]));
    if (dist > best) best = dist, i3 = i;
  }
  using Face = std::array<std::size_t, 3>;
  std::vector<Face> faces;
  const Point3 inner = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  auto oriented = [&](std::size_t a, std::size_t b, std::size_t c) {
    const Vec3 nrm = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    return nrm.dot(pts[a] - inner) > 0.0 ? Face{a, b, c} : Face{a, c, b};
  };
  faces = {oriented(i0, i1, i2), oriented(i0, i1, i3), oriented(i0, i2, i3), oriented(i1, i2, i3)};
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, (p - inner).norm());
  const double eps = 1e-12 * scale * scale * scale;

  for (std::size_t p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    std::vector<char> visible(faces.size(), 0);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const auto& fc = faces[f];
      const double s = det3(pts[fc[1]] - pts[fc[0]], pts[fc[2]] - pts[fc[0]], pts[p] - pts[fc[0]]);
      if (s > eps) visible[f] = 1, any = true;
    }
    if (!any) continue;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) continue;
      for (int e = 0; e < 3; ++e) edges.insert({faces[f][static_cast<std::size_t>(e)], faces[f][static_cast<std::size_t>((e + 1) % 3)]});
    }
    std::vector<Face> next;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) next.push_back(faces[f]);
    }
    for (const auto& [a, b] : edges) {
      if (!edges.count({b, a})) next.push_back({a, b, p});
    }
    faces = std::move(next);
  }
  double vol = 0.0;
  for (const auto& f : faces) vol += det3(pts[f[0]] - inner, pts[f[1]] - inner, pts[f[2]] - inner) / 6.0;
  return vol;
}

/// Front-to-back alpha compositing; returns (colour, final transmittance).
inline std::pair<Eigen::Vector3d, double> composite(std::span<const double> sigma, std::span<const double> delta,
                                                    std::span<const Eigen::Vector3d> color) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double trans = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double alpha = 1.0 - std::exp(-sigma[i] * delta[i]);
    c += trans * alpha * color[i];
    trans *= 1.0 - alpha;
  }
  return {c, trans};
}

/// Weights as a running product of (1 - alpha_j).
inline std::vector<double> weights_by_product(std::span<const double> sigma, std::span<const double> delta) {
  std::vector<double> w(sigma.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double keep = std::exp(-sigma[i] * delta[i]);
    w[i] = prod * (1.0 - keep);
    prod *= keep;
  }
  return w;
}

/// Direct 2D-window SSIM with the standard Gaussian window, one channel.
inline double ssim_channel(const std::vector<double>& x, const std::vector<double>& y, int w, int h) {
  constexpr int win = 11;
  constexpr double sigma = 1.5;
  double g[win][win];
  double total = 0.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * sigma * sigma));
      total += g[i][j];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0.0;
  int count = 0;
  for (int oy = 0; oy + win <= h; ++oy) {
    for (int ox = 0; ox + win <= w; ++ox) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double wt = g[i][j] / total;
          const double a = x[static_cast<std::size_t>((oy + i) * w + ox + j)];
          const double b = y[static_cast<std::size_t>((oy + i) * w + ox + j)];
          mx += wt * a;
          my += wt * b;
          sxx += wt * a * a;
          syy += wt * b * b;
          sxy += wt * a * b;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / count;
}

/// Published RAdam update for a scalar parameter sequence (double precision).
struct RAdamRef {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  int t = 0;

  double step(double theta, double g, double lr) {
    ++t;
    m = beta1 * m + (1 - beta1) * g;
    v = beta2 * v + (1 - beta2) * g * g;
    const double mhat = m / (1 - std::pow(beta1, t));
    const double rho_inf = 2.0 / (1 - beta2) - 1;
    const double rho = rho_inf - 2.0 * t * std::pow(beta2, t) / (1 - std::pow(beta2, t));
    if (rho > 4.0) {
      const double vhat = std::sqrt(v / (1 - std::pow(beta2, t)));
      const double r = std::sqrt((rho - 4) * (rho - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho));
      return theta - lr * r * mhat / (vhat + eps);
    }
    return theta - lr * mhat;
  }
};

/// Fourier direction encoding written out directly.
inline std::vector<double> encode(const Vec3& d, int L) {
  std::vector<double> out{d.x(), d.y(), d.z()};
  for (int k = 0; k < L; ++k) {
    const double f = std::pow(2.0, k) * M_PI;
    for (int a = 0; a < 3; ++a) out.push_back(std::sin(f * d[a]));
    for (int a = 0; a < 3; ++a) out.push_back(std::cos(f * d[a]));
  }
  return out;
}

/// Pinhole camera from its 3x3 intrinsic matrix and camera-to-world pose,
/// OpenGL axes: pixel centre (px + 0.5, py + 0.5).
inline Vec3 pinhole_direction(const Eigen::Matrix3d& K, const Eigen::Matrix4d& c2w, int px, int py) {
  const Eigen::Vector3d pix(px + 0.5, py + 0.5, 1.0);
  Eigen::Vector3d cv = K.inverse() * pix;  // OpenCV camera: +z forward, +y down
  const Eigen::Vector3d gl(cv.x(), -cv.y(), -cv.z());
  return (c2w.block<3, 3>(0, 0) * gl).normalized();
}

/// Nested linear interpolation over a regular grid of scalars stored
/// node(i, j, k) = (k R + j) R + i.
inline double trilinear(const std::vector<double>& values, int R, const Point3& lo, const Point3& hi, const Point3& p) {
  auto lerp = [](double a, double b, double s) { return a + (b - a) * s; };
  std::array<int, 3> c{};
  std::array<double, 3> f{};
  for (int a = 0; a < 3; ++a) {
    const double x = (p[a] - lo[a]) / (hi[a] - lo[a]) * (R - 1);
    c[static_cast<std::size_t>(a)] = std::min(static_cast<int>(std::floor(x)), R - 2);
    f[static_cast<std::size_t>(a)] = x - c[static_cast<std::size_t>(a)];
  }
  auto at = [&](int i, int j, int k) {
    return values[static_cast<std::size_t>((k * R + j) * R + i)];
  };
  const double x00 = lerp(at(c[0], c[1], c[2]), at(c[0] + 1, c[1], c[2]), f[0]);
  const double x10 = lerp(at(c[0], c[1] + 1, c[2]), at(c[0] + 1, c[1] + 1, c[2]), f[0]);
  const double x01 = lerp(at(c[0], c[1], c[2] + 1), at(c[0] + 1, c[1], c[2] + 1), f[0]);
  const double x11 = lerp(at(c[0], c[1] + 1, c[2] + 1), at(c[0] + 1, c[1] + 1, c[2] + 1), f[0]);
  return lerp(lerp(x00, x10, f[1]), lerp(x01, x11, f[1]), f[2]);
}

/// Kolmogorov-Smirnov statistic of samples against U(lo, hi).
inline double ks_uniform(std::vector<double> s, double lo, double hi) {
  std::sort(s.begin(), s.end());
  double d = 0.0;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = (s[i] - lo) / (hi - lo);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

inline std::vector<Point3> random_points(std::size_t n, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<Point3> pts(n);
  for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace oracle
