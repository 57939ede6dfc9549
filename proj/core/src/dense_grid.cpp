#include "ttrf/dense_grid.hpp"

#include "ttrf/error.hpp"
#include "ttrf/knn.hpp"
#include "ttrf/random.hpp"

#include <cmath>

namespace ttrf {

int grid_resolution_for(std::size_t n) {
  auto r = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n))));
  while (r * r * r < n) ++r;
  while (r > 0 && (r - 1) * (r - 1) * (r - 1) >= n) --r;
  return static_cast<int>(std::max<std::size_t>(r, 2));
}

template <typename S>
void DenseGridField<S>::corners(const Point3& p, std::array<std::size_t, 8>& nodes,
                                std::array<double, 8>& weights) const {
  const double tol = 1e-9 * (hi - lo).norm();
  std::array<int, 3> cell{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] >= lo[a] - tol && p[a] <= hi[a] + tol)) throw Error(ErrorCode::OutOfBox, "point outside the grid box");
    const double x = std::clamp((p[a] - lo[a]) / (hi[a] - lo[a]), 0.0, 1.0) * (resolution - 1);
    const int c = std::min(static_cast<int>(std::floor(x)), resolution - 2);
    cell[static_cast<std::size_t>(a)] = c;
    frac[static_cast<std::size_t>(a)] = x - c;
  }
  for (int b = 0; b < 8; ++b) {
    const int di = b & 1, dj = (b >> 1) & 1, dk = (b >> 2) & 1;
    nodes[static_cast<std::size_t>(b)] = node(cell[0] + di, cell[1] + dj, cell[2] + dk);
    weights[static_cast<std::size_t>(b)] = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                                           (dk ? frac[2] : 1.0 - frac[2]);
  }
}

template <typename S>
DenseGridField<S> make_dense_grid(const PointCloud& cloud, Eigen::Index dim, std::uint64_t seed) {
  if (cloud.empty()) throw Error(ErrorCode::TooFewPoints, "empty cloud");
  if (dim < 4) throw Error(ErrorCode::InvalidArgument, "feature dimension must be at least 4");
  DenseGridField<S> grid;
  grid.resolution = grid_resolution_for(cloud.size());
  grid.lo = grid.hi = cloud.positions.front();
  for (const Point3& p : cloud.positions) {
    grid.lo = grid.lo.cwiseMin(p);
    grid.hi = grid.hi.cwiseMax(p);
  }
  const double pad = 1e-6 * std::max((grid.hi - grid.lo).norm(), 1e-12);
  grid.lo.array() -= pad;
  grid.hi.array() += pad;

  const auto r = static_cast<std::size_t>(grid.resolution);
  const auto n = static_cast<Eigen::Index>(r * r * r);
  grid.field = FeatureField<S>(n, dim);
  const KdTree tree(cloud.positions);
  Rng rng = make_rng(seed, 0x9e1d);
  for (int k = 0; k < grid.resolution; ++k) {
    for (int j = 0; j < grid.resolution; ++j) {
      for (int i = 0; i < grid.resolution; ++i) {
        const auto row = static_cast<Eigen::Index>(grid.node(i, j, k));
        const Point3 t(i, j, k);
        const Point3 p = grid.lo + (grid.hi - grid.lo).cwiseProduct(t / (grid.resolution - 1));
        const auto nn = tree.nearest(p, 1);
        const Rgba& c = cloud.colors[nn.front().second];
        for (int a = 0; a < 4; ++a) grid.field.features(row, a) = static_cast<S>(c[static_cast<std::size_t>(a)]);
        for (Eigen::Index a = 4; a < dim; ++a) {
          grid.field.features(row, a) = static_cast<S>((2.0 * uniform01(rng) - 1.0) * kFeatureInitRange);
        }
      }
    }
  }
  return grid;
}

template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> dense_grid_interpolate(const DenseGridField<S>& grid, const Point3& p) {
  std::array<std::size_t, 8> nodes{};
  std::array<double, 8> w{};
  grid.corners(p, nodes, w);
  Eigen::Matrix<S, Eigen::Dynamic, 1> out = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(grid.field.dim());
  for (std::size_t c = 0; c < 8; ++c) {
    out += grid.field.features.row(static_cast<Eigen::Index>(nodes[c])).transpose() * static_cast<S>(w[c]);
  }
  return out;
}

template <typename S>
RaySegmentTrace GridFieldView<S>::trace(const Ray& ray) const {
  double t0 = ray.t_min;
  double t1 = ray.t_max;
  for (int a = 0; a < 3; ++a) {
    const double inv = 1.0 / ray.direction[a];
    double ta = (grid_->lo[a] - ray.origin[a]) * inv;
    double tb = (grid_->hi[a] - ray.origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    if (std::isnan(ta) || std::isnan(tb)) {
      // Axis-parallel ray lying exactly on a slab plane.
      if (ray.origin[a] < grid_->lo[a] || ray.origin[a] > grid_->hi[a]) return {};
      continue;
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  RaySegmentTrace trace;
  if (!(t1 - t0 > kHitTieEps)) return trace;
  TraceSegment seg;
  seg.tet = 0;
  seg.t_in = t0;
  seg.t_out = t1;
  trace.segments.push_back(seg);
  return trace;
}

template struct DenseGridField<float>;
template struct DenseGridField<double>;
template class GridFieldView<float>;
template class GridFieldView<double>;
template DenseGridField<float> make_dense_grid<float>(const PointCloud&, Eigen::Index, std::uint64_t);
template DenseGridField<double> make_dense_grid<double>(const PointCloud&, Eigen::Index, std::uint64_t);
template Eigen::Matrix<float, Eigen::Dynamic, 1> dense_grid_interpolate<float>(const DenseGridField<float>&,
                                                                               const Point3&);
template Eigen::Matrix<double, Eigen::Dynamic, 1> dense_grid_interpolate<double>(const DenseGridField<double>&,
                                                                                 const Point3&);

}  // namespace ttrf
