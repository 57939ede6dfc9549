#pragma once

#include "ttrf/cloud.hpp"
#include "ttrf/field.hpp"
#include "ttrf/render.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace ttrf {

/// Smallest R with R^3 >= n (at least 2, so the grid has one cell).
int grid_resolution_for(std::size_t n);

/// Regular R^3 lattice of trainable features spanning an axis-aligned box.
/// Node (i, j, k) is row (k R + j) R + i of `field`.
template <typename S>
struct DenseGridField {
  int resolution = 2;
  Point3 lo = Point3::Zero();
  Point3 hi = Point3::Ones();
  FeatureField<S> field;

  [[nodiscard]] std::size_t node(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution + j) * resolution + i;
  }

  /// Cell corner nodes and trilinear weights of p, in (i, j, k) bit order.
  /// Throws OutOfBox.
  void corners(const Point3& p, std::array<std::size_t, 8>& nodes, std::array<double, 8>& weights) const;
};

/// Grid over the cloud's bounding box with R = grid_resolution_for(|cloud|).
/// Dims 0..3 copy the RGBA of the nearest cloud point, the rest are drawn
/// from U(-1e-4, 1e-4) as for the tetrahedra field.
template <typename S>
DenseGridField<S> make_dense_grid(const PointCloud& cloud, Eigen::Index dim, std::uint64_t seed);

template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> dense_grid_interpolate(const DenseGridField<S>& grid, const Point3& p);

/// Renderer view over a dense grid: the occupied space of a ray is its
/// intersection with the grid box.
template <typename S>
class GridFieldView {
 public:
  explicit GridFieldView(DenseGridField<S>& grid) : grid_(&grid) {}

  [[nodiscard]] Eigen::Index dim() const { return grid_->field.dim(); }
  [[nodiscard]] RaySegmentTrace trace(const Ray& ray) const;

  void gather(const SamplePoint& p, S* out) const {
    std::array<std::size_t, 8> nodes{};
    std::array<double, 8> w{};
    grid_->corners(p.position, nodes, w);
    const Eigen::Index f = dim();
    for (Eigen::Index k = 0; k < f; ++k) out[k] = S(0);
    for (int c = 0; c < 8; ++c) {
      const S* row = grid_->field.features.row(static_cast<Eigen::Index>(nodes[c])).data();
      const S wc = static_cast<S>(w[c]);
      for (Eigen::Index k = 0; k < f; ++k) out[k] += wc * row[k];
    }
  }

  void scatter(const SamplePoint& p, const S* grad) {
    std::array<std::size_t, 8> nodes{};
    std::array<double, 8> w{};
    grid_->corners(p.position, nodes, w);
    const Eigen::Index f = dim();
    for (int c = 0; c < 8; ++c) {
      S* row = grid_->field.grad.row(static_cast<Eigen::Index>(nodes[c])).data();
      const S wc = static_cast<S>(w[c]);
      for (Eigen::Index k = 0; k < f; ++k) row[k] += wc * grad[k];
    }
  }

 private:
  DenseGridField<S>* grid_;
};

extern template struct DenseGridField<float>;
extern template struct DenseGridField<double>;
extern template class GridFieldView<float>;
extern template class GridFieldView<double>;

}  // namespace ttrf
