#pragma once

#include "ttrf/cloud.hpp"
#include "ttrf/geometry.hpp"
#include "ttrf/triangulation.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace ttrf {

inline constexpr Eigen::Index kDefaultFeatureDim = 64;
inline constexpr double kFeatureInitRange = 1e-4;

/// Trainable per-vertex feature vectors of a tetrahedral mesh, with a gradient
/// buffer of the same shape. Rows are vertices.
template <typename S>
struct FeatureField {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  Matrix features;
  Matrix grad;

  FeatureField() = default;
  FeatureField(Eigen::Index vertices, Eigen::Index dim)
      : features(Matrix::Zero(vertices, dim)), grad(Matrix::Zero(vertices, dim)) {}

  [[nodiscard]] Eigen::Index num_vertices() const { return features.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return features.cols(); }

  void zero_grad() { grad.setZero(); }

  /// f = sum_i lambda_i * features[tet.v_i]
  template <typename Out>
  void interpolate_into(const Tetra& tet, const Barycentric4& lambda, Out&& out) const {
    out = features.row(tet[0]).transpose() * static_cast<S>(lambda[0]);
    for (int i = 1; i < 4; ++i) out += features.row(tet[i]).transpose() * static_cast<S>(lambda[i]);
  }

  [[nodiscard]] Vector interpolate(const Tetra& tet, const Barycentric4& lambda) const {
    Vector out(dim());
    interpolate_into(tet, lambda, out);
    return out;
  }

  /// grad[tet.v_i] += lambda_i * upstream (accumulates).
  template <typename In>
  void interpolate_backward(const Tetra& tet, const Barycentric4& lambda, const In& upstream) {
    for (int i = 0; i < 4; ++i) {
      grad.row(tet[i]) += upstream.transpose() * static_cast<S>(lambda[i]);
    }
  }

  template <typename T>
  [[nodiscard]] FeatureField<T> cast() const {
    FeatureField<T> out;
    out.features = features.template cast<T>();
    out.grad = grad.template cast<T>();
    return out;
  }
};

/// Features seeded from the cloud: dims 0..3 hold RGBA, the rest are drawn
/// uniformly from [-1e-4, 1e-4]. Mesh vertices must match cloud points 1:1.
template <typename S>
FeatureField<S> init_field(const TetMesh& mesh, const PointCloud& cloud, Eigen::Index dim, std::uint64_t seed);

extern template FeatureField<float> init_field<float>(const TetMesh&, const PointCloud&, Eigen::Index, std::uint64_t);
extern template FeatureField<double> init_field<double>(const TetMesh&, const PointCloud&, Eigen::Index,
                                                        std::uint64_t);

}  // namespace ttrf
