#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace ttrf {

enum class TrunkActivation { Relu, Softplus };

std::string_view to_string(TrunkActivation a);
TrunkActivation parse_activation(std::string_view name);

struct MlpShape {
  Eigen::Index feature_dim = 64;
  Eigen::Index hidden = 128;
  Eigen::Index appearance = 128;
  int dir_frequencies = 4;
  TrunkActivation activation = TrunkActivation::Relu;

  /// Width of the direction encoding: 3 + 6 L.
  [[nodiscard]] Eigen::Index encoding_width() const { return 3 + 6 * dir_frequencies; }
};

/// Fourier encoding of a unit direction: (d, sin(2^k pi d), cos(2^k pi d)) for
/// k = 0..L-1, each block three wide.
template <typename S>
void encode_direction(const Eigen::Matrix<S, 3, 1>& d, int frequencies, S* out);

template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> encode_direction(const Eigen::Matrix<S, 3, 1>& d, int frequencies) {
  Eigen::Matrix<S, Eigen::Dynamic, 1> out(3 + 6 * frequencies);
  encode_direction(d, frequencies, out.data());
  return out;
}

/// Weights of the trunk (feature -> hidden -> hidden -> 1 + appearance) and
/// the colour layer (appearance + encoding -> rgb).
template <typename S>
struct MlpParams {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  Matrix w1, w2, w3, wc;
  Vector b1, b2, b3, bc;

  static MlpParams zeros(const MlpShape& shape);
  void set_zero();
  [[nodiscard]] Eigen::Index size() const;

  /// Visits every tensor in serialization order: w1 b1 w2 b2 w3 b3 wc bc.
  template <typename F>
  void for_each(F&& f) {
    f(std::string_view("w1"), w1.data(), w1.size(), w1.rows(), w1.cols());
    f(std::string_view("b1"), b1.data(), b1.size(), b1.rows(), Eigen::Index{1});
    f(std::string_view("w2"), w2.data(), w2.size(), w2.rows(), w2.cols());
    f(std::string_view("b2"), b2.data(), b2.size(), b2.rows(), Eigen::Index{1});
    f(std::string_view("w3"), w3.data(), w3.size(), w3.rows(), w3.cols());
    f(std::string_view("b3"), b3.data(), b3.size(), b3.rows(), Eigen::Index{1});
    f(std::string_view("wc"), wc.data(), wc.size(), wc.rows(), wc.cols());
    f(std::string_view("bc"), bc.data(), bc.size(), bc.rows(), Eigen::Index{1});
  }

  MlpParams& operator+=(const MlpParams& other);
};

template <typename S>
struct MlpOutput {
  Eigen::Matrix<S, 1, Eigen::Dynamic> sigma;         // 1 x N, >= 0
  Eigen::Matrix<S, 3, Eigen::Dynamic> rgb;           // 3 x N, in (0, 1)
};

/// Activations kept by forward for the reverse pass.
template <typename S>
struct MlpTape {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix input;     // F x N
  Matrix z1, h1;    // H x N
  Matrix z2, h2;    // H x N
  Matrix z3;        // (1 + A) x N
  Matrix head_in;   // (A + E) x N
  Eigen::Matrix<S, 3, Eigen::Dynamic> rgb;
};

template <typename S>
class RadianceMlp {
 public:
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Dirs = Eigen::Matrix<S, 3, Eigen::Dynamic>;

  RadianceMlp() = default;
  explicit RadianceMlp(const MlpShape& shape);

  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static RadianceMlp kaiming(const MlpShape& shape, std::uint64_t seed);

  [[nodiscard]] const MlpShape& shape() const { return shape_; }
  MlpParams<S>& params() { return params_; }
  [[nodiscard]] const MlpParams<S>& params() const { return params_; }
  MlpParams<S>& grads() { return grads_; }
  [[nodiscard]] const MlpParams<S>& grads() const { return grads_; }
  void zero_grad() { grads_.set_zero(); }

  /// Evaluates N samples: `features` is F x N, `dirs` 3 x N unit vectors.
  /// Throws NonFiniteActivation when an output is NaN or infinite.
  void forward(const Matrix& features, const Dirs& dirs, MlpOutput<S>& out, MlpTape<S>* tape = nullptr) const;

  /// Density only (the colour head is skipped); used where colours are not
  /// needed, such as the coarse sampling pass.
  void density(const Matrix& features, Eigen::Matrix<S, 1, Eigen::Dynamic>& sigma) const;

  /// Reverse pass: accumulates parameter gradients into `grads` and, when
  /// `dfeatures` is non-null, writes the gradient w.r.t. the input features.
  void backward(const MlpTape<S>& tape, const Eigen::Matrix<S, 1, Eigen::Dynamic>& dsigma,
                const Eigen::Matrix<S, 3, Eigen::Dynamic>& drgb, MlpParams<S>& grads, Matrix* dfeatures) const;

  void backward(const MlpTape<S>& tape, const Eigen::Matrix<S, 1, Eigen::Dynamic>& dsigma,
                const Eigen::Matrix<S, 3, Eigen::Dynamic>& drgb, Matrix* dfeatures) {
    backward(tape, dsigma, drgb, grads_, dfeatures);
  }

  template <typename T>
  [[nodiscard]] RadianceMlp<T> cast() const;

 private:
  template <typename T>
  friend class RadianceMlp;

  MlpShape shape_;
  MlpParams<S> params_;
  MlpParams<S> grads_;
};

template <typename S>
template <typename T>
RadianceMlp<T> RadianceMlp<S>::cast() const {
  RadianceMlp<T> out(shape_);
  auto copy = [](auto& dst, const auto& src) { dst = src.template cast<T>(); };
  copy(out.params_.w1, params_.w1);
  copy(out.params_.b1, params_.b1);
  copy(out.params_.w2, params_.w2);
  copy(out.params_.b2, params_.b2);
  copy(out.params_.w3, params_.w3);
  copy(out.params_.b3, params_.b3);
  copy(out.params_.wc, params_.wc);
  copy(out.params_.bc, params_.bc);
  return out;
}

/// Numerically stable softplus and its derivative (the logistic function).
template <typename S>
S softplus(S x);
template <typename S>
S sigmoid(S x);

extern template class RadianceMlp<float>;
extern template class RadianceMlp<double>;
extern template struct MlpParams<float>;
extern template struct MlpParams<double>;

}  // namespace ttrf
