#include "ttrf/network.hpp"

#include "ttrf/error.hpp"
#include "ttrf/random.hpp"

#include <cmath>
#include <numbers>

namespace ttrf {

std::string_view to_string(TrunkActivation a) {
  return a == TrunkActivation::Relu ? "relu" : "softplus";
}

TrunkActivation parse_activation(std::string_view name) {
  if (name == "relu") return TrunkActivation::Relu;
  if (name == "softplus") return TrunkActivation::Softplus;
  throw Error(ErrorCode::InvalidArgument, "unknown activation: " + std::string(name));
}

template <typename S>
S softplus(S x) {
  return x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename S>
S sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template float softplus<float>(float);
template double softplus<double>(double);
template float sigmoid<float>(float);
template double sigmoid<double>(double);

template <typename S>
void encode_direction(const Eigen::Matrix<S, 3, 1>& d, int frequencies, S* out) {
  if (frequencies < 0) throw Error(ErrorCode::InvalidArgument, "negative frequency count");
  for (int a = 0; a < 3; ++a) out[a] = d[a];
  S* p = out + 3;
  S scale = std::numbers::pi_v<S>;
  for (int k = 0; k < frequencies; ++k, scale *= S(2)) {
    for (int a = 0; a < 3; ++a) p[a] = std::sin(scale * d[a]);
    for (int a = 0; a < 3; ++a) p[3 + a] = std::cos(scale * d[a]);
    p += 6;
  }
}

template void encode_direction<float>(const Eigen::Matrix<float, 3, 1>&, int, float*);
template void encode_direction<double>(const Eigen::Matrix<double, 3, 1>&, int, double*);

template <typename S>
MlpParams<S> MlpParams<S>::zeros(const MlpShape& s) {
  if (s.feature_dim <= 0 || s.hidden <= 0 || s.appearance < 0 || s.dir_frequencies < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid network shape");
  }
  MlpParams p;
  p.w1 = Matrix::Zero(s.hidden, s.feature_dim);
  p.b1 = Vector::Zero(s.hidden);
  p.w2 = Matrix::Zero(s.hidden, s.hidden);
  p.b2 = Vector::Zero(s.hidden);
  p.w3 = Matrix::Zero(1 + s.appearance, s.hidden);
  p.b3 = Vector::Zero(1 + s.appearance);
  p.wc = Matrix::Zero(3, s.appearance + s.encoding_width());
  p.bc = Vector::Zero(3);
  return p;
}

template <typename S>
void MlpParams<S>::set_zero() {
  for_each([](std::string_view, S* data, Eigen::Index n, Eigen::Index, Eigen::Index) {
    std::fill(data, data + n, S(0));
  });
}

template <typename S>
Eigen::Index MlpParams<S>::size() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size() + wc.size() + bc.size();
}

template <typename S>
MlpParams<S>& MlpParams<S>::operator+=(const MlpParams& o) {
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  w3 += o.w3;
  b3 += o.b3;
  wc += o.wc;
  bc += o.bc;
  return *this;
}

template <typename S>
RadianceMlp<S>::RadianceMlp(const MlpShape& shape)
    : shape_(shape), params_(MlpParams<S>::zeros(shape)), grads_(MlpParams<S>::zeros(shape)) {}

template <typename S>
RadianceMlp<S> RadianceMlp<S>::kaiming(const MlpShape& shape, std::uint64_t seed) {
  RadianceMlp mlp(shape);
  std::uint64_t stream = 0x4d4c50;
  auto fill = [&](Matrix& w) {
    Rng rng = make_rng(seed, stream++);
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    // Column-major fill; the draw order is part of the seeded contract.
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = static_cast<S>((2.0 * uniform01(rng) - 1.0) * bound);
    }
  };
  fill(mlp.params_.w1);
  fill(mlp.params_.w2);
  fill(mlp.params_.w3);
  fill(mlp.params_.wc);
  return mlp;
}

namespace {

template <typename S, typename M>
void activate(TrunkActivation a, const M& z, M& h) {
  if (a == TrunkActivation::Relu) {
    h = z.cwiseMax(S(0));
  } else {
    h = z.unaryExpr([](S x) { return softplus(x); });
  }
}

// dz = dh * act'(z)
template <typename S, typename M>
void activate_backward(TrunkActivation a, const M& z, M& dh) {
  if (a == TrunkActivation::Relu) {
    dh = (z.array() > S(0)).select(dh, S(0));
  } else {
    dh.array() *= z.unaryExpr([](S x) { return sigmoid(x); }).array();
  }
}

}  // namespace

template <typename S>
void RadianceMlp<S>::forward(const Matrix& features, const Dirs& dirs, MlpOutput<S>& out,
                             MlpTape<S>* tape) const {
  const Eigen::Index n = features.cols();
  if (features.rows() != shape_.feature_dim || dirs.cols() != n) {
    throw Error(ErrorCode::SizeMismatch, "network input shape mismatch");
  }
  const Eigen::Index a = shape_.appearance;
  const Eigen::Index e = shape_.encoding_width();

  MlpTape<S> local;
  MlpTape<S>& t = tape != nullptr ? *tape : local;
  t.z1.noalias() = params_.w1 * features;
  t.z1.colwise() += params_.b1;
  activate<S>(shape_.activation, t.z1, t.h1);
  t.z2.noalias() = params_.w2 * t.h1;
  t.z2.colwise() += params_.b2;
  activate<S>(shape_.activation, t.z2, t.h2);
  t.z3.noalias() = params_.w3 * t.h2;
  t.z3.colwise() += params_.b3;

  t.head_in.resize(a + e, n);
  t.head_in.topRows(a) = t.z3.bottomRows(a);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Samples of one ray share a direction; reuse the previous encoding.
    if (j > 0 && dirs.col(j) == dirs.col(j - 1)) {
      t.head_in.col(j).tail(e) = t.head_in.col(j - 1).tail(e);
      continue;
    }
    const Eigen::Matrix<S, 3, 1> d = dirs.col(j);
    encode_direction<S>(d, shape_.dir_frequencies, t.head_in.col(j).data() + a);
  }
  out.rgb.noalias() = params_.wc * t.head_in;
  out.rgb.colwise() += params_.bc;
  out.rgb = out.rgb.unaryExpr([](S x) { return sigmoid(x); });
  out.sigma = t.z3.row(0).unaryExpr([](S x) { return softplus(x); });

  if (!out.sigma.allFinite() || !out.rgb.allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "network produced a non-finite output");
  }
  if (tape != nullptr) {
    tape->input = features;
    tape->rgb = out.rgb;
  }
}

template <typename S>
void RadianceMlp<S>::density(const Matrix& features, Eigen::Matrix<S, 1, Eigen::Dynamic>& sigma) const {
  if (features.rows() != shape_.feature_dim) throw Error(ErrorCode::SizeMismatch, "network input shape mismatch");
  Matrix z, h;
  z.noalias() = params_.w1 * features;
  z.colwise() += params_.b1;
  activate<S>(shape_.activation, z, h);
  z.noalias() = params_.w2 * h;
  z.colwise() += params_.b2;
  activate<S>(shape_.activation, z, h);
  sigma.noalias() = params_.w3.row(0) * h;
  sigma.array() += params_.b3(0);
  sigma = sigma.unaryExpr([](S x) { return softplus(x); });
  if (!sigma.allFinite()) throw Error(ErrorCode::NonFiniteActivation, "network produced a non-finite density");
}

template <typename S>
void RadianceMlp<S>::backward(const MlpTape<S>& t, const Eigen::Matrix<S, 1, Eigen::Dynamic>& dsigma,
                              const Eigen::Matrix<S, 3, Eigen::Dynamic>& drgb, MlpParams<S>& g,
                              Matrix* dfeatures) const {
  const Eigen::Index n = t.input.cols();
  if (dsigma.cols() != n || drgb.cols() != n) throw Error(ErrorCode::SizeMismatch, "gradient shape mismatch");
  const Eigen::Index a = shape_.appearance;

  const Eigen::Matrix<S, 3, Eigen::Dynamic> dzc = drgb.cwiseProduct(t.rgb.unaryExpr([](S c) { return c * (S(1) - c); }));
  g.wc.noalias() += dzc * t.head_in.transpose();
  g.bc += dzc.rowwise().sum();

  Matrix dz3(1 + a, n);
  dz3.row(0) = dsigma.cwiseProduct(t.z3.row(0).unaryExpr([](S x) { return sigmoid(x); }));
  dz3.bottomRows(a).noalias() = params_.wc.leftCols(a).transpose() * dzc;
  g.w3.noalias() += dz3 * t.h2.transpose();
  g.b3 += dz3.rowwise().sum();

  Matrix dh(params_.w3.cols(), n);
  dh.noalias() = params_.w3.transpose() * dz3;
  activate_backward<S>(shape_.activation, t.z2, dh);
  g.w2.noalias() += dh * t.h1.transpose();
  g.b2 += dh.rowwise().sum();

  Matrix dh1(params_.w2.cols(), n);
  dh1.noalias() = params_.w2.transpose() * dh;
  activate_backward<S>(shape_.activation, t.z1, dh1);
  g.w1.noalias() += dh1 * t.input.transpose();
  g.b1 += dh1.rowwise().sum();

  if (dfeatures != nullptr) {
    dfeatures->resize(t.input.rows(), n);
    dfeatures->noalias() = params_.w1.transpose() * dh1;
  }
}

template struct MlpParams<float>;
template struct MlpParams<double>;
template class RadianceMlp<float>;
template class RadianceMlp<double>;

}  // namespace ttrf
