#include "ttrf/optimizer.hpp"

#include "ttrf/error.hpp"

#include <cmath>

namespace ttrf {

double lr_at(std::int64_t step, const TrainConfig& c) {
  if (step <= 0) return c.lr_start;
  if (step >= c.decay_steps) return c.lr_end;
  const double frac = static_cast<double>(step) / static_cast<double>(c.decay_steps);
  return c.lr_start * std::pow(c.lr_end / c.lr_start, frac);
}

double mse_loss(std::span<const Eigen::Vector3d> pred, std::span<const Eigen::Vector3d> gt,
                std::span<Eigen::Vector3d> dpred) {
  if (pred.size() != gt.size() || dpred.size() != pred.size()) {
    throw Error(ErrorCode::SizeMismatch, "mse_loss: batch sizes differ");
  }
  if (pred.empty()) return 0.0;
  const double n = 3.0 * static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Eigen::Vector3d d = pred[i] - gt[i];
    sum += d.squaredNorm();
    dpred[i] = 2.0 * d / n;
  }
  return sum / n;
}

template <typename S>
bool Optimizer<S>::rectified(std::int64_t t) const {
  const double rho_inf = 2.0 / (1.0 - beta2_) - 1.0;
  const double b2t = std::pow(beta2_, static_cast<double>(t));
  const double rho_t = rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
  return rho_t > 4.0;
}

template <typename S>
double Optimizer<S>::rectification(std::int64_t t) const {
  const double rho_inf = 2.0 / (1.0 - beta2_) - 1.0;
  const double b2t = std::pow(beta2_, static_cast<double>(t));
  const double rho_t = rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
  return std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
}

template <typename S>
void Optimizer<S>::update(std::size_t slot, std::span<S> params, std::span<const S> grads, double lr) {
  if (params.size() != grads.size()) throw Error(ErrorCode::SizeMismatch, "optimizer: parameter/gradient sizes");
  if (t_ <= 0) throw Error(ErrorCode::InvalidArgument, "optimizer: begin_step() not called");
  for (const S g : grads) {
    if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient in slot " + std::to_string(slot));
  }
  if (slots_.size() <= slot) slots_.resize(slot + 1);
  MomentSlot<S>& st = slots_[slot];
  if (st.m.size() != params.size()) {
    if (!st.m.empty()) throw Error(ErrorCode::SizeMismatch, "optimizer: slot size changed");
    st.m.assign(params.size(), S(0));
    st.v.assign(params.size(), S(0));
  }

  const double t = static_cast<double>(t_);
  const double bc1 = 1.0 - std::pow(beta1_, t);
  const double bc2 = 1.0 - std::pow(beta2_, t);
  const S b1 = static_cast<S>(beta1_);
  const S b2 = static_cast<S>(beta2_);
  const S ob1 = static_cast<S>(1.0 - beta1_);
  const S ob2 = static_cast<S>(1.0 - beta2_);
  const bool adaptive = kind_ == OptimizerKind::Adam || rectified(t_);
  const double r = kind_ == OptimizerKind::Adam ? 1.0 : (adaptive ? rectification(t_) : 1.0);
  // params -= step * m / (sqrt(v / bc2) + eps) in the adaptive case,
  // params -= step * m otherwise; step folds in the bias corrections.
  const S step = static_cast<S>(lr * r / bc1);
  const S inv_bc2 = static_cast<S>(1.0 / bc2);
  const S eps = static_cast<S>(eps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const S g = grads[i];
    st.m[i] = b1 * st.m[i] + ob1 * g;
    st.v[i] = b2 * st.v[i] + ob2 * g * g;
    if (adaptive) {
      params[i] -= step * st.m[i] / (std::sqrt(st.v[i] * inv_bc2) + eps);
    } else {
      params[i] -= step * st.m[i];
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace ttrf
