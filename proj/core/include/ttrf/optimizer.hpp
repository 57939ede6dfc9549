#pragma once

#include "ttrf/config.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace ttrf {

/// Exponential decay from lr_start to lr_end over decay_steps, constant after.
/// The endpoints are returned exactly.
double lr_at(std::int64_t step, const TrainConfig& config);

/// Mean over rays and channels of (pred - gt)^2; writes 2 (pred - gt) / (3 B)
/// into dpred. Throws SizeMismatch.
double mse_loss(std::span<const Eigen::Vector3d> pred, std::span<const Eigen::Vector3d> gt,
                std::span<Eigen::Vector3d> dpred);

/// First and second moment estimates of one parameter tensor.
template <typename S>
struct MomentSlot {
  std::vector<S> m;
  std::vector<S> v;
};

/// RAdam (rectified Adam) or plain Adam over a fixed list of parameter
/// tensors, addressed by slot index. Call begin_step() once per optimizer
/// step, then update() for every slot.
template <typename S>
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double beta1, double beta2, double eps)
      : kind_(kind), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  static Optimizer from_config(const TrainConfig& c) { return Optimizer(c.optimizer, c.beta1, c.beta2, c.eps); }

  void begin_step() { ++t_; }

  /// Throws NonFiniteGradient (parameters untouched) when a gradient is NaN
  /// or infinite.
  void update(std::size_t slot, std::span<S> params, std::span<const S> grads, double lr);

  /// Whether the variance rectification applies at step t.
  [[nodiscard]] bool rectified(std::int64_t t) const;
  /// Rectification factor r_t (valid when rectified(t)).
  [[nodiscard]] double rectification(std::int64_t t) const;

  [[nodiscard]] std::int64_t step_count() const { return t_; }
  [[nodiscard]] OptimizerKind kind() const { return kind_; }
  std::vector<MomentSlot<S>>& slots() { return slots_; }
  [[nodiscard]] const std::vector<MomentSlot<S>>& slots() const { return slots_; }
  void set_step_count(std::int64_t t) { t_ = t; }

 private:
  OptimizerKind kind_ = OptimizerKind::RAdam;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<MomentSlot<S>> slots_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace ttrf
