#include "ttrf/render.hpp"

#include <numeric>

namespace ttrf {

ArcLength::ArcLength(const RaySegmentTrace& trace) : trace_(&trace) {
  start_.reserve(trace.segments.size());
  for (const auto& seg : trace.segments) {
    start_.push_back(total_);
    total_ += std::max(0.0, seg.length());
  }
}

std::pair<std::size_t, double> ArcLength::locate(double s) const {
  if (start_.empty()) throw Error(ErrorCode::EmptyTrace, "arc length of an empty trace");
  s = std::clamp(s, 0.0, total_);
  auto it = std::upper_bound(start_.begin(), start_.end(), s);
  std::size_t k = static_cast<std::size_t>(it - start_.begin()) - 1;
  // Skip zero-length segments so the sample lands inside a real interval.
  while (k + 1 < start_.size() && trace_->segments[k].length() <= 0.0) ++k;
  const auto& seg = trace_->segments[k];
  const double t = std::clamp(seg.t_in + (s - start_[k]), seg.t_in, seg.t_out);
  return {k, t};
}

double ArcLength::to_s(double t) const {
  for (std::size_t k = 0; k < start_.size(); ++k) {
    const auto& seg = trace_->segments[k];
    if (t >= seg.t_in && t <= seg.t_out) return start_[k] + (t - seg.t_in);
  }
  throw Error(ErrorCode::OutOfSegment, "distance is not inside the trace");
}

std::vector<double> stratified_arc(double total, int n, Rng* rng) {
  if (n <= 0) return {};
  std::vector<double> s(static_cast<std::size_t>(n));
  const double step = total / n;
  for (int i = 0; i < n; ++i) {
    const double u = rng != nullptr ? uniform01(*rng) : 0.5;
    s[static_cast<std::size_t>(i)] = (i + u) * step;
  }
  return s;
}

std::vector<double> importance_arc(double total, std::span<const double> weights, int n, Rng* rng) {
  if (n <= 0) return {};
  const std::size_t bins = weights.size();
  std::vector<double> cdf(bins + 1, 0.0);
  for (std::size_t i = 0; i < bins; ++i) cdf[i + 1] = cdf[i] + std::max(0.0, weights[i]);
  const double sum = cdf.back();
  if (bins == 0 || !(sum > 0.0) || !std::isfinite(sum)) return stratified_arc(total, n, rng);

  std::vector<double> u(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    u[static_cast<std::size_t>(j)] = rng != nullptr ? uniform01(*rng) : (j + 0.5) / n;
  }
  std::sort(u.begin(), u.end());
  const double width = total / static_cast<double>(bins);
  std::vector<double> s(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double target = u[j] * sum;
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), target);
    std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1, bins - 1);
    // Zero-weight bins have zero CDF width and are never landed in.
    while (weights[b] <= 0.0 && b > 0) --b;
    const double wb = std::max(0.0, weights[b]);
    const double frac = wb > 0.0 ? std::clamp((target - cdf[b]) / wb, 0.0, 1.0) : 0.5;
    s[j] = std::min((static_cast<double>(b) + frac) * width, total);
  }
  return s;
}

namespace {

std::vector<double> arc_to_t(const ArcLength& arc, const std::vector<double>& s) {
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = arc.to_t(s[i]);
  return t;
}

ArcLength checked_arc(const RaySegmentTrace& trace) {
  if (trace.empty()) throw Error(ErrorCode::EmptyTrace, "trace has no segments");
  ArcLength arc(trace);
  if (!(arc.total() > 0.0)) throw Error(ErrorCode::EmptyTrace, "trace has zero occupied length");
  return arc;
}

}  // namespace

std::vector<double> sample_coarse(const RaySegmentTrace& trace, int n_coarse, Rng* rng) {
  const ArcLength arc = checked_arc(trace);
  return arc_to_t(arc, stratified_arc(arc.total(), n_coarse, rng));
}

std::vector<double> sample_fine(const RaySegmentTrace& trace, std::span<const double> weights,
                                std::span<const double> coarse_t, int n_fine, Rng* rng) {
  if (weights.size() != coarse_t.size()) throw Error(ErrorCode::SizeMismatch, "one weight per coarse sample");
  const ArcLength arc = checked_arc(trace);
  return arc_to_t(arc, importance_arc(arc.total(), weights, n_fine, rng));
}

std::vector<double> compute_weights(std::span<const double> sigma, std::span<const double> delta) {
  if (sigma.size() != delta.size()) throw Error(ErrorCode::SizeMismatch, "sigma and delta lengths differ");
  std::vector<double> w(sigma.size());
  double optical = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double sd = sigma[i] * delta[i];
    w[i] = -std::expm1(-sd) * std::exp(-optical);
    optical += sd;
  }
  return w;
}

std::vector<double> compute_transmittance(std::span<const double> sigma, std::span<const double> delta) {
  if (sigma.size() != delta.size()) throw Error(ErrorCode::SizeMismatch, "sigma and delta lengths differ");
  std::vector<double> t(sigma.size() + 1);
  double optical = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    t[i] = std::exp(-optical);
    optical += sigma[i] * delta[i];
  }
  t.back() = std::exp(-optical);
  return t;
}

std::vector<double> arc_deltas(std::span<const double> s, double total) {
  std::vector<double> d(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double next = i + 1 < s.size() ? s[i + 1] : total;
    d[i] = std::max(0.0, next - s[i]);
  }
  return d;
}

}  // namespace ttrf
