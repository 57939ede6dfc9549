#pragma once

#include "ttrf/error.hpp"
#include "ttrf/field.hpp"
#include "ttrf/geometry.hpp"
#include "ttrf/network.hpp"
#include "ttrf/parallel.hpp"
#include "ttrf/random.hpp"
#include "ttrf/traversal.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace ttrf {

struct RenderSettings {
  int n_coarse = 128;
  int n_fine = 128;
  Eigen::Vector3d background = Eigen::Vector3d::Ones();
  std::size_t max_hits = kDefaultMaxHits;
};

struct RenderOutput {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
  double accumulation = 0.0;
};

/// Arc-length parameterization of the occupied part of a trace: s runs from 0
/// to total() over the segments back to back, skipping the gaps between them.
class ArcLength {
 public:
  explicit ArcLength(const RaySegmentTrace& trace);

  [[nodiscard]] double total() const { return total_; }
  /// Segment index and ray distance at arc length s (clamped to [0, total]).
  [[nodiscard]] std::pair<std::size_t, double> locate(double s) const;
  [[nodiscard]] double to_t(double s) const { return locate(s).second; }
  /// Arc length at ray distance t; t must lie in a segment.
  [[nodiscard]] double to_s(double t) const;

 private:
  const RaySegmentTrace* trace_;
  std::vector<double> start_;  // arc length at each segment entry
  double total_ = 0.0;
};

/// n strata of equal arc length over [0, total); one uniform draw per stratum,
/// or the stratum midpoint when rng is null. Sorted.
std::vector<double> stratified_arc(double total, int n, Rng* rng);

/// Inverse-CDF draws from the piecewise-constant density whose bins are the
/// weights.size() equal strata of [0, total). Falls back to stratified_arc
/// when the weights sum to zero. Sorted; deterministic quantiles when rng is null.
std::vector<double> importance_arc(double total, std::span<const double> weights, int n, Rng* rng);

/// Coarse sample distances over the occupied part of the trace.
/// Throws EmptyTrace.
std::vector<double> sample_coarse(const RaySegmentTrace& trace, int n_coarse, Rng* rng);

/// Fine sample distances drawn from the coarse weights; the coarse strata are
/// the histogram bins, so coarse_t only fixes their count.
std::vector<double> sample_fine(const RaySegmentTrace& trace, std::span<const double> weights,
                                std::span<const double> coarse_t, int n_fine, Rng* rng);

/// w_i = (1 - exp(-sigma_i delta_i)) exp(-sum_{j<i} sigma_j delta_j)
std::vector<double> compute_weights(std::span<const double> sigma, std::span<const double> delta);

/// Transmittance before each sample, plus the residual after the last one
/// (size n + 1).
std::vector<double> compute_transmittance(std::span<const double> sigma, std::span<const double> delta);

/// Forward spacings in arc length; the last sample extends to `total`.
std::vector<double> arc_deltas(std::span<const double> s, double total);

/// One sample along a ray, resolved to its tet and barycentrics.
struct SamplePoint {
  double t = 0.0;
  TetId tet = 0;
  Barycentric4 bary;
  Point3 position = Point3::Zero();
};

/// Everything render_chunk_backward needs, for a chunk of rays.
template <typename S>
struct RenderTape {
  std::vector<SamplePoint> samples;    // merged samples of every ray, ray-major
  std::vector<std::size_t> offsets;    // ray r owns [offsets[r], offsets[r + 1])
  std::vector<double> delta;           // per sample
  std::vector<double> weight;          // per sample
  std::vector<double> trans;           // transmittance before each sample
  std::vector<double> final_trans;     // per ray
  std::vector<Eigen::Vector3d> background;
  MlpOutput<S> net;
  MlpTape<S> mlp;
  Eigen::Matrix<S, 3, Eigen::Dynamic> dirs;
};

/// Read/write access to the trainable field behind a renderer. A view defines
/// how rays map to occupied segments and how sample features are gathered and
/// their gradients scattered.
template <typename S>
class TetraFieldView {
 public:
  TetraFieldView(const TetMesh& mesh, const FaceBvh& bvh, FeatureField<S>& field, std::size_t max_hits)
      : mesh_(&mesh), bvh_(&bvh), field_(&field), max_hits_(max_hits) {}

  [[nodiscard]] Eigen::Index dim() const { return field_->dim(); }
  [[nodiscard]] RaySegmentTrace trace(const Ray& ray) const { return trace_ray(*bvh_, *mesh_, ray, max_hits_); }

  void gather(const SamplePoint& p, S* out) const {
    const Eigen::Index f = field_->dim();
    const Tetra& tet = mesh_->tets[p.tet];
    const S* r0 = field_->features.row(tet[0]).data();
    const S* r1 = field_->features.row(tet[1]).data();
    const S* r2 = field_->features.row(tet[2]).data();
    const S* r3 = field_->features.row(tet[3]).data();
    const S l0 = static_cast<S>(p.bary[0]), l1 = static_cast<S>(p.bary[1]);
    const S l2 = static_cast<S>(p.bary[2]), l3 = static_cast<S>(p.bary[3]);
    for (Eigen::Index k = 0; k < f; ++k) out[k] = l0 * r0[k] + l1 * r1[k] + l2 * r2[k] + l3 * r3[k];
  }

  void scatter(const SamplePoint& p, const S* grad) {
    const Eigen::Index f = field_->dim();
    const Tetra& tet = mesh_->tets[p.tet];
    for (int i = 0; i < 4; ++i) {
      S* g = field_->grad.row(tet[i]).data();
      const S l = static_cast<S>(p.bary[i]);
      for (Eigen::Index k = 0; k < f; ++k) g[k] += l * grad[k];
    }
  }

 private:
  const TetMesh* mesh_;
  const FaceBvh* bvh_;
  FeatureField<S>* field_;
  std::size_t max_hits_;
};

namespace detail {

inline std::vector<SamplePoint> resolve_samples(const RaySegmentTrace& trace, const ArcLength& arc, const Ray& ray,
                                                std::span<const double> s) {
  std::vector<SamplePoint> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto [seg, t] = arc.locate(s[i]);
    const auto [tet, bary] = barycentric_at(trace.segments[seg], t);
    out[i] = {t, tet, bary, ray.at(t)};
  }
  return out;
}

template <typename S, typename View>
void gather_features(const View& view, std::span<const SamplePoint> samples,
                     Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& features) {
  features.resize(view.dim(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    view.gather(samples[j], features.col(static_cast<Eigen::Index>(j)).data());
  }
}

}  // namespace detail

/// Renders a chunk of rays with their precomputed traces: coarse pass,
/// importance draw, then one evaluation of the merged samples. `seeds` gives
/// one rng seed per ray; empty means deterministic midpoints and quantiles.
/// Fills `tape` when non-null.
template <typename S, typename View>
void render_chunk(const View& view, const RadianceMlp<S>& mlp, std::span<const Ray> rays,
                  std::span<const RaySegmentTrace> traces, const RenderSettings& settings,
                  std::span<const std::uint64_t> seeds, std::span<RenderOutput> out, RenderTape<S>* tape) {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  const std::size_t n_rays = rays.size();
  if (traces.size() != n_rays || out.size() != n_rays || (!seeds.empty() && seeds.size() != n_rays)) {
    throw Error(ErrorCode::SizeMismatch, "render_chunk: argument lengths differ");
  }
  if (settings.n_coarse <= 0 || settings.n_fine < 0) {
    throw Error(ErrorCode::InvalidArgument, "render_chunk: sample counts must be positive");
  }

  std::vector<std::optional<Rng>> rngs(n_rays);
  std::vector<std::optional<ArcLength>> arcs(n_rays);
  std::vector<std::vector<double>> arc_s(n_rays);
  for (std::size_t r = 0; r < n_rays; ++r) {
    if (traces[r].empty()) continue;
    arcs[r].emplace(traces[r]);
    if (arcs[r]->total() <= 0.0) {
      arcs[r].reset();
      continue;
    }
    if (!seeds.empty()) rngs[r].emplace(seeds[r]);
    arc_s[r] = stratified_arc(arcs[r]->total(), settings.n_coarse, rngs[r] ? &*rngs[r] : nullptr);
  }

  if (settings.n_fine > 0) {
    std::vector<SamplePoint> coarse;
    std::vector<std::size_t> coarse_off(n_rays + 1, 0);
    for (std::size_t r = 0; r < n_rays; ++r) {
      if (arcs[r]) {
        auto pts = detail::resolve_samples(traces[r], *arcs[r], rays[r], arc_s[r]);
        coarse.insert(coarse.end(), pts.begin(), pts.end());
      }
      coarse_off[r + 1] = coarse.size();
    }
    Matrix features;
    detail::gather_features<S>(view, coarse, features);
    MlpOutput<S> net;
    if (features.cols() > 0) mlp.density(features, net.sigma);
    for (std::size_t r = 0; r < n_rays; ++r) {
      if (!arcs[r]) continue;
      const std::size_t n = coarse_off[r + 1] - coarse_off[r];
      std::vector<double> sigma(n);
      for (std::size_t i = 0; i < n; ++i) sigma[i] = static_cast<double>(net.sigma(static_cast<Eigen::Index>(coarse_off[r] + i)));
      const auto delta = arc_deltas(arc_s[r], arcs[r]->total());
      const auto w = compute_weights(sigma, delta);
      auto fine = importance_arc(arcs[r]->total(), w, settings.n_fine, rngs[r] ? &*rngs[r] : nullptr);
      auto& s = arc_s[r];
      s.insert(s.end(), fine.begin(), fine.end());
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
  }

  RenderTape<S> local;
  RenderTape<S>& tp = tape != nullptr ? *tape : local;
  tp.samples.clear();
  tp.offsets.assign(n_rays + 1, 0);
  tp.delta.clear();
  for (std::size_t r = 0; r < n_rays; ++r) {
    if (arcs[r]) {
      auto pts = detail::resolve_samples(traces[r], *arcs[r], rays[r], arc_s[r]);
      tp.samples.insert(tp.samples.end(), pts.begin(), pts.end());
      const auto d = arc_deltas(arc_s[r], arcs[r]->total());
      tp.delta.insert(tp.delta.end(), d.begin(), d.end());
    }
    tp.offsets[r + 1] = tp.samples.size();
  }
  const auto n_samples = static_cast<Eigen::Index>(tp.samples.size());
  Matrix features;
  detail::gather_features<S>(view, tp.samples, features);
  tp.dirs.resize(3, n_samples);
  for (std::size_t r = 0; r < n_rays; ++r) {
    for (std::size_t j = tp.offsets[r]; j < tp.offsets[r + 1]; ++j) {
      tp.dirs.col(static_cast<Eigen::Index>(j)) = rays[r].direction.cast<S>();
    }
  }
  if (n_samples > 0) {
    mlp.forward(features, tp.dirs, tp.net, tape != nullptr ? &tp.mlp : nullptr);
  } else {
    tp.net.sigma.resize(1, 0);
    tp.net.rgb.resize(3, 0);
  }

  tp.weight.assign(tp.samples.size(), 0.0);
  tp.trans.assign(tp.samples.size(), 1.0);
  tp.final_trans.assign(n_rays, 1.0);
  tp.background.assign(n_rays, settings.background);
  for (std::size_t r = 0; r < n_rays; ++r) {
    RenderOutput o;
    double transmittance = 1.0;
    double wsum = 0.0;
    double wt = 0.0;
    for (std::size_t j = tp.offsets[r]; j < tp.offsets[r + 1]; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const double sd = static_cast<double>(tp.net.sigma(col)) * tp.delta[j];
      const double alpha = -std::expm1(-sd);
      const double w = transmittance * alpha;
      tp.trans[j] = transmittance;
      tp.weight[j] = w;
      o.color += w * tp.net.rgb.col(col).template cast<double>();
      wsum += w;
      wt += w * tp.samples[j].t;
      transmittance *= std::exp(-sd);
    }
    tp.final_trans[r] = transmittance;
    o.color += transmittance * settings.background;
    o.accumulation = wsum;
    o.depth = wsum > 0.0 ? wt / wsum : 0.0;
    out[r] = o;
  }
}

/// Reverse pass of render_chunk for the color output. Accumulates network
/// gradients into `mlp_grads` and writes per-sample feature gradients into
/// `dfeatures` (dim x samples) for a later scatter_feature_grads.
template <typename S>
void render_chunk_backward(const RadianceMlp<S>& mlp, const RenderTape<S>& tape,
                           std::span<const Eigen::Vector3d> dcolor, MlpParams<S>& mlp_grads,
                           Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& dfeatures) {
  const std::size_t n_rays = tape.offsets.size() - 1;
  if (dcolor.size() != n_rays) throw Error(ErrorCode::SizeMismatch, "render_chunk_backward: gradient count");
  const auto n = static_cast<Eigen::Index>(tape.samples.size());
  Eigen::Matrix<S, 1, Eigen::Dynamic> dsigma(1, n);
  Eigen::Matrix<S, 3, Eigen::Dynamic> drgb(3, n);
  for (std::size_t r = 0; r < n_rays; ++r) {
    const Eigen::Vector3d& dc = dcolor[r];
    // suffix = sum_{i>k} w_i c_i + T_final * bg, walked back to front
    Eigen::Vector3d suffix = tape.final_trans[r] * tape.background[r];
    for (std::size_t j = tape.offsets[r + 1]; j-- > tape.offsets[r];) {
      const auto col = static_cast<Eigen::Index>(j);
      const Eigen::Vector3d c = tape.net.rgb.col(col).template cast<double>();
      const double t_next = tape.trans[j] - tape.weight[j];
      dsigma(col) = static_cast<S>(tape.delta[j] * dc.dot(t_next * c - suffix));
      drgb.col(col) = (tape.weight[j] * dc).template cast<S>();
      suffix += tape.weight[j] * c;
    }
  }
  if (n == 0) {
    dfeatures.resize(0, 0);
    return;
  }
  mlp.backward(tape.mlp, dsigma, drgb, mlp_grads, &dfeatures);
}

template <typename S, typename View>
void scatter_feature_grads(View& view, const RenderTape<S>& tape,
                           const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& dfeatures) {
  for (std::size_t j = 0; j < tape.samples.size(); ++j) {
    view.scatter(tape.samples[j], dfeatures.col(static_cast<Eigen::Index>(j)).data());
  }
}

/// Single-ray convenience wrapper around render_chunk.
template <typename S, typename View>
RenderOutput render_ray(const View& view, const RadianceMlp<S>& mlp, const Ray& ray, const RaySegmentTrace& trace,
                        const RenderSettings& settings, std::optional<std::uint64_t> seed,
                        RenderTape<S>* tape = nullptr) {
  RenderOutput out;
  std::uint64_t s = seed.value_or(0);
  render_chunk<S>(view, mlp, std::span<const Ray>(&ray, 1), std::span<const RaySegmentTrace>(&trace, 1), settings,
                  seed ? std::span<const std::uint64_t>(&s, 1) : std::span<const std::uint64_t>(),
                  std::span<RenderOutput>(&out, 1), tape);
  return out;
}

template <typename S>
void render_ray_backward(const RadianceMlp<S>& mlp, const RenderTape<S>& tape, const Eigen::Vector3d& dcolor,
                         MlpParams<S>& mlp_grads, Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& dfeatures) {
  render_chunk_backward<S>(mlp, tape, std::span<const Eigen::Vector3d>(&dcolor, 1), mlp_grads, dfeatures);
}

inline constexpr std::size_t kRenderChunk = 64;

/// Forward-only rendering of many rays, parallel over fixed chunks. Results
/// do not depend on the thread count.
template <typename S, typename View>
std::vector<RenderOutput> render_rays(const View& view, const RadianceMlp<S>& mlp, std::span<const Ray> rays,
                                      const RenderSettings& settings, std::optional<std::uint64_t> seed,
                                      int threads) {
  std::vector<RenderOutput> out(rays.size());
  const std::size_t chunks = (rays.size() + kRenderChunk - 1) / kRenderChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kRenderChunk;
    const std::size_t end = std::min(rays.size(), begin + kRenderChunk);
    std::vector<RaySegmentTrace> traces;
    traces.reserve(end - begin);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = begin; i < end; ++i) {
      traces.push_back(view.trace(rays[i]));
      if (seed) seeds.push_back(derive_seed(*seed, i));
    }
    render_chunk<S>(view, mlp, rays.subspan(begin, end - begin), traces, settings, seeds,
                    std::span<RenderOutput>(out).subspan(begin, end - begin), nullptr);
  });
  return out;
}

}  // namespace ttrf
