#include "ttrf/train.hpp"

#include "ttrf/error.hpp"
#include "ttrf/metrics.hpp"
#include "ttrf/parallel.hpp"
#include "ttrf/random.hpp"
#include "ttrf/triangulation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace ttrf {

namespace {

constexpr std::size_t kTrainChunk = 64;
constexpr std::uint64_t kStepStream = 0x57e9;
constexpr std::uint64_t kPixelStream = 0x9124;

}  // namespace

TrainData make_train_data(std::span<const View> views, const Eigen::Vector3d& background) {
  if (views.empty()) throw Error(ErrorCode::InvalidArgument, "no training views");
  TrainData d;
  d.offsets.push_back(0);
  for (const View& v : views) {
    if (v.image.width != v.camera.width || v.image.height != v.camera.height) {
      throw Error(ErrorCode::DimMismatch, "image " + v.name + " does not match its camera");
    }
    d.cameras.push_back(v.camera);
    d.targets.push_back(v.image.composited(background));
    d.offsets.push_back(d.offsets.back() + v.image.pixels());
  }
  return d;
}

void write_log_header(std::ostream& out) { out << kLogHeader << '\n'; }

void write_log_row(std::ostream& out, const LogRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,", static_cast<long long>(row.step), row.loss, row.lr);
  out << buf;
  if (row.psnr_eval) {
    std::snprintf(buf, sizeof buf, "%.9g", *row.psnr_eval);
    out << buf;
  }
  out << '\n';
}

double EvalResult::mean_psnr() const {
  double s = 0.0;
  for (double p : psnr) s += p;
  return psnr.empty() ? 0.0 : s / static_cast<double>(psnr.size());
}

double EvalResult::mean_ssim() const {
  double s = 0.0;
  for (double p : ssim) s += p;
  return ssim.empty() ? 0.0 : s / static_cast<double>(ssim.size());
}

template <typename FieldView>
RenderedView render_view(const FieldView& view, const RadianceMlp<float>& mlp, const Camera& cam,
                         const RenderSettings& settings, int threads) {
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(cam.width) * cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) rays.push_back(pixel_ray(cam, x, y));
  }
  const auto out = render_rays<float>(view, mlp, rays, settings, std::nullopt, threads);
  RenderedView r;
  r.color = Image(cam.width, cam.height, 1.0f);
  r.depth.resize(out.size());
  r.accumulation.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) r.color.data[i * 4 + k] = static_cast<float>(out[i].color[static_cast<Eigen::Index>(k)]);
    r.depth[i] = out[i].depth;
    r.accumulation[i] = out[i].accumulation;
  }
  return r;
}

Image depth_image(const RenderedView& r, int width, int height) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < r.depth.size(); ++i) {
    if (r.accumulation[i] >= 0.5 && std::isfinite(r.depth[i])) {
      lo = std::min(lo, r.depth[i]);
      hi = std::max(hi, r.depth[i]);
    }
  }
  Image img(width, height, 1.0f);
  for (std::size_t i = 0; i < r.depth.size(); ++i) {
    float v = 1.0f;
    if (r.accumulation[i] >= 0.5 && std::isfinite(r.depth[i])) {
      v = hi > lo ? static_cast<float>((r.depth[i] - lo) / (hi - lo)) : 0.0f;
    }
    for (std::size_t k = 0; k < 3; ++k) img.data[i * 4 + k] = v;
  }
  return img;
}

template <typename FieldView>
EvalResult evaluate(const FieldView& view, const RadianceMlp<float>& mlp, std::span<const View> views,
                    const RenderSettings& settings, int threads, int max_views) {
  EvalResult res;
  const std::size_t n = max_views > 0 ? std::min<std::size_t>(views.size(), static_cast<std::size_t>(max_views))
                                      : views.size();
  for (std::size_t i = 0; i < n; ++i) {
    const View& v = views[i];
    const RenderedView r = render_view(view, mlp, v.camera, settings, threads);
    const Image gt = v.image.composited(settings.background);
    res.names.push_back(v.name);
    res.psnr.push_back(psnr(r.color, gt));
    res.ssim.push_back(ssim(r.color, gt));
  }
  return res;
}

namespace {

// Per-chunk results kept until the serial reduction.
struct ChunkResult {
  double loss_sum = 0.0;
  MlpParams<float> grads;
  RenderTape<float> tape;
  Eigen::MatrixXf dfeatures;
};

void apply_optimizer(Optimizer<float>& opt, FeatureField<float>& field, RadianceMlp<float>& mlp, double lr) {
  opt.begin_step();
  opt.update(0, std::span<float>(field.features.data(), static_cast<std::size_t>(field.features.size())),
             std::span<const float>(field.grad.data(), static_cast<std::size_t>(field.grad.size())), lr);
  std::size_t slot = 1;
  MlpParams<float>& g = mlp.grads();
  std::vector<std::pair<float*, const float*>> pairs;
  std::vector<std::size_t> sizes;
  g.for_each([&](std::string_view, float* data, Eigen::Index n, Eigen::Index, Eigen::Index) {
    pairs.emplace_back(nullptr, data);
    sizes.push_back(static_cast<std::size_t>(n));
  });
  std::size_t i = 0;
  mlp.params().for_each([&](std::string_view, float* data, Eigen::Index, Eigen::Index, Eigen::Index) {
    pairs[i++].first = data;
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    opt.update(slot++, std::span<float>(pairs[k].first, sizes[k]), std::span<const float>(pairs[k].second, sizes[k]), lr);
  }
}

}  // namespace

template <typename FieldView>
void train_steps(const TrainData& data, FieldView& view, FeatureField<float>& field, RadianceMlp<float>& mlp,
                 Optimizer<float>& optimizer, const TrainConfig& config, std::int64_t& step, std::int64_t end_step,
                 int threads, const TrainHooks& hooks) {
  config.validate();
  if (data.total_pixels() == 0) throw Error(ErrorCode::InvalidArgument, "empty training set");
  const RenderSettings settings = config.render_settings();
  const auto batch = static_cast<std::size_t>(config.batch_rays);
  const std::size_t chunks = (batch + kTrainChunk - 1) / kTrainChunk;
  const double total = static_cast<double>(data.total_pixels());

  std::vector<Ray> rays(batch);
  std::vector<Eigen::Vector3d> targets(batch);
  std::vector<ChunkResult> results(chunks);
  double window_loss = 0.0;
  std::int64_t window_steps = 0;

  while (step < end_step) {
    const std::uint64_t step_seed = derive_seed(config.seed ^ kStepStream, static_cast<std::uint64_t>(step));
    try {
      field.zero_grad();
      mlp.zero_grad();
      Rng rng = make_rng(step_seed, kPixelStream);
      for (std::size_t i = 0; i < batch; ++i) {
        const auto g = std::min(static_cast<std::size_t>(uniform01(rng) * total), data.total_pixels() - 1);
        const auto img = static_cast<std::size_t>(
            std::upper_bound(data.offsets.begin(), data.offsets.end(), g) - data.offsets.begin() - 1);
        const std::size_t local = g - data.offsets[img];
        const Camera& cam = data.cameras[img];
        const int x = static_cast<int>(local % static_cast<std::size_t>(cam.width));
        const int y = static_cast<int>(local / static_cast<std::size_t>(cam.width));
        rays[i] = pixel_ray(cam, x, y);
        const float* p = data.targets[img].at(x, y);
        targets[i] = Eigen::Vector3d(p[0], p[1], p[2]);
      }

      parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t begin = c * kTrainChunk;
        const std::size_t end = std::min(batch, begin + kTrainChunk);
        const std::size_t n = end - begin;
        std::vector<RaySegmentTrace> traces(n);
        std::vector<std::uint64_t> seeds(n);
        for (std::size_t i = 0; i < n; ++i) {
          traces[i] = view.trace(rays[begin + i]);
          seeds[i] = derive_seed(step_seed, begin + i);
        }
        ChunkResult& res = results[c];
        std::vector<RenderOutput> out(n);
        render_chunk<float>(view, mlp, std::span<const Ray>(rays).subspan(begin, n), traces, settings, seeds, out,
                            &res.tape);
        std::vector<Eigen::Vector3d> dcolor(n);
        res.loss_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const Eigen::Vector3d d = out[i].color - targets[begin + i];
          res.loss_sum += d.squaredNorm();
          dcolor[i] = 2.0 * d / (3.0 * static_cast<double>(batch));
        }
        res.grads = MlpParams<float>::zeros(mlp.shape());
        render_chunk_backward<float>(mlp, res.tape, dcolor, res.grads, res.dfeatures);
        res.tape.mlp = {};
      });

      double loss_sum = 0.0;
      for (ChunkResult& res : results) {
        loss_sum += res.loss_sum;
        mlp.grads() += res.grads;
        scatter_feature_grads(view, res.tape, res.dfeatures);
      }
      const double loss = loss_sum / (3.0 * static_cast<double>(batch));
      const double lr = lr_at(step, config);
      apply_optimizer(optimizer, field, mlp, lr);
      ++step;
      window_loss += loss;
      ++window_steps;

      const bool last = step == end_step;
      const bool log_now = last || (config.log_every > 0 && step % config.log_every == 0);
      const bool eval_now = !hooks.eval_views.empty() &&
                            (last || (config.eval_every > 0 && step % config.eval_every == 0));
      if (log_now || eval_now) {
        LogRow row{step, window_loss / static_cast<double>(window_steps), lr, std::nullopt};
        if (eval_now) {
          row.psnr_eval = evaluate(view, mlp, hooks.eval_views, settings, threads, config.eval_views).mean_psnr();
        }
        if (hooks.log != nullptr) write_log_row(*hooks.log, row);
        if (hooks.on_log) hooks.on_log(row);
        window_loss = 0.0;
        window_steps = 0;
      }
      if (hooks.on_checkpoint && (last || (config.checkpoint_every > 0 && step % config.checkpoint_every == 0))) {
        hooks.on_checkpoint(step);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(step) + ": " + e.what());
    }
  }
  field.zero_grad();
  mlp.zero_grad();
}

PointCloud prepare_cloud(const PointCloud& raw, const TrainConfig& config) {
  const PointCloud sub = subsample(raw, static_cast<std::size_t>(config.max_points), config.seed);
  return config.augment_ratio > 0.0 ? augment_random_points(sub, config.augment_ratio, config.seed) : sub;
}

TrainState init_train_state(const PointCloud& prepared, const TrainConfig& config) {
  config.validate();
  TrainState s;
  s.config = config;
  s.mesh = delaunay_triangulate(prepared.positions);
  s.field = init_field<float>(s.mesh, prepared, config.feature_dim, config.seed);
  s.mlp = RadianceMlp<float>::kaiming(config.mlp_shape(), config.seed);
  s.optimizer = Optimizer<float>::from_config(config);
  return s;
}

void train(TrainState& state, const Dataset& data, int threads, const TrainHooks& hooks) {
  const TrainData td = make_train_data(data.train, state.config.background_color());
  const FaceBvh bvh = FaceBvh::build(state.mesh);
  TetraFieldView<float> view(state.mesh, bvh, state.field, static_cast<std::size_t>(state.config.max_hits));
  train_steps(td, view, state.field, state.mlp, state.optimizer, state.config, state.step, state.config.total_steps,
              threads, hooks);
}

RenderedView render_state(const TrainState& state, const Camera& cam, int threads) {
  const FaceBvh bvh = FaceBvh::build(state.mesh);
  auto& field = const_cast<FeatureField<float>&>(state.field);
  const TetraFieldView<float> view(state.mesh, bvh, field, static_cast<std::size_t>(state.config.max_hits));
  return render_view(view, state.mlp, cam, state.config.render_settings(), threads);
}

EvalResult evaluate_state(const TrainState& state, std::span<const View> views, int threads, int max_views) {
  const FaceBvh bvh = FaceBvh::build(state.mesh);
  auto& field = const_cast<FeatureField<float>&>(state.field);
  const TetraFieldView<float> view(state.mesh, bvh, field, static_cast<std::size_t>(state.config.max_hits));
  return evaluate(view, state.mlp, views, state.config.render_settings(), threads, max_views);
}

GridRun train_dense_grid(const PointCloud& prepared, const Dataset& data, const TrainConfig& config,
                         std::int64_t steps, int threads, const TrainHooks& hooks) {
  config.validate();
  DenseGridField<float> grid = make_dense_grid<float>(prepared, config.feature_dim, config.seed);
  RadianceMlp<float> mlp = RadianceMlp<float>::kaiming(config.mlp_shape(), config.seed);
  Optimizer<float> opt = Optimizer<float>::from_config(config);
  GridFieldView<float> view(grid);
  const TrainData td = make_train_data(data.train, config.background_color());
  std::int64_t step = 0;
  train_steps(td, view, grid.field, mlp, opt, config, step, steps, threads, hooks);
  GridRun run;
  run.resolution = grid.resolution;
  run.eval = evaluate(view, mlp, data.test, config.render_settings(), threads, config.eval_views);
  return run;
}

template RenderedView render_view<TetraFieldView<float>>(const TetraFieldView<float>&, const RadianceMlp<float>&,
                                                         const Camera&, const RenderSettings&, int);
template RenderedView render_view<GridFieldView<float>>(const GridFieldView<float>&, const RadianceMlp<float>&,
                                                        const Camera&, const RenderSettings&, int);
template EvalResult evaluate<TetraFieldView<float>>(const TetraFieldView<float>&, const RadianceMlp<float>&,
                                                    std::span<const View>, const RenderSettings&, int, int);
template EvalResult evaluate<GridFieldView<float>>(const GridFieldView<float>&, const RadianceMlp<float>&,
                                                   std::span<const View>, const RenderSettings&, int, int);
template void train_steps<TetraFieldView<float>>(const TrainData&, TetraFieldView<float>&, FeatureField<float>&,
                                                 RadianceMlp<float>&, Optimizer<float>&, const TrainConfig&,
                                                 std::int64_t&, std::int64_t, int, const TrainHooks&);
template void train_steps<GridFieldView<float>>(const TrainData&, GridFieldView<float>&, FeatureField<float>&,
                                                RadianceMlp<float>&, Optimizer<float>&, const TrainConfig&,
                                                std::int64_t&, std::int64_t, int, const TrainHooks&);

}  // namespace ttrf
