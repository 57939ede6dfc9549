#pragma once

#include "ttrf/checkpoint.hpp"
#include "ttrf/cloud.hpp"
#include "ttrf/dataset.hpp"
#include "ttrf/dense_grid.hpp"
#include "ttrf/render.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ttrf {

/// Training targets: cameras and RGB images composited over the background.
struct TrainData {
  std::vector<Camera> cameras;
  std::vector<Image> targets;
  std::vector<std::size_t> offsets;  // first global pixel index of each image

  [[nodiscard]] std::size_t total_pixels() const { return offsets.empty() ? 0 : offsets.back(); }
};

TrainData make_train_data(std::span<const View> views, const Eigen::Vector3d& background);

struct LogRow {
  std::int64_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> psnr_eval;
};

inline constexpr const char* kLogHeader = "step,loss,lr,psnr_eval";
void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const LogRow& row);

struct TrainHooks {
  std::ostream* log = nullptr;                                 // CSV metric log
  std::function<void(const LogRow&)> on_log;                   // progress reporting
  std::function<void(std::int64_t step)> on_checkpoint;        // every checkpoint_every steps
  std::span<const View> eval_views;                            // for psnr_eval every eval_every steps
};

struct RenderedView {
  Image color;                       // RGB, alpha 1
  std::vector<double> depth;         // per pixel
  std::vector<double> accumulation;  // per pixel
};

/// Deterministic render (stratum midpoints, quantile fine samples) of a
/// whole camera, parallel over ray chunks.
template <typename FieldView>
RenderedView render_view(const FieldView& view, const RadianceMlp<float>& mlp, const Camera& cam,
                         const RenderSettings& settings, int threads);

/// Depth normalized to [0, 1] over the pixels with accumulation >= 0.5; the
/// others are drawn at the far value 1.
Image depth_image(const RenderedView& r, int width, int height);

struct EvalResult {
  std::vector<std::string> names;
  std::vector<double> psnr;
  std::vector<double> ssim;
  [[nodiscard]] double mean_psnr() const;
  [[nodiscard]] double mean_ssim() const;
};

/// PSNR/SSIM of rendered views against their images composited over the
/// settings' background. max_views 0 evaluates all of them.
template <typename FieldView>
EvalResult evaluate(const FieldView& view, const RadianceMlp<float>& mlp, std::span<const View> views,
                    const RenderSettings& settings, int threads, int max_views = 0);

/// Optimizes `field` and `mlp` jointly from step `step` up to `end_step`.
/// Each step draws batch_rays pixels uniformly over all images. Results are
/// independent of `threads`. Errors are rethrown with the step number.
template <typename FieldView>
void train_steps(const TrainData& data, FieldView& view, FeatureField<float>& field, RadianceMlp<float>& mlp,
                 Optimizer<float>& optimizer, const TrainConfig& config, std::int64_t& step, std::int64_t end_step,
                 int threads, const TrainHooks& hooks = {});

/// Subsamples to max_points and appends augment_ratio random points.
PointCloud prepare_cloud(const PointCloud& raw, const TrainConfig& config);

/// Triangulates the prepared cloud and initializes features and network.
TrainState init_train_state(const PointCloud& prepared, const TrainConfig& config);

/// Trains a TrainState until config.total_steps.
void train(TrainState& state, const Dataset& data, int threads, const TrainHooks& hooks = {});

/// Renders a view of a trained state.
RenderedView render_state(const TrainState& state, const Camera& cam, int threads);

/// Evaluates a trained state on the given views.
EvalResult evaluate_state(const TrainState& state, std::span<const View> views, int threads, int max_views = 0);

/// Dense-grid baseline with the parameter-matching rule: R^3 >= |prepared|
/// nodes, same feature width and network. Trains for `steps` and returns the
/// eval metrics.
struct GridRun {
  int resolution = 0;
  EvalResult eval;
};
GridRun train_dense_grid(const PointCloud& prepared, const Dataset& data, const TrainConfig& config,
                         std::int64_t steps, int threads, const TrainHooks& hooks = {});

}  // namespace ttrf
