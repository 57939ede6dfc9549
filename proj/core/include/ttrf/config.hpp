#pragma once

#include "ttrf/network.hpp"
#include "ttrf/render.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ttrf {

enum class OptimizerKind { RAdam, Adam };
enum class BackgroundMode { White, Black };

std::string_view to_string(OptimizerKind k);
std::string_view to_string(BackgroundMode b);

struct TrainConfig {
  int batch_rays = 4096;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  int decay_steps = 300000;
  int total_steps = 300000;
  int n_coarse = 128;
  int n_fine = 128;
  int max_hits = 512;
  int feature_dim = 64;
  int hidden = 128;
  int appearance = 128;
  int dir_frequencies = 4;
  TrunkActivation activation = TrunkActivation::Relu;
  std::uint64_t seed = 0;
  BackgroundMode background = BackgroundMode::White;
  OptimizerKind optimizer = OptimizerKind::RAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double augment_ratio = 0.5;
  int max_points = 1000000;
  int log_every = 100;
  int eval_every = 0;        // 0: evaluate only at the end
  int checkpoint_every = 0;  // 0: checkpoint only at the end
  int eval_views = 0;        // 0: all test views
  std::string data_dir;      // scene the model was trained on (informational)

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;

  [[nodiscard]] MlpShape mlp_shape() const;
  [[nodiscard]] RenderSettings render_settings() const;
  [[nodiscard]] Eigen::Vector3d background_color() const;

  /// Settings sized for a single desktop CPU: smaller ray batches and sample
  /// counts, 20k steps with the learning-rate decay compressed to match.
  static TrainConfig desk();
};

/// Parses `key = value` lines; blank lines and '#' comments are ignored.
/// Unknown keys and malformed values throw ParseError.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
/// Every field, one `key = value` line each, in declaration order.
std::string serialize_config(const TrainConfig& config);

/// Sets one field from its textual value.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);

}  // namespace ttrf
