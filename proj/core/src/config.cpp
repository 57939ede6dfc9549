#include "ttrf/config.hpp"

#include "ttrf/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace ttrf {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::RAdam ? "radam" : "adam"; }
std::string_view to_string(BackgroundMode b) { return b == BackgroundMode::White ? "white" : "black"; }

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError, "bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

struct Field {
  std::string_view key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define TTRF_INT_FIELD(name)                                                                        \
  Field {                                                                                           \
    #name, [](TrainConfig& c, std::string_view v) { c.name = parse_number<int>(#name, v); },        \
        [](const TrainConfig& c) { return std::to_string(c.name); }                                 \
  }
#define TTRF_DOUBLE_FIELD(name)                                                                     \
  Field {                                                                                           \
    #name, [](TrainConfig& c, std::string_view v) { c.name = parse_number<double>(#name, v); },     \
        [](const TrainConfig& c) { return format_double(c.name); }                                  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TTRF_INT_FIELD(batch_rays),
      TTRF_DOUBLE_FIELD(lr_start),
      TTRF_DOUBLE_FIELD(lr_end),
      TTRF_INT_FIELD(decay_steps),
      TTRF_INT_FIELD(total_steps),
      TTRF_INT_FIELD(n_coarse),
      TTRF_INT_FIELD(n_fine),
      TTRF_INT_FIELD(max_hits),
      TTRF_INT_FIELD(feature_dim),
      TTRF_INT_FIELD(hidden),
      TTRF_INT_FIELD(appearance),
      TTRF_INT_FIELD(dir_frequencies),
      Field{"activation", [](TrainConfig& c, std::string_view v) { c.activation = parse_activation(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.activation)); }},
      Field{"seed", [](TrainConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v); },
            [](const TrainConfig& c) { return std::to_string(c.seed); }},
      Field{"background",
            [](TrainConfig& c, std::string_view v) {
              if (v == "white") c.background = BackgroundMode::White;
              else if (v == "black") c.background = BackgroundMode::Black;
              else throw Error(ErrorCode::ParseError, "background must be white or black");
            },
            [](const TrainConfig& c) { return std::string(to_string(c.background)); }},
      Field{"optimizer",
            [](TrainConfig& c, std::string_view v) {
              if (v == "radam") c.optimizer = OptimizerKind::RAdam;
              else if (v == "adam") c.optimizer = OptimizerKind::Adam;
              else throw Error(ErrorCode::ParseError, "optimizer must be radam or adam");
            },
            [](const TrainConfig& c) { return std::string(to_string(c.optimizer)); }},
      TTRF_DOUBLE_FIELD(beta1),
      TTRF_DOUBLE_FIELD(beta2),
      TTRF_DOUBLE_FIELD(eps),
      TTRF_DOUBLE_FIELD(augment_ratio),
      TTRF_INT_FIELD(max_points),
      TTRF_INT_FIELD(log_every),
      TTRF_INT_FIELD(eval_every),
      TTRF_INT_FIELD(checkpoint_every),
      TTRF_INT_FIELD(eval_views),
      Field{"data_dir", [](TrainConfig& c, std::string_view v) { c.data_dir = std::string(v); },
            [](const TrainConfig& c) { return c.data_dir; }},
  };
  return table;
}

#undef TTRF_INT_FIELD
#undef TTRF_DOUBLE_FIELD

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("config: ") + what);
  };
  require(batch_rays > 0, "batch_rays must be positive");
  require(lr_start > 0.0 && lr_end > 0.0, "learning rates must be positive");
  require(lr_end <= lr_start, "lr_end must not exceed lr_start");
  require(decay_steps > 0, "decay_steps must be positive");
  require(total_steps >= 0, "total_steps must be non-negative");
  require(n_coarse > 0 && n_fine >= 0, "sample counts");
  require(max_hits > 0, "max_hits must be positive");
  require(feature_dim >= 4, "feature_dim must be at least 4");
  require(hidden > 0 && appearance >= 0 && dir_frequencies >= 0, "network shape");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0, "optimizer constants");
  require(augment_ratio >= 0.0, "augment_ratio must be non-negative");
  require(max_points > 0, "max_points must be positive");
  require(log_every >= 0 && eval_every >= 0 && checkpoint_every >= 0 && eval_views >= 0, "intervals");
}

MlpShape TrainConfig::mlp_shape() const {
  MlpShape s;
  s.feature_dim = feature_dim;
  s.hidden = hidden;
  s.appearance = appearance;
  s.dir_frequencies = dir_frequencies;
  s.activation = activation;
  return s;
}

RenderSettings TrainConfig::render_settings() const {
  RenderSettings r;
  r.n_coarse = n_coarse;
  r.n_fine = n_fine;
  r.max_hits = static_cast<std::size_t>(max_hits);
  r.background = background_color();
  return r;
}

Eigen::Vector3d TrainConfig::background_color() const {
  return background == BackgroundMode::White ? Eigen::Vector3d::Ones() : Eigen::Vector3d::Zero();
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.batch_rays = 512;
  c.n_coarse = 32;
  c.n_fine = 32;
  c.total_steps = 20000;
  c.decay_steps = 20000;
  c.log_every = 100;
  return c;
}

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw Error(ErrorCode::ParseError, "unknown config key: " + std::string(key));
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string serialize_config(const TrainConfig& config) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace ttrf
