// ttrf command-line tool: triangulate, train, render, eval, ablate-grid,
// make-fixture.

#include "ttrf/checkpoint.hpp"
#include "ttrf/cloud.hpp"
#include "ttrf/dataset.hpp"
#include "ttrf/error.hpp"
#include "ttrf/fixture.hpp"
#include "ttrf/parallel.hpp"
#include "ttrf/train.hpp"
#include "ttrf/triangulation.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace ttrf;

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 0;

  [[nodiscard]] int workers() const { return threads > 0 ? threads : default_threads(); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
}

TrainConfig read_config(const std::string& path, const std::string& preset) {
  TrainConfig base = preset == "desk" ? TrainConfig::desk() : TrainConfig{};
  return path.empty() ? base : load_config(path, base);
}

PointCloud read_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".ply" ? load_ply(path) : load_xyzrgb(path);
}

int cmd_triangulate(const std::string& ply, const std::string& out, double ratio, const Common& c) {
  TrainConfig cfg;
  cfg.augment_ratio = ratio;
  if (c.seed) cfg.seed = *c.seed;
  const PointCloud raw = read_cloud(ply);
  const PointCloud cloud = prepare_cloud(raw, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const TetMesh mesh = delaunay_triangulate(cloud.positions);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + out);
    write_mesh_dump(mesh, f);
  }
  double volume = 0.0;
  for (std::size_t i = 0; i < mesh.tets.size(); ++i) volume += mesh.volume(static_cast<TetId>(i));
  std::printf("vertices: %zu (original %zu, augmented %zu)\n", mesh.vertices.size(), cloud.original_count(),
              cloud.size() - cloud.original_count());
  std::printf("tets: %zu\n", mesh.tets.size());
  std::printf("volume: %.9g\n", volume);
  std::printf("time: %.3f s\n", secs);
  return 0;
}

int cmd_train(const std::string& data, const std::string& ply, const std::string& config_path,
              const std::string& preset, const std::string& out, std::string log, std::optional<int> steps,
              const Common& c) {
  TrainConfig cfg = read_config(config_path, preset);
  if (c.seed) cfg.seed = *c.seed;
  if (steps) cfg.total_steps = *steps;
  cfg.data_dir = std::filesystem::absolute(data).string();
  cfg.validate();
  const Dataset ds = load_nerf_transforms(data);
  const PointCloud cloud = prepare_cloud(read_cloud(ply), cfg);
  TrainState state = init_train_state(cloud, cfg);
  std::printf("mesh: %zu vertices, %zu tets\n", state.mesh.vertices.size(), state.mesh.tets.size());

  if (log.empty()) log = out + ".csv";
  std::ofstream log_file(log);
  if (!log_file) throw Error(ErrorCode::IoError, "cannot write " + log);
  write_log_header(log_file);
  TrainHooks hooks;
  hooks.log = &log_file;
  hooks.eval_views = ds.test;
  const auto t0 = std::chrono::steady_clock::now();
  hooks.on_log = [&](const LogRow& row) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("step %lld  loss %.6f  lr %.3g", static_cast<long long>(row.step), row.loss, row.lr);
    if (row.psnr_eval) std::printf("  eval psnr %.3f", *row.psnr_eval);
    std::printf("  (%.1f s)\n", secs);
    std::fflush(stdout);
  };
  hooks.on_checkpoint = [&](std::int64_t) { save_checkpoint(out, state); };
  if (cfg.total_steps == 0) save_checkpoint(out, state);
  train(state, ds, c.workers(), hooks);
  std::printf("checkpoint: %s\nlog: %s\n", out.c_str(), log.c_str());
  return 0;
}

std::vector<View> camera_views(const TrainState& state, const std::string& data, const std::string& split) {
  const std::filesystem::path dir = std::filesystem::path(data.empty() ? state.config.data_dir : data);
  if (dir.empty()) throw Error(ErrorCode::InvalidArgument, "no --data given and the checkpoint names no data_dir");
  return load_transforms_file(dir / ("transforms_" + split + ".json"), false);
}

int cmd_render(const std::string& ckpt, int index, const std::string& out, const std::string& depth,
               const std::string& data, const std::string& split, const Common& c) {
  const TrainState state = load_checkpoint(ckpt);
  const auto views = camera_views(state, data, split);
  if (index < 0 || static_cast<std::size_t>(index) >= views.size()) {
    throw Error(ErrorCode::OutOfBounds, "camera index " + std::to_string(index) + " out of range");
  }
  const Camera& cam = views[static_cast<std::size_t>(index)].camera;
  const RenderedView r = render_state(state, cam, c.workers());
  write_png(out, r.color, false);
  if (!depth.empty()) write_png(depth, depth_image(r, cam.width, cam.height), false);
  std::printf("wrote %s (%dx%d)\n", out.c_str(), cam.width, cam.height);
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& csv, const std::string& background,
             int max_views, const Common& c) {
  TrainState state = load_checkpoint(ckpt);
  if (!background.empty()) set_config_value(state.config, "background", background);
  const std::filesystem::path dir = std::filesystem::path(data.empty() ? state.config.data_dir : data);
  const Dataset ds = load_nerf_transforms(dir);
  const std::span<const View> views = ds.test.empty() ? std::span<const View>(ds.train) : std::span<const View>(ds.test);
  const EvalResult res = evaluate_state(state, views, c.workers(), max_views);
  std::ofstream f;
  if (!csv.empty()) {
    f.open(csv);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + csv);
    f << "image,psnr,ssim\n";
  }
  std::printf("%-16s %10s %10s\n", "image", "psnr", "ssim");
  for (std::size_t i = 0; i < res.names.size(); ++i) {
    std::printf("%-16s %10.4f %10.6f\n", res.names[i].c_str(), res.psnr[i], res.ssim[i]);
    if (f.is_open()) f << res.names[i] << ',' << res.psnr[i] << ',' << res.ssim[i] << '\n';
  }
  std::printf("%-16s %10.4f %10.6f\n", "mean", res.mean_psnr(), res.mean_ssim());
  return 0;
}

int cmd_ablate(const std::string& data, const std::string& ply, const std::string& config_path,
               const std::string& preset, std::optional<int> steps, const Common& c) {
  TrainConfig cfg = read_config(config_path, preset);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  const Dataset ds = load_nerf_transforms(data);
  const PointCloud cloud = prepare_cloud(read_cloud(ply), cfg);
  const std::int64_t n = steps ? *steps : cfg.total_steps;
  TrainHooks hooks;
  hooks.on_log = [](const LogRow& row) {
    std::printf("step %lld  loss %.6f\n", static_cast<long long>(row.step), row.loss);
    std::fflush(stdout);
  };
  const GridRun run = train_dense_grid(cloud, ds, cfg, n, c.workers(), hooks);
  std::printf("grid resolution: %d (%d nodes for %zu points)\n", run.resolution,
              run.resolution * run.resolution * run.resolution, cloud.size());
  std::printf("grid eval psnr %.4f ssim %.6f\n", run.eval.mean_psnr(), run.eval.mean_ssim());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tetrahedra radiance fields on the CPU"};
  app.require_subcommand(1);

  Common common;

  std::string ply, mesh_out;
  double ratio = 0.5;
  auto* tri = app.add_subcommand("triangulate", "Augment a point cloud and build its Delaunay tetrahedralization");
  tri->add_option("ply", ply, "Point cloud (.ply or x y z r g b text)")->required()->check(CLI::ExistingFile);
  tri->add_option("-o,--output", mesh_out, "Mesh dump output");
  tri->add_option("--augment-ratio", ratio, "Random points per original point")->check(CLI::NonNegativeNumber);
  add_common(tri, common);

  std::string data, config, preset = "default", ckpt_out, log;
  std::optional<int> steps;
  auto* tr = app.add_subcommand("train", "Train a tetrahedra field");
  tr->add_option("--data", data, "Scene directory with transforms_*.json")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--ply", ply, "Point cloud")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
  tr->add_option("--preset", preset, "Base settings before the config file")->check(CLI::IsMember({"default", "desk"}));
  tr->add_option("--steps", steps, "Override total_steps");
  tr->add_option("-o,--output", ckpt_out, "Checkpoint output")->required();
  tr->add_option("--log", log, "CSV metric log (default: <output>.csv)");
  add_common(tr, common);

  std::string ckpt, png_out, depth_out, split = "test";
  int camera_index = 0;
  auto* rd = app.add_subcommand("render", "Render one camera of a scene");
  rd->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  rd->add_option("--camera-index", camera_index, "Camera index within the split")->required();
  rd->add_option("-o,--output", png_out, "Colour PNG output")->required();
  rd->add_option("--depth", depth_out, "Depth PNG output");
  rd->add_option("--data", data, "Scene directory (default: the checkpoint's data_dir)");
  rd->add_option("--split", split, "Camera split")->check(CLI::IsMember({"train", "test", "val"}));
  add_common(rd, common);

  std::string csv, eval_bg;
  int max_views = 0;
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint on the test split");
  ev->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data, "Scene directory (default: the checkpoint's data_dir)");
  ev->add_option("--csv", csv, "Per-image CSV output");
  ev->add_option("--eval-background", eval_bg, "Background for compositing")->check(CLI::IsMember({"white", "black"}));
  ev->add_option("--max-views", max_views, "Evaluate only the first N views");
  add_common(ev, common);

  auto* ab = app.add_subcommand("ablate-grid", "Train the dense-grid baseline with matched parameter count");
  ab->add_option("--data", data, "Scene directory")->required()->check(CLI::ExistingDirectory);
  ab->add_option("--ply", ply, "Point cloud")->required()->check(CLI::ExistingFile);
  ab->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
  ab->add_option("--preset", preset, "Base settings")->check(CLI::IsMember({"default", "desk"}));
  ab->add_option("--steps", steps, "Training steps (default: total_steps)");
  add_common(ab, common);

  FixtureOptions fx;
  std::string fx_out;
  auto* mf = app.add_subcommand("make-fixture", "Write the synthetic coloured-sphere scene");
  mf->add_option("-o,--output", fx_out, "Output directory")->required();
  mf->add_option("--train-views", fx.train_views);
  mf->add_option("--test-views", fx.test_views);
  mf->add_option("--size", fx.width, "Image width and height");
  mf->add_option("--points", fx.points);
  add_common(mf, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tri) return cmd_triangulate(ply, mesh_out, ratio, common);
    if (*tr) return cmd_train(data, ply, config, preset, ckpt_out, log, steps, common);
    if (*rd) return cmd_render(ckpt, camera_index, png_out, depth_out, data, split, common);
    if (*ev) return cmd_eval(ckpt, data, csv, eval_bg, max_views, common);
    if (*ab) return cmd_ablate(data, ply, config, preset, steps, common);
    if (*mf) {
      fx.height = fx.width;
      if (common.seed) fx.seed = *common.seed;
      make_sphere_fixture(fx_out, fx);
      std::printf("wrote fixture to %s\n", fx_out.c_str());
      return 0;
    }
  } catch (const ttrf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
