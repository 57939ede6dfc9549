#include "ttrf/fixture.hpp"
#include "ttrf/train.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

using namespace ttrf;

// One optimizer step of the desk preset on a small sphere scene.
static void BM_TrainStep(benchmark::State& state) {
  const auto dir = std::filesystem::temp_directory_path() / "ttrf_bench_scene";
  FixtureOptions fx;
  fx.train_views = 8;
  fx.test_views = 1;
  fx.width = fx.height = 64;
  fx.supersample = 2;
  make_sphere_fixture(dir, fx);
  const Dataset ds = load_nerf_transforms(dir);
  TrainConfig cfg = TrainConfig::desk();
  cfg.batch_rays = static_cast<int>(state.range(0));
  TrainState ts = init_train_state(prepare_cloud(load_ply(dir / "points.ply"), cfg), cfg);
  const TrainData td = make_train_data(ds.train, cfg.background_color());
  const FaceBvh bvh = build_bvh(ts.mesh);
  TetraFieldView<float> view(ts.mesh, bvh, ts.field, kDefaultMaxHits);
  for (auto _ : state) {
    train_steps(td, view, ts.field, ts.mlp, ts.optimizer, ts.config, ts.step, ts.step + 1, 1);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_TrainStep)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
