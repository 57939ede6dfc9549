#include "common.hpp"
#include "ttrf/field.hpp"
#include "ttrf/network.hpp"
#include "ttrf/render.hpp"
#include "ttrf/triangulation.hpp"

#include <benchmark/benchmark.h>

using namespace ttrf;

namespace {

struct Inputs {
  Eigen::MatrixXf features;
  Eigen::Matrix<float, 3, Eigen::Dynamic> dirs;
};

Inputs random_inputs(const MlpShape& shape, Eigen::Index n) {
  Inputs in;
  in.features = Eigen::MatrixXf::Random(shape.feature_dim, n);
  in.dirs = Eigen::Matrix<float, 3, Eigen::Dynamic>::Random(3, n).colwise().normalized();
  return in;
}

}  // namespace

static void BM_MlpForward(benchmark::State& state) {
  const MlpShape shape;
  const auto mlp = RadianceMlp<float>::kaiming(shape, 1);
  const auto in = random_inputs(shape, state.range(0));
  MlpOutput<float> out;
  MlpTape<float> tape;
  for (auto _ : state) {
    mlp.forward(in.features, in.dirs, out, &tape);
    benchmark::DoNotOptimize(out.sigma.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(4096)->Arg(32768);

static void BM_MlpBackward(benchmark::State& state) {
  const MlpShape shape;
  const auto mlp = RadianceMlp<float>::kaiming(shape, 2);
  const auto in = random_inputs(shape, state.range(0));
  MlpOutput<float> out;
  MlpTape<float> tape;
  mlp.forward(in.features, in.dirs, out, &tape);
  const Eigen::Matrix<float, 1, Eigen::Dynamic> ds = Eigen::Matrix<float, 1, Eigen::Dynamic>::Ones(state.range(0));
  const Eigen::Matrix<float, 3, Eigen::Dynamic> dc = Eigen::Matrix<float, 3, Eigen::Dynamic>::Ones(3, state.range(0));
  auto grads = MlpParams<float>::zeros(shape);
  Eigen::MatrixXf dfeat;
  for (auto _ : state) {
    mlp.backward(tape, ds, dc, grads, &dfeat);
    benchmark::DoNotOptimize(dfeat.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpBackward)->Arg(4096)->Arg(32768);

// Rays rendered per second with 32 coarse + 32 fine samples.
static void BM_RenderRays(benchmark::State& state) {
  const auto cloud = bench::random_cloud(5000, 3);
  const auto mesh = delaunay_triangulate(cloud.positions);
  const auto bvh = build_bvh(mesh);
  auto field = init_field<float>(mesh, cloud, 64, 4);
  const TetraFieldView<float> view(mesh, bvh, field, kDefaultMaxHits);
  const auto mlp = RadianceMlp<float>::kaiming(MlpShape{}, 5);
  RenderSettings rs;
  rs.n_coarse = 32;
  rs.n_fine = 32;
  std::mt19937_64 rng(6);
  std::vector<Ray> rays;
  for (int i = 0; i < 512; ++i) rays.push_back(bench::random_ray(rng));
  for (auto _ : state) benchmark::DoNotOptimize(render_rays(view, mlp, rays, rs, std::nullopt, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rays.size()));
}
BENCHMARK(BM_RenderRays)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
