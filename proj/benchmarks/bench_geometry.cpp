#include "common.hpp"
#include "ttrf/traversal.hpp"
#include "ttrf/triangulation.hpp"

#include <benchmark/benchmark.h>

using namespace ttrf;

static void BM_Delaunay(benchmark::State& state) {
  const auto cloud = bench::random_cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(delaunay_triangulate(cloud.positions));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Delaunay)->Arg(1000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

static void BM_BuildBvh(benchmark::State& state) {
  const auto mesh = delaunay_triangulate(bench::random_cloud(static_cast<std::size_t>(state.range(0)), 2).positions);
  for (auto _ : state) benchmark::DoNotOptimize(build_bvh(mesh));
}
BENCHMARK(BM_BuildBvh)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_TraceRay(benchmark::State& state) {
  const auto mesh = delaunay_triangulate(bench::random_cloud(static_cast<std::size_t>(state.range(0)), 3).positions);
  const auto bvh = build_bvh(mesh);
  std::mt19937_64 rng(4);
  std::vector<Ray> rays;
  for (int i = 0; i < 1024; ++i) rays.push_back(bench::random_ray(rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trace_ray(bvh, mesh, rays[i++ % rays.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TraceRay)->Arg(1000)->Arg(10000);

static void BM_LocatePoint(benchmark::State& state) {
  const auto mesh = delaunay_triangulate(bench::random_cloud(10000, 5).positions);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<Point3> pts;
  for (int i = 0; i < 1024; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(locate_point(mesh, pts[i++ % pts.size()]));
}
BENCHMARK(BM_LocatePoint);

BENCHMARK_MAIN();
