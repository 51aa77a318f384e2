#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "splatmotion/camera.hpp"
#include "splatmotion/deform.hpp"
#include "splatmotion/guidance.hpp"
#include "splatmotion/knn.hpp"
#include "splatmotion/synth.hpp"
#include "splatmotion/umeyama.hpp"

using namespace splatmotion;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

void BM_Umeyama(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_points(n, 1);
  const Mat3 R = Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  std::vector<Vec3> y;
  for (const auto& p : x) y.push_back(1.3 * (R * p) + Vec3(0.1, -0.2, 0.3));
  const std::vector<double> w(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_umeyama(x, y, w));
}
BENCHMARK(BM_Umeyama)->Arg(50)->Arg(150);

void BM_KnnQuery(benchmark::State& state) {
  const KnnIndex index(random_points(static_cast<std::size_t>(state.range(0)), 2));
  const auto queries = random_points(256, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(index.query(queries[i++ % queries.size()], 150));
}
BENCHMARK(BM_KnnQuery)->Arg(1000)->Arg(20000);

void BM_BuildDynamicScene(benchmark::State& state) {
  const SynthScene s = make_scene(0, static_cast<std::size_t>(state.range(0)), 40);
  std::vector<AnchorTrajectory> anchors;
  for (std::size_t i = 0; i < s.scene.count(); ++i) {
    if (!s.script.moving[i]) continue;
    AnchorTrajectory a;
    a.id = static_cast<int>(i);
    for (std::size_t f = 0; f < s.script.frame_count(); ++f) a.positions.push_back(s.script.position(s.scene, i, f));
    a.observed.assign(a.positions.size(), true);
    anchors.push_back(std::move(a));
  }
  TransferConfig cfg;
  cfg.mode = state.range(1) ? TransferMode::rigid : TransferMode::linear;
  cfg.neighbors = kMaxNeighbors;
  for (auto _ : state) benchmark::DoNotOptimize(build_dynamic_scene(s.scene, s.selection, anchors, cfg));
}
BENCHMARK(BM_BuildDynamicScene)->Args({500, 0})->Args({500, 1})->Unit(benchmark::kMillisecond);

void BM_WarpFrame(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Image frame(size, size, 3, 0.25);
  const Image fill(size, size, 3, 0.0);
  const FlowField flow(size, size, Vec2(1.5, -0.75));
  for (auto _ : state) benchmark::DoNotOptimize(warp_frame(frame, flow, fill));
}
BENCHMARK(BM_WarpFrame)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ProjectUnproject(benchmark::State& state) {
  ViewSampleConfig vs;
  const CameraModel cam = look_at_camera(vs, {0.3, 0.4, 3.0});
  const auto pts = random_points(1024, 4);
  std::size_t i = 0;
  for (auto _ : state) {
    const Projection p = project(cam, pts[i++ % pts.size()]);
    benchmark::DoNotOptimize(unproject(cam, p.u, p.v, p.depth));
  }
}
BENCHMARK(BM_ProjectUnproject);

}  // namespace
BENCHMARK_MAIN();
