// Serial references against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "shplan/geometry.hpp"
#include "shplan/kernels.hpp"

using namespace shplan;
using namespace shplan::kernels;

namespace {

std::vector<BoxObstacle> boxes(int n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-8.0, 8.0), h(0.2, 2.0);
  std::vector<BoxObstacle> out;
  for (int i = 0; i < n; ++i) out.push_back({Vec3(c(rng), c(rng), c(rng)), Vec3(h(rng), h(rng), h(rng))});
  return out;
}

std::vector<Vec3> scan_points(int n) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

template <auto Fn>
void design(benchmark::State& state) {
  const Directions dirs = fibonacci_directions(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(dirs, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void rays(benchmark::State& state) {
  const Directions dirs = fibonacci_directions(static_cast<int>(state.range(0)));
  const auto world = boxes(20);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(Vec3::Zero(), dirs, world, 20.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void field(benchmark::State& state) {
  const Directions dirs = fibonacci_directions(static_cast<int>(state.range(0)));
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(25, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(w, 4, dirs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void swept(benchmark::State& state) {
  const Directions dirs = fibonacci_directions(static_cast<int>(state.range(0)));
  const auto pts = scan_points(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(pts, dirs, 0.5, 4.0, 0.05, 0.056));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(design<design_matrix_serial>)->Name("design_matrix/serial")->Arg(1000)->Arg(10000);
BENCHMARK(design<design_matrix_omp>)->Name("design_matrix/omp")->Arg(1000)->Arg(10000);
BENCHMARK(rays<cast_rays_serial>)->Name("cast_rays/serial")->Arg(1000)->Arg(10000);
BENCHMARK(rays<cast_rays_omp>)->Name("cast_rays/omp")->Arg(1000)->Arg(10000);
BENCHMARK(field<eval_field_serial>)->Name("eval_field/serial")->Arg(1000)->Arg(10000);
BENCHMARK(field<eval_field_omp>)->Name("eval_field/omp")->Arg(1000)->Arg(10000);
BENCHMARK(swept<swept_distance_serial>)->Name("swept_distance/serial")->Arg(1000)->Arg(4000);
BENCHMARK(swept<swept_distance_omp>)->Name("swept_distance/omp")->Arg(1000)->Arg(4000);

BENCHMARK_MAIN();
