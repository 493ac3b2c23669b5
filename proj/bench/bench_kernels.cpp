// Serial reference kernels against their OpenMP counterparts on
// representative problem sizes.

#include "trapnoise/geometry.hpp"
#include "trapnoise/kernels.hpp"
#include "trapnoise/patch_voronoi.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <map>
#include <random>
#include <string>
#include <vector>

namespace {

using namespace trapnoise;

// Voronoi patches over the default trap, cached per density.
const std::vector<Polygon>& patches(double density) {
  static std::map<double, std::vector<Polygon>> cache;
  auto it = cache.find(density);
  if (it == cache.end()) {
    auto config = generate_patches(default_trap_geometry(), density, 11);
    it = cache.emplace(density, std::move(config.polygons)).first;
  }
  return it->second;
}

std::vector<Point3> axis_points(int n) {
  std::vector<Point3> pts;
  for (int i = 0; i < n; ++i) pts.push_back({0.0, 0.0, (30.0 + 10.0 * i) * 1e-6});
  return pts;
}

kernels::Raster raster(int side, int realizations) {
  kernels::Raster r;
  r.nx = r.ny = side;
  r.realizations = realizations;
  r.valid.assign(std::size_t(side) * side, 1);
  r.values.resize(r.valid.size() * realizations);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (auto& v : r.values) v = g(rng);
  for (std::size_t i = 0; i < r.valid.size(); i += 7) r.valid[i] = 0;
  return r;
}

std::vector<kernels::Offset> offsets(int max_lag) {
  std::vector<kernels::Offset> out;
  for (int k = 0; k <= max_lag; ++k) {
    out.push_back({k, 0});
    out.push_back({0, k});
  }
  return out;
}

template <bool Parallel>
void BM_polygon_noise(benchmark::State& state) {
  const auto& src = patches(double(state.range(0)) * 1e6);
  const std::vector<double> amps(src.size(), 1e-3);
  const Point3 p{5e-6, -3e-6, 80e-6};
  for (auto _ : state) {
    auto s = Parallel ? kernels::parallel::polygon_noise(src, amps, p)
                      : kernels::serial::polygon_noise(src, amps, p);
    benchmark::DoNotOptimize(s);
  }
  state.counters["sources"] = double(src.size());
}

template <bool Parallel>
void BM_unit_fields(benchmark::State& state) {
  const auto& src = patches(double(state.range(0)) * 1e6);
  const auto pts = axis_points(16);
  for (auto _ : state) {
    auto f = Parallel ? kernels::parallel::unit_fields(src, pts)
                      : kernels::serial::unit_fields(src, pts);
    benchmark::DoNotOptimize(f.data());
  }
  state.counters["sources"] = double(src.size());
}

template <bool Parallel>
void BM_lag_products(benchmark::State& state) {
  const auto r = raster(int(state.range(0)), 20);
  const auto offs = offsets(40);
  std::vector<double> sums(offs.size() * r.realizations);
  std::vector<std::size_t> counts(offs.size());
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::lag_products(r, offs, sums, counts);
    } else {
      kernels::serial::lag_products(r, offs, sums, counts);
    }
    benchmark::DoNotOptimize(sums.data());
  }
}

}  // namespace

BENCHMARK(BM_polygon_noise<false>)->Name("polygon_noise/serial")->Arg(10)->Arg(1000);
BENCHMARK(BM_polygon_noise<true>)->Name("polygon_noise/parallel")->Arg(10)->Arg(1000)->UseRealTime();
BENCHMARK(BM_unit_fields<false>)->Name("unit_fields/serial")->Arg(10)->Arg(1000);
BENCHMARK(BM_unit_fields<true>)->Name("unit_fields/parallel")->Arg(10)->Arg(1000)->UseRealTime();
BENCHMARK(BM_lag_products<false>)->Name("lag_products/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_lag_products<true>)->Name("lag_products/parallel")->Arg(64)->Arg(256)->UseRealTime();

int main(int argc, char** argv) {
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
