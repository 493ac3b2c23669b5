#include "oracles.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/kernels.hpp"

#include <doctest.h>

#include <random>

using namespace trapnoise;

namespace {

std::vector<Polygon> random_sources(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-300e-6, 300e-6);
  std::vector<Polygon> out;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(oracle::random_star_polygon(rng, u(rng), u(rng), 5e-6, 40e-6, 3 + i % 6));
  }
  return out;
}

kernels::Raster random_raster(std::mt19937_64& rng, int nx, int ny, int nr) {
  kernels::Raster r{nx, ny, nr, {}, {}};
  std::bernoulli_distribution keep(0.8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < nx * ny; ++i) r.valid.push_back(keep(rng) ? 1 : 0);
  for (int i = 0; i < nx * ny * nr; ++i) r.values.push_back(g(rng));
  return r;
}

}  // namespace

TEST_CASE("serial and parallel polygon noise are bit-identical") {
  std::mt19937_64 rng(1);
  const auto sources = random_sources(rng, 500);
  std::vector<double> amps;
  std::uniform_real_distribution<double> ua(0.0, 2.0);
  for (std::size_t i = 0; i < sources.size(); ++i) amps.push_back(ua(rng));
  for (const Point3 p : {Point3{0, 0, 50e-6}, Point3{1e-4, -2e-4, 3e-4}}) {
    const auto s = kernels::serial::polygon_noise(sources, amps, p);
    const auto q = kernels::parallel::polygon_noise(sources, amps, p);
    CHECK(s.x == q.x);
    CHECK(s.y == q.y);
    CHECK(s.z == q.z);
    // Reference: the definition, term by term.
    SpectralDensityVector ref;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto e = field_above_polygon(sources[i], p, 1.0);
      ref.x += amps[i] * amps[i] * e.x * e.x;
      ref.y += amps[i] * amps[i] * e.y * e.y;
      ref.z += amps[i] * amps[i] * e.z * e.z;
    }
    CHECK(s.x == doctest::Approx(ref.x).epsilon(1e-13));
    CHECK(s.z == doctest::Approx(ref.z).epsilon(1e-13));
  }
}

TEST_CASE("serial and parallel unit fields are bit-identical") {
  std::mt19937_64 rng(2);
  const auto sources = random_sources(rng, 40);
  std::vector<Point3> points;
  for (int i = 1; i <= 30; ++i) points.push_back({1e-6 * i, -2e-6 * i, 10e-6 * i});
  const auto s = kernels::serial::unit_fields(sources, points);
  const auto q = kernels::parallel::unit_fields(sources, points);
  REQUIRE(s.size() == sources.size() * points.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].x == q[i].x);
    CHECK(s[i].y == q[i].y);
    CHECK(s[i].z == q[i].z);
  }
  const auto direct = field_above_polygon(sources[7], points[11], 1.0);
  CHECK(s[11 * sources.size() + 7].z == direct.z);
}

TEST_CASE("kernels reject points on or below the plane") {
  std::mt19937_64 rng(3);
  const auto sources = random_sources(rng, 4);
  const std::vector<double> amps(4, 1.0);
  CHECK_THROWS_AS(kernels::parallel::polygon_noise(sources, amps, {0, 0, 0}), Error);
  CHECK_THROWS_AS(kernels::serial::polygon_noise(sources, amps, {0, 0, -1}), Error);
  const std::vector<Point3> bad{{0, 0, 1e-5}, {0, 0, 0}};
  CHECK_THROWS_AS(kernels::parallel::unit_fields(sources, bad), Error);
}

TEST_CASE("lag products: brute force and serial/parallel agreement") {
  std::mt19937_64 rng(4);
  const auto r = random_raster(rng, 23, 17, 3);
  std::vector<kernels::Offset> offsets;
  for (int dy = 0; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      if (dy == 0 && dx < 0) continue;
      offsets.push_back({dx, dy});
    }
  }
  std::vector<double> s1(offsets.size() * 3), s2(offsets.size() * 3);
  std::vector<std::size_t> c1(offsets.size()), c2(offsets.size());
  kernels::serial::lag_products(r, offsets, s1, c1);
  kernels::parallel::lag_products(r, offsets, s2, c2);
  CHECK(s1 == s2);
  CHECK(c1 == c2);

  for (std::size_t k = 0; k < offsets.size(); ++k) {
    std::vector<double> sum(3, 0.0);
    std::size_t count = 0;
    for (int y = 0; y < r.ny; ++y) {
      for (int x = 0; x < r.nx; ++x) {
        const int x2 = x + offsets[k].dx, y2 = y + offsets[k].dy;
        if (x2 < 0 || y2 < 0 || x2 >= r.nx || y2 >= r.ny) continue;
        const int a = y * r.nx + x, b = y2 * r.nx + x2;
        if (!r.valid[a] || !r.valid[b]) continue;
        ++count;
        for (int q = 0; q < 3; ++q) sum[q] += r.values[a * 3 + q] * r.values[b * 3 + q];
      }
    }
    CHECK(c1[k] == count);
    for (int q = 0; q < 3; ++q) CHECK(s1[k * 3 + q] == doctest::Approx(sum[q]).epsilon(1e-12));
  }
}
