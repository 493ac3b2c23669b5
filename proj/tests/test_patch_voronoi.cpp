#include "trapnoise/error.hpp"
#include "trapnoise/patch_voronoi.hpp"
#include "trapnoise/technical_noise.hpp"
#include "trapnoise/units.hpp"
#include "trapnoise/voronoi.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

using namespace trapnoise;

namespace {

constexpr double um = 1e-6;

bool identical(const PatchConfiguration& a, const PatchConfiguration& b) {
  if (a.size() != b.size() || a.seed != b.seed || a.target_density != b.target_density) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.parents[i] != b.parents[i] || a.amplitudes[i] != b.amplitudes[i]) return false;
    const auto& va = a.polygons[i].vertices();
    const auto& vb = b.polygons[i].vertices();
    if (va.size() != vb.size()) return false;
    for (std::size_t k = 0; k < va.size(); ++k) {
      if (va[k].x != vb[k].x || va[k].y != vb[k].y) return false;
    }
  }
  return true;
}

// Noiseless, with sigma = value so every point counts in relative terms.
std::vector<SpectralDensityPoint> synthetic(const PatchConfiguration& c, const IonPath& path) {
  std::vector<SpectralDensityPoint> data;
  for (double d = 30; d <= 330; d += 10) {
    const auto s = patch_se(c, path(d * um));
    for (auto dir : {ModeDirection::PlanarX, ModeDirection::PlanarY, ModeDirection::Normal}) {
      data.push_back({d * um, units::mhz_to_omega(1.0), dir, s.component(dir), s.component(dir)});
    }
  }
  return data;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const auto g = default_trap_geometry();
  const auto a = generate_patches(g, 1e8, 5);
  const auto b = generate_patches(g, 1e8, 5);
  const auto c = generate_patches(g, 1e8, 6);
  CHECK(identical(a, b));
  CHECK_FALSE(identical(a, c));
}

TEST_CASE("clipping conserves electrode area") {
  const auto g = default_trap_geometry();
  for (double density : {3e6, 1e7, 1e8, 1e9}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto c = generate_patches(g, density, seed);
      CHECK(std::abs(c.total_area() / g.total_area() - 1.0) < 1e-9);
      // Per electrode as well.
      for (const auto& e : g.electrodes()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (c.parents[i] == e.name) sum += c.polygons[i].area();
        }
        CHECK(std::abs(sum / e.shape.area() - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("patches stay inside their parent electrode and do not overlap") {
  const auto g = default_trap_geometry();
  const auto c = generate_patches(g, 5e7, 21);
  std::mt19937_64 rng(4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& poly = c.polygons[i];
    const auto& parent = g.electrode(c.parents[i]).shape;
    const BoundingBox b = poly.bounds();
    std::uniform_real_distribution<double> ux(b.xmin, b.xmax), uy(b.ymin, b.ymax);
    int found = 0;
    for (int tries = 0; found < 100 && tries < 100000; ++tries) {
      const Point2 p{ux(rng), uy(rng)};
      if (!poly.contains(p)) continue;
      ++found;
      if (!parent.contains(p)) {
        FAIL("patch point outside parent " << c.parents[i]);
      }
    }
    CHECK(found == 100);
  }
  // Pieces of convex electrodes are convex, so pairwise intersections are
  // plain clips. Neighbours share edges computed in two cells; rounding may
  // leave slivers of order ulp^2.
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    REQUIRE(c.polygons[i].is_convex());
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      if (!c.polygons[i].bounds().overlaps(c.polygons[j].bounds())) continue;
      const auto common = voronoi::clip_convex(c.polygons[i].vertices(), c.polygons[j].vertices());
      if (common.size() < 3) continue;
      worst = std::max(worst, signed_area(common) /
                                  std::min(c.polygons[i].area(), c.polygons[j].area()));
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("mean patch area approaches the inverse density") {
  const TrapGeometry sq({{"S", Polygon::rectangle(-500 * um, 500 * um, -500 * um, 500 * um)}}, 0);
  const double density = 4e9;
  const auto c = generate_patches(sq, density, 3);
  REQUIRE(c.size() >= 1000);
  CHECK(c.total_area() / c.size() * density == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("electrodes without seeds become single patches") {
  const auto g = default_trap_geometry();
  const auto c = generate_patches(g, 1e3, 1);
  REQUIRE(c.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(c.parents[i] == g.electrodes()[i].name);
    CHECK(c.polygons[i].area() == g.electrodes()[i].shape.area());
  }
  CHECK_THROWS_AS(generate_patches(g, 0.0, 1), Error);
}

TEST_CASE("autocorrelation estimate: normalization and ordering") {
  const auto g = default_trap_geometry();
  const auto c = generate_patches(g, 2e7, 8);
  const auto est = estimate_autocorrelation(c, 10 * um, 8);
  CHECK(est.values.front() == 1.0);
  CHECK(est.lags.front() == 0.0);
  for (std::size_t i = 1; i < est.lags.size(); ++i) CHECK(est.lags[i] > est.lags[i - 1]);
  CHECK(est.realizations >= 20);
  CHECK(est.fitted_zeta > 20 * um);
  CHECK(est.fitted_zeta < 300 * um);
  CHECK_FALSE(est.zeta_exceeds_region);
  // Same seed, same estimate.
  const auto again = estimate_autocorrelation(c, 10 * um, 8);
  CHECK(again.fitted_zeta == est.fitted_zeta);
  CHECK(again.values == est.values);
}

TEST_CASE("one patch covering everything is fully correlated") {
  PatchConfiguration c;
  c.polygons.push_back(Polygon::rectangle(0, 400 * um, 0, 300 * um));
  c.parents.push_back("S");
  c.amplitudes.push_back(1.0);
  c.target_density = 1e3;
  const auto est = estimate_autocorrelation(c, 10 * um, 1);
  for (double v : est.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.zeta_exceeds_region);
  CHECK(est.fitted_zeta > est.region_size);
}

TEST_CASE("autocorrelation rejects degenerate grids") {
  const auto c = generate_patches(default_trap_geometry(), 1e8, 1);
  CHECK_THROWS_AS(estimate_autocorrelation(c, 2e-3, 1), Error);
  CHECK_THROWS_AS(estimate_autocorrelation(c, 0.0, 1), Error);
  CHECK_THROWS_AS(estimate_autocorrelation(c, 10 * um, 1, {.realizations = 0}), Error);
}

TEST_CASE("patch noise: trivial cases and superposition") {
  const auto rect = Polygon::rectangle(-40 * um, 60 * um, -20 * um, 30 * um);
  PatchConfiguration one;
  one.polygons = {rect};
  one.parents = {"S"};
  one.amplitudes = {2.0};
  const Point3 p{5 * um, 7 * um, 90 * um};
  const auto e = field_above_polygon(rect, p, 1.0);
  const auto s = patch_se(one, p);
  CHECK(s.x == doctest::Approx(4 * e.x * e.x).epsilon(1e-14));
  CHECK(s.z == doctest::Approx(4 * e.z * e.z).epsilon(1e-14));

  one.amplitudes = {0.0};
  CHECK(patch_se(one, p).z == 0.0);
  CHECK_THROWS_AS(patch_se(one, {0, 0, 0}), Error);

  // Fields of the two halves add coherently to the whole.
  const auto left = Polygon::rectangle(-40 * um, 10 * um, -20 * um, 30 * um);
  const auto right = Polygon::rectangle(10 * um, 60 * um, -20 * um, 30 * um);
  auto sum = field_above_polygon(left, p, 1.0);
  sum += field_above_polygon(right, p, 1.0);
  CHECK(sum.x == doctest::Approx(e.x).epsilon(1e-8));
  CHECK(sum.y == doctest::Approx(e.y).epsilon(1e-8));
  CHECK(sum.z == doctest::Approx(e.z).epsilon(1e-8));
}

TEST_CASE("patch fit reproduces self-generated data") {
  // Kept to ~20 patches: with many more, the squared-field columns become
  // collinear to working precision and only the model, not the amplitudes,
  // is determined.
  const auto g = default_trap_geometry();
  auto truth = generate_patches(g, 1e7, 11);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& a : truth.amplitudes) a = u(rng);
  const auto path = IonPath::vertical(15 * um, -10 * um);
  const auto data = synthetic(truth, path);
  const auto fit = fit_patch_amplitudes(truth, data, path);
  CHECK(fit.report.converged);
  CHECK(fit.report.weighted);
  double worst = 0.0;
  for (double r : fit.report.residuals) worst = std::max(worst, std::abs(r));
  CHECK(worst < 1e-10);

  // Predictions off the data grid agree too.
  const auto a = patch_se(truth, path(333 * um));
  const auto b = patch_se(fit.config, path(333 * um));
  CHECK(b.z == doctest::Approx(a.z).epsilon(1e-6));
}

TEST_CASE("well-conditioned patch sets give back their amplitudes") {
  const auto g = default_trap_geometry();
  auto truth = generate_patches(g, 3e6, 11);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& a : truth.amplitudes) a = u(rng);
  const auto path = IonPath::vertical(15 * um, -10 * um);
  const auto fit = fit_patch_amplitudes(truth, synthetic(truth, path), path);
  REQUIRE(fit.config.size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CHECK(fit.config.amplitudes[i] == doctest::Approx(truth.amplitudes[i]).epsilon(1e-6));
  }
}

TEST_CASE("bounded-ratio patch fit") {
  const auto g = default_trap_geometry();
  auto truth = generate_patches(g, 2e7, 12);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  for (double& a : truth.amplitudes) a = u(rng);
  const auto path = IonPath::vertical(5 * um, 5 * um);
  const auto data = synthetic(truth, path);
  const auto fit = fit_patch_amplitudes(truth, data, path, {.bounded_ratio = true, .max_ratio = 4});
  CHECK(fit.report.bounded_ratio);
  CHECK(fit.report.achieved_ratio <= 4.0 * (1 + 1e-9));
  for (double a : fit.config.amplitudes) CHECK(a > 0.0);
  // The truth satisfies the bound, so the data are matched closely.
  CHECK(fit.report.chi2 < 1e-8 * [&] {
    double s = 0.0;
    for (const auto& p : data) s += p.se * p.se;
    return s;
  }());
  CHECK_THROWS_AS(fit_patch_amplitudes(truth, data, path, {.bounded_ratio = true, .max_ratio = 0.5}),
                  Error);
}

TEST_CASE("one patch per electrode reproduces the technical-noise mismatch") {
  const auto g = default_trap_geometry();
  const auto coarse = generate_patches(g, 1e3, 1);  // every electrode is a single patch
  std::vector<SpectralDensityPoint> data;
  for (double d = 40; d <= 300; d += 20) {
    const double s = 1e-12 * std::pow(d / 100, -2.6);
    data.push_back({d * um, 1e7, ModeDirection::PlanarY, s, 0.05 * s});
    data.push_back({d * um, 1e7, ModeDirection::Normal, 2 * s, 0.1 * s});
  }
  const auto path = IonPath::vertical();
  const auto patch = fit_patch_amplitudes(coarse, data, path);
  const auto tech = fit_electrode_amplitudes(g, data, path);
  CHECK(patch.report.reduced_chi2 > 3.0);
  CHECK(patch.report.chi2 == doctest::Approx(tech.report.chi2).epsilon(1e-6));
}

TEST_CASE("fitted planar curves expose anisotropy") {
  const auto g = default_trap_geometry();
  auto c = generate_patches(g, 1e7, 4);
  std::vector<SpectralDensityPoint> data;
  for (double d = 50; d <= 300; d += 25) {
    const double s = 1e-12 * std::pow(d / 100, -2.6);
    data.push_back({d * um, 1e7, ModeDirection::PlanarY, s, 0.05 * s});
    data.push_back({d * um, 1e7, ModeDirection::Normal, 2 * s, 0.1 * s});
  }
  const auto fit = fit_patch_amplitudes(c, data, IonPath::vertical(), {.bounded_ratio = true});
  REQUIRE(fit.report.distances.size() == 11);
  double expected = 1.0;
  for (std::size_t i = 0; i < fit.report.distances.size(); ++i) {
    const double x = fit.report.planar_x[i], y = fit.report.planar_y[i];
    expected = std::max(expected, std::max(x / y, y / x));
  }
  CHECK(fit.report.max_planar_ratio == doctest::Approx(expected));
  CHECK(fit.report.max_planar_ratio > 1.01);
}

TEST_CASE("patch fit preconditions") {
  const auto c = generate_patches(default_trap_geometry(), 1e7, 1);
  std::vector<SpectralDensityPoint> one_dir{{100 * um, 1e7, ModeDirection::Normal, 1.0, 0.1},
                                            {120 * um, 1e7, ModeDirection::Normal, 0.8, 0.1}};
  CHECK_THROWS_AS(fit_patch_amplitudes(c, one_dir, IonPath::vertical()), Error);
}

TEST_CASE("patch JSON round trip is lossless") {
  auto c = generate_patches(default_trap_geometry(), 3e7, 77);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& a : c.amplitudes) a = u(rng);
  const auto text = patches_to_json(c).dump();
  const auto back = patches_from_json(nlohmann::json::parse(text));
  CHECK(identical(c, back));
  CHECK_THROWS_AS(patches_from_json(nlohmann::json::parse(R"({"schema_version": 2})")), Error);
  CHECK_THROWS_AS(patches_from_json(nlohmann::json::parse(R"({"schema_version": 1})")), Error);
}
