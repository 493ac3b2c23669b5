#include "trapnoise/quadrature.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

using trapnoise::quadrature::integrate;

TEST_CASE("polynomials and smooth integrands") {
  CHECK(integrate([](double x) { return x * x; }, 0, 3).value == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(integrate([](double x) { return std::sin(x); }, 0, std::numbers::pi).value ==
        doctest::Approx(2.0).epsilon(1e-13));
  const auto r = integrate([](double x) { return std::exp(-x); }, 0, 50);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(1.0 - std::exp(-50.0)).epsilon(1e-13));
}

TEST_CASE("endpoint singularity and sharp peak") {
  // Integral_0^1 x^{-1/2} = 2
  const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0, 1,
                           {.rel_tol = 1e-10, .abs_tol = 0, .max_subintervals = 5000});
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
  // Lorentzian of width 1e-4 centred off a break point.
  const double w = 1e-4;
  const std::array<double, 1> brk{0.3};
  const auto p = integrate([w](double x) { return w / ((x - 0.3) * (x - 0.3) + w * w); }, 0, 1,
                           {}, brk);
  CHECK(p.value == doctest::Approx(std::atan(0.7 / w) + std::atan(0.3 / w)).epsilon(1e-11));
}

TEST_CASE("reversed and empty intervals") {
  CHECK(integrate([](double x) { return x; }, 2, 0).value == doctest::Approx(-2.0));
  CHECK(integrate([](double x) { return x; }, 1, 1).value == 0.0);
}
