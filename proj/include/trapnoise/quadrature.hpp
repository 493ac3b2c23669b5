#pragma once

#include <functional>
#include <span>

namespace trapnoise::quadrature {

struct Result {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct Options {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_subintervals = 2000;
};

// Globally adaptive 21-point Gauss-Kronrod on [a, b]. Optional interior break
// points seed the initial partition where the integrand changes scale.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options = {}, std::span<const double> breakpoints = {});

}  // namespace trapnoise::quadrature
