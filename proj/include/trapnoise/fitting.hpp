#pragma once

#include "trapnoise/core.hpp"

#include <span>
#include <vector>

namespace trapnoise {

// y = exp(log_prefactor) * x^exponent, fitted as a straight line in log-log
// space. For distance scans S_E ~ d^-beta, so beta = -exponent.
struct PowerLawFit {
  double exponent = 0.0;
  double exponent_sigma = 0.0;
  double log_prefactor = 0.0;
  double log_prefactor_sigma = 0.0;
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int dof = 0;
  bool weighted = false;
  // Points whose relative error exceeds 0.5, where the first-order
  // propagation sigma_ln = sigma / y is unreliable.
  std::vector<std::size_t> flagged;
};

// Weighted when `sigma` is non-empty (sigma_ln = sigma / y); otherwise ordinary
// least squares with the slope error taken from the residual scatter.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma = {});

// S_E against ordinary frequency f = omega / 2 pi. All points must share one
// distance (relative tolerance 1e-6) and `direction`.
PowerLawFit fit_frequency_scaling(std::span<const SpectralDensityPoint> data,
                                  ModeDirection direction);

// Converts heating rates to S_E first. Because n-dot = e^2 S_E / (4 m hbar omega),
// a heating-rate exponent p corresponds to an S_E exponent p + 1.
PowerLawFit fit_frequency_scaling(std::span<const Measurement> data, const IonSpecies& ion,
                                  ModeDirection direction);

// A reported value with a one-standard-deviation uncertainty, as in
// "-0.97(13)".
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;

  double lower(double k = 1.0) const { return value - k * sigma; }
  double upper(double k = 1.0) const { return value + k * sigma; }
  bool contains(double v, double k = 1.0) const { return v >= lower(k) && v <= upper(k); }
};

// Parses "value(uncertainty-in-last-digits)", e.g. "-0.97(13)" -> {-0.97, 0.13}.
Estimate parse_estimate(std::string_view text);

// |a - b| <= k * sqrt(sa^2 + sb^2)
bool compatible(const Estimate& a, const Estimate& b, double k = 1.0);

}  // namespace trapnoise
