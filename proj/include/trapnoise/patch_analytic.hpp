#pragma once

// Patch-potential noise averaged over all configurations with an exponential
// surface autocorrelation exp(-r / zeta). The planar spectral density at
// ion-surface distance d is
//
//   S_p(d) = 2 (A zeta^2 / d) * Integral_0^inf k^3 e^{-2k} / (d^2 + zeta^2 k^2)^{3/2} dk,
//
// A being the product of the patch density and the patch voltage noise, and
// the normal component is exactly 2 S_p. Limits: S_p -> (3/4) A zeta^2 / d^4
// for zeta << d and S_p -> A / (zeta d) for zeta >> d.

#include "trapnoise/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace trapnoise {

struct AnalyticPatchParams {
  double zeta = 0.0;       // m
  double amplitude = 0.0;  // A = N * S_V(omega)
  double omega = 0.0;      // rad/s, metadata only
};

double autocorrelation(double zeta, double dx, double dy);

struct ShapeIntegralOptions {
  double rel_tol = 1e-12;
  double k_max = 40.0;  // raised automatically if the tail bound demands it
};

// I(zeta, d) = Integral_0^k_max k^3 e^{-2k} / (d^2 + zeta^2 k^2)^{3/2} dk, with
// the omitted tail below rel_tol * I. The tail is bounded by
// min(e^{-2K} / (2 zeta^3), Gamma(4, 2K) / (16 d^3)).
double shape_integral(double zeta, double d, const ShapeIntegralOptions& options = {});

double analytic_se(const AnalyticPatchParams& params, double distance, ModeDirection direction);

// beta(d) = -d ln S / d ln d by a central difference of width 2 * log_step in
// ln d.
double local_exponent(const AnalyticPatchParams& params, double distance,
                      double log_step = 1e-3);

struct ZetaFitOptions {
  // Search range for zeta, as multiples of the smallest / largest distance.
  double zeta_min_factor = 1e-3;
  double zeta_max_factor = 1e3;
  int grid_points = 121;
  double tolerance = 1e-10;  // on ln zeta
};

struct ZetaFitReport {
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int dof = 0;
  bool weighted = false;
  double zeta_sigma = 0.0;          // m, from the curvature of chi^2
  double log_amplitude_sigma = 0.0;
  double covariance_ln = 0.0;       // cov(ln zeta, ln A)
  bool at_boundary = false;         // best zeta at an end of the search range
  // chi^2 changes by less than one unit (weighted) or one reduced chi^2
  // (unweighted) over a decade of zeta: the data do not pin zeta down there.
  bool flat_profile = false;
  std::vector<double> residuals;    // (ln data - ln model) / sigma_ln
  std::vector<double> profile_ln_zeta;
  std::vector<double> profile_chi2;
  int iterations = 0;
};

struct ZetaFit {
  AnalyticPatchParams params;
  ZetaFitReport report;
};

// Weighted least squares in log space over (zeta, A). Normal-direction points
// are modelled as twice the planar value. For fixed zeta the optimal ln A is a
// weighted mean, so only the one-dimensional profile in ln zeta is searched:
// a grid scan followed by golden-section refinement.
ZetaFit fit_zeta(std::span<const SpectralDensityPoint> data, const ZetaFitOptions& options = {});

}  // namespace trapnoise
