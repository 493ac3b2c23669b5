#include "trapnoise/patch_analytic.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

namespace trapnoise {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " must be positive and finite");
  }
}

// Upper bound on Integral_K^inf k^3 e^{-2k} / (d^2 + zeta^2 k^2)^{3/2} dk in units
// of 1/d^3, with rho = zeta / d.
double tail_bound(double rho, double k_max) {
  const double x = 2.0 * k_max;
  const double gamma4 = std::exp(-x) * (x * x * x + 3.0 * x * x + 6.0 * x + 6.0);
  const double small_zeta = gamma4 / 16.0;
  const double large_zeta = std::exp(-x) / (2.0 * rho * rho * rho);
  return std::min(small_zeta, large_zeta);
}

// Integral in units of 1/d^3: J(rho) = Integral k^3 e^{-2k} / (1 + rho^2 k^2)^{3/2} dk.
double dimensionless_shape(double rho, const ShapeIntegralOptions& options) {
  const auto integrand = [rho](double k) {
    const double q = 1.0 + rho * rho * k * k;
    return k * k * k * std::exp(-2.0 * k) / (q * std::sqrt(q));
  };
  const double knee = 1.0 / rho;
  const std::array<double, 4> breaks{0.1 * knee, knee, 10.0 * knee, 1.5};
  quadrature::Options qo;
  qo.rel_tol = options.rel_tol;
  qo.max_subintervals = 4000;

  double k_max = options.k_max;
  auto r = quadrature::integrate(integrand, 0.0, k_max, qo, breaks);
  while (tail_bound(rho, k_max) > options.rel_tol * r.value && k_max < 1e4) {
    const double next = 2.0 * k_max;
    const auto extra = quadrature::integrate(integrand, k_max, next, qo);
    r.value += extra.value;
    r.converged = r.converged && extra.converged;
    k_max = next;
  }
  if (!r.converged) {
    throw Error(ErrorKind::NonConvergence, "shape integral did not reach its tolerance");
  }
  return r.value;
}

double planar_model(double zeta, double d, const ShapeIntegralOptions& options = {}) {
  // 2 zeta^2 I / d = 2 rho^2 J(rho) / d^2
  const double rho = zeta / d;
  return 2.0 * rho * rho / (d * d) * dimensionless_shape(rho, options);
}

double direction_factor(ModeDirection direction) {
  return direction == ModeDirection::Normal ? 2.0 : 1.0;
}

}  // namespace

double autocorrelation(double zeta, double dx, double dy) {
  require_positive(zeta, "correlation length");
  return std::exp(-std::hypot(dx, dy) / zeta);
}

double shape_integral(double zeta, double d, const ShapeIntegralOptions& options) {
  require_positive(zeta, "correlation length");
  require_positive(d, "distance");
  return dimensionless_shape(zeta / d, options) / (d * d * d);
}

double analytic_se(const AnalyticPatchParams& params, double distance, ModeDirection direction) {
  require_positive(params.zeta, "correlation length");
  require_positive(distance, "distance");
  if (!(params.amplitude >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "patch amplitude must be non-negative");
  }
  return direction_factor(direction) * params.amplitude * planar_model(params.zeta, distance);
}

double local_exponent(const AnalyticPatchParams& params, double distance, double log_step) {
  require_positive(distance, "distance");
  require_positive(log_step, "log step");
  // Amplitude cancels; evaluate the shape directly so A = 0 is allowed.
  require_positive(params.zeta, "correlation length");
  const double lo = planar_model(params.zeta, distance * std::exp(-log_step));
  const double hi = planar_model(params.zeta, distance * std::exp(log_step));
  return -(std::log(hi) - std::log(lo)) / (2.0 * log_step);
}

ZetaFit fit_zeta(std::span<const SpectralDensityPoint> data, const ZetaFitOptions& options) {
  std::map<double, int> distinct;
  for (const auto& p : data) {
    validate(p);
    if (!(p.se > 0.0)) {
      throw Error(ErrorKind::InvalidInput, "zeta fit needs strictly positive S_E values");
    }
    distinct.emplace(p.distance, 0);
  }
  if (distinct.size() < 4) {
    throw Error(ErrorKind::InsufficientData, "zeta fit needs at least 4 distinct distances");
  }
  int idx = 0;
  std::vector<double> distances;
  for (auto& [d, i] : distinct) {
    i = idx++;
    distances.push_back(d);
  }

  const bool weighted = std::all_of(data.begin(), data.end(),
                                    [](const SpectralDensityPoint& p) { return p.se_sigma > 0.0; });
  const std::size_t n = data.size();
  std::vector<double> y(n), w(n), factor(n);
  std::vector<int> which(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::log(data[i].se);
    const double s = weighted ? data[i].se_sigma / data[i].se : 1.0;
    w[i] = 1.0 / (s * s);
    factor[i] = std::log(direction_factor(data[i].direction));
    which[i] = distinct.at(data[i].distance);
  }
  const double w_sum = [&] {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }();

  struct Profile {
    double chi2;
    double ln_a;
  };
  std::vector<double> ln_shape(distances.size());
  const auto profile = [&](double ln_zeta) {
    const double zeta = std::exp(ln_zeta);
    for (std::size_t k = 0; k < distances.size(); ++k) {
      ln_shape[k] = std::log(planar_model(zeta, distances[k]));
    }
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += w[i] * (y[i] - ln_shape[which[i]] - factor[i]);
    const double ln_a = num / w_sum;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - ln_a - ln_shape[which[i]] - factor[i];
      chi2 += w[i] * r * r;
    }
    return Profile{chi2, ln_a};
  };

  const double lo = std::log(options.zeta_min_factor * distances.front());
  const double hi = std::log(options.zeta_max_factor * distances.back());
  const int m = std::max(options.grid_points, 3);
  ZetaFit fit;
  auto& report = fit.report;
  report.weighted = weighted;
  std::size_t best = 0;
  for (int g = 0; g < m; ++g) {
    const double lz = lo + (hi - lo) * g / (m - 1);
    report.profile_ln_zeta.push_back(lz);
    report.profile_chi2.push_back(profile(lz).chi2);
    if (report.profile_chi2.back() < report.profile_chi2[best]) best = report.profile_chi2.size() - 1;
  }

  // Golden-section search on the bracket around the best grid point.
  double a = report.profile_ln_zeta[best == 0 ? 0 : best - 1];
  double b = report.profile_ln_zeta[std::min<std::size_t>(best + 1, m - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = profile(c).chi2;
  double fd = profile(d).chi2;
  int it = 0;
  while (std::abs(b - a) > options.tolerance && it < 500) {
    ++it;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile(c).chi2;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile(d).chi2;
    }
  }
  if (std::abs(b - a) > options.tolerance) {
    throw Error(ErrorKind::NonConvergence,
                "zeta fit: golden-section search did not converge (bracket width " +
                    std::to_string(b - a) + ")");
  }
  report.iterations = it;
  double ln_zeta = 0.5 * (a + b);
  // The grid ends are admissible solutions too.
  Profile opt = profile(ln_zeta);
  for (const double edge : {lo, hi}) {
    const Profile pe = profile(edge);
    if (pe.chi2 < opt.chi2) {
      opt = pe;
      ln_zeta = edge;
    }
  }
  opt = profile(ln_zeta);

  const double span = hi - lo;
  report.at_boundary = (ln_zeta - lo) < 0.01 * span || (hi - ln_zeta) < 0.01 * span;
  const double decade = std::log(10.0);
  const double probe = ln_zeta + (ln_zeta - lo < hi - ln_zeta ? decade : -decade);
  const double unit =
      weighted ? 1.0 : std::max(opt.chi2 / std::max<double>(1.0, double(n) - 2.0), 1e-12);
  report.flat_profile = std::abs(profile(probe).chi2 - opt.chi2) < unit;

  fit.params.zeta = std::exp(ln_zeta);
  fit.params.amplitude = std::exp(opt.ln_a);
  fit.params.omega = data.front().angular_frequency;

  report.chi2 = opt.chi2;
  report.dof = std::max<int>(1, static_cast<int>(n) - 2);
  report.reduced_chi2 = opt.chi2 / report.dof;
  const Profile final_profile = profile(ln_zeta);  // refresh ln_shape for residuals
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - final_profile.ln_a - ln_shape[which[i]] - factor[i];
    report.residuals.push_back(r * std::sqrt(w[i]));
  }

  // Curvature of the full chi^2 in (ln zeta, ln A). The ln A direction is
  // exact; the mixed and ln zeta terms use the model sensitivities
  // g_i = d ln m_i / d ln zeta, i.e. the Gauss-Newton Hessian.
  const double h = 1e-4;
  std::vector<double> up(distances.size()), down(distances.size());
  for (std::size_t k = 0; k < distances.size(); ++k) {
    up[k] = std::log(planar_model(std::exp(ln_zeta + h), distances[k]));
    down[k] = std::log(planar_model(std::exp(ln_zeta - h), distances[k]));
  }
  double hzz = 0.0, hza = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = (up[which[i]] - down[which[i]]) / (2.0 * h);
    hzz += w[i] * g * g;
    hza += w[i] * g;
  }
  const double haa = w_sum;
  const double det = hzz * haa - hza * hza;
  if (det > 0.0) {
    const double scale = weighted ? 1.0 : report.reduced_chi2;
    const double var_z = haa / det * scale;
    const double var_a = hzz / det * scale;
    report.covariance_ln = -hza / det * scale;
    report.zeta_sigma = fit.params.zeta * std::sqrt(var_z);
    report.log_amplitude_sigma = std::sqrt(var_a);
  } else {
    report.zeta_sigma = std::numeric_limits<double>::infinity();
    report.log_amplitude_sigma = std::numeric_limits<double>::infinity();
  }
  return fit;
}

}  // namespace trapnoise
