#include "trapnoise/fitting.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/units.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace trapnoise {

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (y.size() != n || (!sigma.empty() && sigma.size() != n)) {
    throw Error(ErrorKind::InvalidInput, "power-law fit: x, y and sigma lengths differ");
  }
  if (n < 3) throw Error(ErrorKind::InsufficientData, "power-law fit needs at least 3 points");

  PowerLawFit fit;
  fit.weighted = !sigma.empty();
  std::vector<double> lx(n), ly(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorKind::InvalidInput, "power-law fit needs positive finite x and y");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    if (fit.weighted) {
      if (!(sigma[i] > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "power-law fit: sigma must be positive");
      }
      const double rel = sigma[i] / y[i];
      if (rel > 0.5) fit.flagged.push_back(i);
      w[i] = 1.0 / (rel * rel);
    }
  }

  // Centred sums keep the slope unaffected by shifts of ln x or ln y.
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * lx[i];
    sy += w[i] * ly[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (ly[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw Error(ErrorKind::InsufficientData, "power-law fit needs at least two distinct x values");
  }
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;

  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - fit.log_prefactor - fit.exponent * lx[i];
    fit.chi2 += w[i] * r * r;
  }
  fit.dof = static_cast<int>(n) - 2;
  fit.reduced_chi2 = fit.chi2 / fit.dof;

  // Parameter covariance from the normal equations; without sigmas the
  // residual variance stands in for the unknown point errors.
  const double scale = fit.weighted ? 1.0 : fit.reduced_chi2;
  fit.exponent_sigma = std::sqrt(scale / sxx);
  fit.log_prefactor_sigma = std::sqrt(scale * (1.0 / sw + mx * mx / sxx));
  return fit;
}

namespace {

void check_common_slice(std::span<const double> distances, std::span<const ModeDirection> dirs,
                        ModeDirection direction) {
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (std::abs(distances[i] - distances.front()) > 1e-6 * distances.front()) {
      throw Error(ErrorKind::InvalidInput, "frequency scaling: data mixes several distances");
    }
    if (dirs[i] != direction) {
      throw Error(ErrorKind::InvalidInput, "frequency scaling: data mixes several directions");
    }
  }
}

}  // namespace

PowerLawFit fit_frequency_scaling(std::span<const SpectralDensityPoint> data,
                                  ModeDirection direction) {
  std::vector<double> f, se, sigma, d;
  std::vector<ModeDirection> dirs;
  bool all_sigma = true;
  for (const auto& p : data) {
    validate(p);
    f.push_back(p.angular_frequency / (2.0 * units::kPi));
    se.push_back(p.se);
    sigma.push_back(p.se_sigma);
    d.push_back(p.distance);
    dirs.push_back(p.direction);
    all_sigma = all_sigma && p.se_sigma > 0.0;
  }
  if (data.empty()) throw Error(ErrorKind::InsufficientData, "frequency scaling: no data");
  check_common_slice(d, dirs, direction);
  return fit_power_law(f, se, all_sigma ? std::span<const double>(sigma) : std::span<const double>{});
}

PowerLawFit fit_frequency_scaling(std::span<const Measurement> data, const IonSpecies& ion,
                                  ModeDirection direction) {
  std::vector<SpectralDensityPoint> points;
  points.reserve(data.size());
  for (const auto& m : data) points.push_back(heating_rate_to_se(m, ion));
  return fit_frequency_scaling(points, direction);
}

Estimate parse_estimate(std::string_view text) {
  const auto fail = [&] {
    return Error(ErrorKind::Parse, "expected value(uncertainty), got '" + std::string(text) + "'");
  };
  const auto open = text.find('(');
  if (open == std::string_view::npos || open == 0 || text.size() < open + 3 ||
      text.back() != ')') {
    throw fail();
  }
  const std::string_view value_text = text.substr(0, open);
  const std::string_view err_text = text.substr(open + 1, text.size() - open - 2);
  if (!std::all_of(err_text.begin(), err_text.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    throw fail();
  }
  Estimate e;
  const char* vend = value_text.data() + value_text.size();
  if (auto [p, ec] = std::from_chars(value_text.data(), vend, e.value);
      ec != std::errc{} || p != vend) {
    throw fail();
  }
  long digits = 0;
  std::from_chars(err_text.data(), err_text.data() + err_text.size(), digits);
  const auto dot = value_text.find('.');
  const int decimals =
      dot == std::string_view::npos ? 0 : static_cast<int>(value_text.size() - dot - 1);
  e.sigma = static_cast<double>(digits) * std::pow(10.0, -decimals);
  return e;
}

bool compatible(const Estimate& a, const Estimate& b, double k) {
  return std::abs(a.value - b.value) <= k * std::hypot(a.sigma, b.sigma);
}

}  // namespace trapnoise
