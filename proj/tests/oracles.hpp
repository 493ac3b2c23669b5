#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numerics: quadrature goes through Boost.Math Gauss rules or
// plain sums, least squares through exhaustive enumeration with Eigen
// decompositions.

#include "trapnoise/geometry.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// e^2 / (4 m hbar omega) for a singly charged ion of `mass_number` u, typed in
// from the CODATA 2018 table.
inline double heating_prefactor(double mass_number, double omega) {
  const double e = 1.602176634e-19;
  const double hbar = 1.054571817e-34;
  const double u = 1.660539067e-27;
  return e * e / (4.0 * mass_number * u * hbar * omega);
}

inline double shape_integrand(double rho, double k) {
  return k * k * k * std::exp(-2.0 * k) / std::pow(1.0 + rho * rho * k * k, 1.5);
}

// Integral_0^inf k^3 e^{-2k} (1 + rho^2 k^2)^{-3/2} dk with 20-point
// Gauss-Legendre on geometrically growing panels. The integrand's poles sit
// at +-i/rho, never closer to a panel than ten half-widths, so each panel is
// accurate to rounding. Beyond k = 60 the integrand is below e^-120.
inline double shape_gauss(double rho) {
  using boost::math::quadrature::gauss;
  const auto f = [rho](double k) { return shape_integrand(rho, k); };
  double sum = gauss<double, 20>::integrate(f, 0.0, 1e-6);
  for (double k = 1e-6; k < 60.0; k *= 1.2) {
    sum += gauss<double, 20>::integrate(f, k, std::min(1.2 * k, 60.0));
  }
  return sum;
}

// Composite trapezoid with `n` uniform points on [0, 60].
inline double shape_trapezoid(double rho, long n = 10'000'000) {
  const double h = 60.0 / static_cast<double>(n - 1);
  double sum = 0.5 * (shape_integrand(rho, 0.0) + shape_integrand(rho, 60.0));
  for (long i = 1; i < n - 1; ++i) sum += shape_integrand(rho, i * h);
  return sum * h;
}

// Composite 20-point Gauss-Legendre over `panels` equal panels. The nested
// rectangle integrand is analytic in a strip of half-width z around the real
// axis, so panels a few times narrower than z converge to rounding level
// without the noise an adaptive inner rule would feed the outer one.
template <class F>
double composite_gauss(const F& f, double a, double b, int panels) {
  using boost::math::quadrature::gauss;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    sum += gauss<double, 20>::integrate(f, a + i * h, a + (i + 1) * h);
  }
  return sum;
}

// Potential of an axis-aligned rectangle at potential V in a grounded plane,
// by 2-D quadrature of the half-space Poisson kernel z / (2 pi R^3).
inline double rectangle_potential_quad(double x0, double x1, double y0, double y1, double x,
                                       double y, double z, double volts) {
  const int nx = static_cast<int>(std::ceil(4.0 * (x1 - x0) / z)) + 4;
  const int ny = static_cast<int>(std::ceil(4.0 * (y1 - y0) / z)) + 4;
  const auto inner = [&](double yp) {
    const auto g = [&](double xp) {
      const double r2 = (x - xp) * (x - xp) + (y - yp) * (y - yp) + z * z;
      return 1.0 / (r2 * std::sqrt(r2));
    };
    return composite_gauss(g, x0, x1, nx);
  };
  return volts * z / (2.0 * kPi) * composite_gauss(inner, y0, y1, ny);
}

// Fourth-order central difference of a scalar field.
inline trapnoise::FieldVector gradient_fd(const std::function<double(trapnoise::Point3)>& f,
                                          trapnoise::Point3 p, double h) {
  const auto d = [&](double dx, double dy, double dz) {
    const auto at = [&](double s) { return f({p.x + s * dx, p.y + s * dy, p.z + s * dz}); };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  };
  return {d(1, 0, 0), d(0, 1, 0), d(0, 0, 1)};
}

// Star-shaped polygon around (cx, cy): jittered angles with every gap below
// pi, so the centre sees all edges and the polygon is simple.
inline std::vector<trapnoise::Point2> random_star_polygon(std::mt19937_64& rng, double cx,
                                                          double cy, double r_min, double r_max,
                                                          int n) {
  const double step = 2.0 * kPi / n;
  std::uniform_real_distribution<double> jitter(0.0, 0.4 * step);
  std::uniform_real_distribution<double> ur(r_min, r_max);
  std::vector<trapnoise::Point2> v;
  for (int k = 0; k < n; ++k) {
    const double a = k * step + jitter(rng);
    const double r = ur(rng);
    v.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return v;
}

// Exhaustive NNLS: the optimum is the unconstrained least-squares solution on
// some support set, so try every support and keep the best feasible one.
inline Eigen::VectorXd nnls_enumerate(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(a.cols());
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_r = b.squaredNorm();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) idx.push_back(j);
    }
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd xs = sub.completeOrthogonalDecomposition().solve(b);
    if ((xs.array() < 0.0).any()) continue;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = xs[static_cast<Eigen::Index>(k)];
    const double r = (a * x - b).squaredNorm();
    if (r < best_r) {
      best_r = r;
      best = x;
    }
  }
  return best;
}

// Weighted straight-line fit ln y = c + p ln x via the normal equations.
struct LineFit {
  double slope;
  double intercept;
  double slope_sigma;
};
inline LineFit log_log_line(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& sigma) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(x[i]);
    rhs[i] = std::log(y[i]);
    const double s = sigma.empty() ? 1.0 : sigma[i] / y[i];
    w[i] = 1.0 / (s * s);
  }
  const Eigen::Matrix2d normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::Vector2d coef = normal.ldlt().solve(design.transpose() * w.asDiagonal() * rhs);
  const Eigen::Matrix2d cov = normal.inverse();
  return {coef[1], coef[0], std::sqrt(cov(1, 1))};
}

}  // namespace oracle
