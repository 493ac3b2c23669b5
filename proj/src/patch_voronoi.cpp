#include "trapnoise/patch_voronoi.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/kernels.hpp"
#include "trapnoise/lsq.hpp"
#include "trapnoise/technical_noise.hpp"
#include "trapnoise/units.hpp"
#include "trapnoise/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace trapnoise {

double PatchConfiguration::total_area() const {
  double sum = 0.0;
  for (const auto& p : polygons) sum += p.area();
  return sum;
}

void PatchConfiguration::validate() const {
  if (parents.size() != polygons.size() || amplitudes.size() != polygons.size()) {
    throw Error(ErrorKind::InvalidInput, "patch configuration arrays differ in length");
  }
  for (const double a : amplitudes) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw Error(ErrorKind::InvalidInput, "patch amplitudes must be finite and non-negative");
    }
  }
}

PatchConfiguration generate_patches(const TrapGeometry& geometry, double density,
                                    std::uint64_t seed, const PatchGenerationOptions& options) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw Error(ErrorKind::InvalidInput, "patch density must be positive and finite");
  }
  if (geometry.size() == 0) throw Error(ErrorKind::InvalidGeometry, "geometry has no electrodes");

  BoundingBox box = geometry.bounds();
  const double margin = options.margin_spacings / std::sqrt(density);
  box.xmin -= margin;
  box.xmax += margin;
  box.ymin -= margin;
  box.ymax += margin;

  std::mt19937_64 rng(seed);
  const auto sites = voronoi::poisson_points(box, density, rng);
  const auto cells = voronoi::cells(sites, box);

  PatchConfiguration config;
  config.seed = seed;
  config.target_density = density;
  // Vertices are snapped to values that survive the micrometre text format
  // exactly, so a saved configuration reloads bit for bit.
  const auto add = [&](std::vector<Point2> vertices, const std::string& parent) {
    for (auto& v : vertices) {
      v.x = units::um_to_m(units::m_to_um(v.x));
      v.y = units::um_to_m(units::m_to_um(v.y));
    }
    config.polygons.push_back(Polygon::from_clipped(std::move(vertices)));
    config.parents.push_back(parent);
    config.amplitudes.push_back(options.amplitude);
  };

  for (const auto& electrode : geometry.electrodes()) {
    const BoundingBox eb = electrode.shape.bounds();
    const bool seeded = std::any_of(sites.begin(), sites.end(), [&](Point2 s) {
      return s.x > eb.xmin && s.x < eb.xmax && s.y > eb.ymin && s.y < eb.ymax &&
             electrode.shape.contains(s);
    });
    if (!seeded) {
      add(electrode.shape.vertices(), electrode.name);
      continue;
    }
    for (const auto& cell : cells) {
      if (cell.size() < 3) continue;
      BoundingBox cb{cell[0].x, cell[0].x, cell[0].y, cell[0].y};
      for (const auto& v : cell) {
        cb.xmin = std::min(cb.xmin, v.x);
        cb.xmax = std::max(cb.xmax, v.x);
        cb.ymin = std::min(cb.ymin, v.y);
        cb.ymax = std::max(cb.ymax, v.y);
      }
      if (!cb.overlaps(eb)) continue;
      auto piece = voronoi::clip_convex(electrode.shape.vertices(), cell);
      if (piece.size() < 3 || !(signed_area(piece) > 0.0)) continue;
      try {
        add(std::move(piece), electrode.name);
      } catch (const Error&) {
        // Sliver that collapsed to fewer than three distinct vertices.
      }
    }
  }
  return config;
}

namespace {

struct Rasterized {
  kernels::Raster raster;
  BoundingBox region;
};

Rasterized rasterize(const PatchConfiguration& config, double step, int realizations,
                     std::uint64_t seed) {
  if (config.size() == 0) throw Error(ErrorKind::InvalidInput, "configuration has no patches");
  BoundingBox region = config.polygons.front().bounds();
  for (const auto& p : config.polygons) {
    const BoundingBox b = p.bounds();
    region.xmin = std::min(region.xmin, b.xmin);
    region.xmax = std::max(region.xmax, b.xmax);
    region.ymin = std::min(region.ymin, b.ymin);
    region.ymax = std::max(region.ymax, b.ymax);
  }
  const double nxf = std::ceil(region.width() / step);
  const double nyf = std::ceil(region.height() / step);
  if (nxf < 2.0 || nyf < 2.0 || nxf * nyf > 5e7) {
    throw Error(ErrorKind::InvalidInput,
                "degenerate raster grid: grid step must be well below the region size and give "
                "at most 5e7 pixels");
  }
  Rasterized out;
  out.region = region;
  auto& r = out.raster;
  r.nx = static_cast<int>(nxf);
  r.ny = static_cast<int>(nyf);
  r.realizations = realizations;

  std::vector<int> label(static_cast<std::size_t>(r.nx) * r.ny, -1);
  for (std::size_t p = 0; p < config.size(); ++p) {
    const BoundingBox b = config.polygons[p].bounds();
    const int i0 = std::max(0, static_cast<int>(std::floor((b.xmin - region.xmin) / step - 0.5)));
    const int i1 = std::min(r.nx - 1, static_cast<int>(std::ceil((b.xmax - region.xmin) / step)));
    const int j0 = std::max(0, static_cast<int>(std::floor((b.ymin - region.ymin) / step - 0.5)));
    const int j1 = std::min(r.ny - 1, static_cast<int>(std::ceil((b.ymax - region.ymin) / step)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const Point2 c{region.xmin + (i + 0.5) * step, region.ymin + (j + 0.5) * step};
        if (config.polygons[p].contains(c)) {
          label[static_cast<std::size_t>(j) * r.nx + i] = static_cast<int>(p);
        }
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> patch_values(config.size() * static_cast<std::size_t>(realizations));
  for (double& v : patch_values) v = normal(rng);

  const std::size_t pixels = label.size();
  r.valid.assign(pixels, 0);
  r.values.assign(pixels * realizations, 0.0);
  for (std::size_t k = 0; k < pixels; ++k) {
    if (label[k] < 0) continue;
    r.valid[k] = 1;
    const double* src = &patch_values[static_cast<std::size_t>(label[k]) * realizations];
    std::copy(src, src + realizations, &r.values[k * realizations]);
  }
  return out;
}

// Minimizes f over [lo, hi] by golden-section search after a coarse scan.
template <class F>
double scan_and_refine(F&& f, double lo, double hi, int grid, double tol) {
  double best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  int best = 0;
  for (int g = 0; g < grid; ++g) {
    const double x = lo + (hi - lo) * g / (grid - 1);
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
      best = g;
    }
  }
  const double h = (hi - lo) / (grid - 1);
  double a = lo + std::max(0, best - 1) * h;
  double b = lo + std::min(grid - 1, best + 1) * h;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  return f(mid) <= best_f ? mid : best_x;
}

}  // namespace

AutocorrelationEstimate estimate_autocorrelation(const PatchConfiguration& config,
                                                 double grid_step, std::uint64_t seed,
                                                 const AutocorrelationOptions& options) {
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) {
    throw Error(ErrorKind::InvalidInput, "grid step must be positive");
  }
  if (options.realizations < 1) {
    throw Error(ErrorKind::InvalidInput, "at least one realization is required");
  }
  const int nr = options.realizations;
  const auto [raster, region] = rasterize(config, grid_step, nr, seed);

  AutocorrelationEstimate est;
  est.realizations = nr;
  est.region_size = std::hypot(region.width(), region.height());
  const double cell = config.target_density > 0.0 ? 1.0 / std::sqrt(config.target_density)
                                                  : est.region_size;
  est.fit_range = std::min(options.fit_range_cells * cell, est.region_size);

  const int max_px = std::max(1, std::min(static_cast<int>(est.fit_range / grid_step + 0.5),
                                          std::max(raster.nx, raster.ny)));
  const double max_r = max_px + 0.5;
  std::vector<kernels::Offset> offsets;
  for (int dy = 0; dy <= max_px; ++dy) {
    for (int dx = -max_px; dx <= max_px; ++dx) {
      if (dy == 0 && dx < 0) continue;
      if (dx * dx + dy * dy >= max_r * max_r) continue;
      offsets.push_back({dx, dy});
    }
  }
  std::vector<double> sums(offsets.size() * nr);
  std::vector<std::size_t> counts(offsets.size());
  kernels::parallel::lag_products(raster, offsets, sums, counts);
  if (counts[0] == 0) {
    throw Error(ErrorKind::InvalidInput, "no raster pixel lies inside a patch");
  }

  const auto nbins = static_cast<std::size_t>(max_px) + 1;
  std::vector<std::vector<double>> bin_sums(nbins, std::vector<double>(nr, 0.0));
  std::vector<std::size_t> bin_counts(nbins, 0);
  std::vector<double> bin_radius(nbins, 0.0);
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double radius = std::hypot(offsets[k].dx, offsets[k].dy);
    const auto b = static_cast<std::size_t>(std::lround(radius));
    if (b >= nbins) continue;
    for (int r = 0; r < nr; ++r) bin_sums[b][r] += sums[k * nr + r];
    bin_counts[b] += counts[k];
    bin_radius[b] += radius * static_cast<double>(counts[k]);
  }

  for (std::size_t b = 0; b < nbins; ++b) {
    if (bin_counts[b] == 0) continue;
    const double n = static_cast<double>(bin_counts[b]);
    double c = 0.0;
    for (int r = 0; r < nr; ++r) {
      const double variance = sums[r] / static_cast<double>(counts[0]);
      c += (bin_sums[b][r] / n) / variance;
    }
    est.lags.push_back(bin_radius[b] / n * grid_step);
    est.values.push_back(c / nr);
    est.pair_counts.push_back(bin_counts[b]);
  }
  const double c0 = est.values.front();
  for (double& v : est.values) v /= c0;
  est.values.front() = 1.0;

  const auto sse = [&](double ln_zeta) {
    const double zeta = std::exp(ln_zeta);
    double s = 0.0;
    for (std::size_t b = 0; b < est.lags.size(); ++b) {
      if (est.lags[b] > est.fit_range) break;
      const double r = est.values[b] - std::exp(-est.lags[b] / zeta);
      s += r * r;
    }
    return s;
  };
  const double ln_lo = std::log(0.1 * grid_step);
  const double ln_hi = std::log(1e3 * est.region_size);
  const double ln_zeta = scan_and_refine(sse, ln_lo, ln_hi, 241, 1e-9);
  est.fitted_zeta = std::exp(ln_zeta);
  std::size_t used = 0;
  for (double lag : est.lags) used += lag <= est.fit_range ? 1 : 0;
  est.fit_rms = std::sqrt(sse(ln_zeta) / static_cast<double>(std::max<std::size_t>(used, 1)));
  est.zeta_exceeds_region = est.fitted_zeta > est.region_size;
  return est;
}

DensityCalibration calibrate_density(const TrapGeometry& geometry, double target_zeta,
                                     const DensityCalibrationOptions& options) {
  if (!(target_zeta > 0.0)) throw Error(ErrorKind::InvalidInput, "target zeta must be positive");
  if (options.seeds < 1 || options.max_iterations < 1) {
    throw Error(ErrorKind::InvalidInput, "calibration needs at least one seed and iteration");
  }
  // For an unbounded Poisson-Voronoi mosaic the fitted length is roughly
  // 0.45 / sqrt(density).
  double density = std::pow(0.45 / target_zeta, 2);
  DensityCalibration best;
  double best_error = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::vector<double> zetas;
    for (int k = 0; k < options.seeds; ++k) {
      const std::uint64_t s = options.first_seed + static_cast<std::uint64_t>(k);
      const auto config = generate_patches(geometry, density, s);
      zetas.push_back(
          estimate_autocorrelation(config, options.grid_step, s, options.autocorrelation)
              .fitted_zeta);
    }
    double mean = 0.0;
    for (double z : zetas) mean += z;
    mean /= static_cast<double>(zetas.size());
    double var = 0.0;
    for (double z : zetas) var += (z - mean) * (z - mean);
    const double spread =
        zetas.size() > 1 ? std::sqrt(var / static_cast<double>(zetas.size() - 1)) : 0.0;

    const double error = std::abs(mean / target_zeta - 1.0);
    if (error < best_error) {
      best_error = error;
      best = {density, mean, spread, it, error <= options.rel_tol};
    }
    best.iterations = it;
    if (error <= options.rel_tol) break;
    density *= std::clamp(std::pow(mean / target_zeta, 2), 0.25, 4.0);
  }
  return best;
}

SpectralDensityVector patch_se(const PatchConfiguration& config, Point3 point) {
  config.validate();
  return kernels::parallel::polygon_noise(config.polygons, config.amplitudes, point);
}

PatchFit fit_patch_amplitudes(const PatchConfiguration& config,
                              std::span<const SpectralDensityPoint> data, const IonPath& path,
                              const PatchFitOptions& options) {
  config.validate();
  detail::check_fit_data(data, 1, 2);
  if (config.size() == 0) throw Error(ErrorKind::InvalidInput, "configuration has no patches");
  if (options.bounded_ratio && !(options.max_ratio >= 1.0)) {
    throw Error(ErrorKind::Infeasible,
                "amplitude ratio bound below 1 cannot be met by any configuration");
  }

  const auto design = detail::build_noise_design(config.polygons, data, path);
  const auto groups = detail::identical_columns(design.matrix);
  const auto ng = static_cast<Eigen::Index>(groups.size());
  Eigen::MatrixXd reduced(design.matrix.rows(), ng);
  Eigen::VectorXd sizes(ng);
  for (Eigen::Index g = 0; g < ng; ++g) {
    reduced.col(g) = design.matrix.col(groups[g].front());
    sizes[g] = static_cast<double>(groups[g].size());
  }

  lsq::Result solution;
  if (!options.bounded_ratio) {
    solution = lsq::nnls(reduced, design.rhs);
  } else {
    const double r2 = options.max_ratio * options.max_ratio;
    // A common squared amplitude t makes point i match exactly at
    // t = rhs_i / rowsum_i; the optimal floor m lies in [min t / R^2, max t].
    const Eigen::VectorXd rowsum = reduced * sizes;
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = 0.0;
    for (Eigen::Index i = 0; i < rowsum.size(); ++i) {
      if (rowsum[i] > 0.0 && design.rhs[i] > 0.0) {
        const double t = design.rhs[i] / rowsum[i];
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
      }
    }
    const auto solve = [&](double m) {
      return lsq::bounded_least_squares(reduced, design.rhs, sizes * m, sizes * (r2 * m));
    };
    if (tmax == 0.0) {
      solution = solve(0.0);
    } else {
      const double lo = std::log(tmin / r2);
      const double hi = std::log(tmax) + 1e-12;
      const double ln_m = scan_and_refine(
          [&](double x) { return solve(std::exp(x)).residual_sq; }, lo, std::max(hi, lo + 1e-9),
          41, 1e-10);
      solution = solve(std::exp(ln_m));
    }
  }

  PatchFit fit;
  fit.config = config;
  for (Eigen::Index g = 0; g < ng; ++g) {
    const double share = std::max(0.0, solution.x[g]) / sizes[g];
    for (const auto j : groups[g]) fit.config.amplitudes[j] = std::sqrt(share);
  }

  auto& report = fit.report;
  report.weighted = design.weighted;
  report.converged = solution.converged;
  report.bounded_ratio = options.bounded_ratio;
  report.degenerate_groups = static_cast<int>(ng);
  const Eigen::VectorXd scaled = reduced * solution.x;
  for (Eigen::Index i = 0; i < design.rhs.size(); ++i) {
    const double r = scaled[i] - design.rhs[i];
    report.residuals.push_back(r);
    report.model.push_back(scaled[i] * design.sigma[i]);
    report.chi2 += r * r;
  }
  report.dof = std::max<int>(1, static_cast<int>(data.size()) - static_cast<int>(ng));
  report.reduced_chi2 = report.chi2 / report.dof;

  double amax = 0.0;
  double amin = std::numeric_limits<double>::infinity();
  for (double a : fit.config.amplitudes) {
    if (a > 0.0) {
      amax = std::max(amax, a);
      amin = std::min(amin, a);
    }
  }
  report.achieved_ratio = amax > 0.0 ? amax / amin : 0.0;

  std::set<double> distances;
  for (const auto& p : data) distances.insert(p.distance);
  for (const double d : distances) {
    const auto s = patch_se(fit.config, path(d));
    report.distances.push_back(d);
    report.planar_x.push_back(s.x);
    report.planar_y.push_back(s.y);
    report.normal.push_back(s.z);
    if (s.x > 0.0 && s.y > 0.0) {
      report.max_planar_ratio = std::max(report.max_planar_ratio, std::max(s.x / s.y, s.y / s.x));
    }
  }
  return fit;
}

}  // namespace trapnoise
