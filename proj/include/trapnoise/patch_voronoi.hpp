#pragma once

// Explicit patch configurations: each electrode is cut into fixed patches by a
// Poisson-Voronoi tessellation, and every patch fluctuates independently with
// its own amplitude. Patches never cross an electrode boundary.

#include "trapnoise/core.hpp"
#include "trapnoise/geometry.hpp"
#include "trapnoise/ion_path.hpp"

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

namespace trapnoise {

// Structure of arrays so the polygons can be handed to the field kernels
// without copying.
struct PatchConfiguration {
  std::vector<Polygon> polygons;
  std::vector<std::string> parents;  // parent electrode name per patch
  std::vector<double> amplitudes;    // V/sqrt(Hz), >= 0
  std::uint64_t seed = 0;
  double target_density = 0.0;  // seeds per m^2

  std::size_t size() const { return polygons.size(); }
  double total_area() const;
  void validate() const;  // sizes agree, amplitudes finite and >= 0
};

struct PatchGenerationOptions {
  // Seeds are drawn on the geometry bounds grown by this many mean seed
  // spacings (1/sqrt(density)), so that cells near the outer edge are shaped by
  // neighbours on every side.
  double margin_spacings = 3.0;
  double amplitude = 1.0;  // initial amplitude of every patch
};

// Deterministic for fixed (density, seed). An electrode that contains no seed
// becomes a single patch.
PatchConfiguration generate_patches(const TrapGeometry& geometry, double density,
                                    std::uint64_t seed, const PatchGenerationOptions& options = {});

struct AutocorrelationOptions {
  int realizations = 20;
  // Fit window in multiples of the expected cell size 1/sqrt(density); also
  // the largest lag returned. Capped at the region diagonal.
  double fit_range_cells = 3.0;
};

struct AutocorrelationEstimate {
  std::vector<double> lags;    // m, strictly increasing, lags[0] = 0
  std::vector<double> values;  // values[0] = 1
  std::vector<std::size_t> pair_counts;
  double fitted_zeta = 0.0;  // m
  double fit_range = 0.0;    // m
  double region_size = 0.0;  // diagonal of the rasterized region, m
  double fit_rms = 0.0;      // rms residual of exp(-r / zeta) over the fit window
  bool zeta_exceeds_region = false;
  int realizations = 0;
};

// Assigns independent N(0, 1) values to the patches, rasterizes them at
// `grid_step` (pixel centres outside every patch are masked), and averages the
// radially binned normalized autocovariance over the realizations. Bins are one
// grid step wide.
AutocorrelationEstimate estimate_autocorrelation(const PatchConfiguration& config,
                                                 double grid_step, std::uint64_t seed,
                                                 const AutocorrelationOptions& options = {});

struct DensityCalibrationOptions {
  double grid_step = 10e-6;
  int seeds = 6;  // configurations averaged per density
  std::uint64_t first_seed = 1;
  int max_iterations = 12;
  double rel_tol = 0.02;
  AutocorrelationOptions autocorrelation;
};

struct DensityCalibration {
  double density = 0.0;     // seeds per m^2
  double mean_zeta = 0.0;   // m, averaged over the calibration seeds
  double zeta_spread = 0.0; // sample standard deviation over the seeds
  int iterations = 0;
  bool converged = false;
};

// Finds the seed density whose average fitted correlation length on `geometry`
// matches `target_zeta`. Uses the scaling zeta ~ density^(-1/2) as a
// fixed-point update.
DensityCalibration calibrate_density(const TrapGeometry& geometry, double target_zeta,
                                     const DensityCalibrationOptions& options = {});

// S_alpha = sum_p a_p^2 E_{p,alpha}^2. Throws Domain for z <= 0.
SpectralDensityVector patch_se(const PatchConfiguration& config, Point3 point);

struct PatchFitOptions {
  bool bounded_ratio = false;
  double max_ratio = 4.0;  // largest / smallest amplitude when bounded_ratio is set
};

struct PatchFitReport {
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int dof = 0;
  bool weighted = false;
  std::vector<double> residuals;  // (model - data) / sigma
  std::vector<double> model;
  int degenerate_groups = 0;  // distinct columns after merging identical ones
  bool converged = false;
  bool bounded_ratio = false;
  double achieved_ratio = 0.0;  // max / min amplitude among non-zero patches
  // Anisotropy diagnostic along the ion path at the data distances.
  std::vector<double> distances;
  std::vector<double> planar_x;
  std::vector<double> planar_y;
  std::vector<double> normal;
  double max_planar_ratio = 1.0;  // max over distances of max(Sx/Sy, Sy/Sx)
};

struct PatchFit {
  PatchConfiguration config;
  PatchFitReport report;
};

// Non-negative least squares over the squared amplitudes. With bounded_ratio
// every squared amplitude is confined to [m, R^2 m] and m is profiled out.
PatchFit fit_patch_amplitudes(const PatchConfiguration& config,
                              std::span<const SpectralDensityPoint> data, const IonPath& path,
                              const PatchFitOptions& options = {});

// {"schema_version": 1, "seed": .., "target_density_per_m2": ..,
//  "patches": [{"parent": .., "amplitude": .., "vertices_um": [[x, y], ...]}]}
// Coordinates are written so that reading them back reproduces every double.
nlohmann::json patches_to_json(const PatchConfiguration& config);
PatchConfiguration patches_from_json(const nlohmann::json& doc);

}  // namespace trapnoise
