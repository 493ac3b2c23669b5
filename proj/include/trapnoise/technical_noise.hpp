#pragma once

// Noise from voltage fluctuations that are correlated over whole electrodes
// (supply noise, pickup, filter Johnson noise). Electrodes fluctuate
// independently, so spectral densities add; the field of one electrode is
// projected before squaring.

#include "trapnoise/core.hpp"
#include "trapnoise/geometry.hpp"
#include "trapnoise/ion_path.hpp"

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trapnoise {

struct ElectrodeNoiseSpec {
  std::map<std::string, double> amplitudes;  // V/sqrt(Hz)
};

SpectralDensityVector technical_se(const TrapGeometry& geometry, const ElectrodeNoiseSpec& spec,
                                   const IonPath& path, double distance);

// Electrodes whose squared fields at every data point coincide; the data can
// only constrain the sum of their squared amplitudes.
struct DegenerateGroup {
  std::vector<std::string> electrodes;
  double squared_amplitude_sum = 0.0;  // V^2/Hz
};

struct TechnicalFitReport {
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int dof = 0;
  bool weighted = false;
  std::vector<double> residuals;  // (model - data) / sigma, per data point
  std::vector<double> model;      // S_E predicted at each data point
  std::vector<DegenerateGroup> groups;
  int solver_iterations = 0;
  bool converged = false;
};

struct TechnicalFit {
  ElectrodeNoiseSpec spec;
  TechnicalFitReport report;
};

// Non-negative least squares for the squared amplitudes over the electrodes in
// `allowed` (all electrodes when empty), weighting by 1/se_sigma^2 when every
// point has a positive sigma. Squared amplitudes within a degenerate group are
// split evenly, the minimum-norm choice.
TechnicalFit fit_electrode_amplitudes(const TrapGeometry& geometry,
                                      std::span<const SpectralDensityPoint> data,
                                      const IonPath& path,
                                      std::span<const std::string> allowed = {});

namespace detail {

struct NoiseDesign {
  Eigen::MatrixXd matrix;  // rows: data points, cols: sources; entries E_{source,dir}^2 / sigma
  Eigen::VectorXd rhs;     // S_data / sigma
  std::vector<double> sigma;
  bool weighted = false;
};

// Shared by the electrode and patch fitters.
NoiseDesign build_noise_design(std::span<const Polygon> sources,
                               std::span<const SpectralDensityPoint> data, const IonPath& path);

// Groups of columns that are identical to within a relative tolerance.
std::vector<std::vector<Eigen::Index>> identical_columns(const Eigen::MatrixXd& m,
                                                         double rel_tol = 1e-9);

void check_fit_data(std::span<const SpectralDensityPoint> data, std::size_t min_distances,
                    std::size_t min_directions);

}  // namespace detail

}  // namespace trapnoise
