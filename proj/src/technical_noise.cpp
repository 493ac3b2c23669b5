#include "trapnoise/technical_noise.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/kernels.hpp"
#include "trapnoise/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace trapnoise {

SpectralDensityVector technical_se(const TrapGeometry& geometry, const ElectrodeNoiseSpec& spec,
                                   const IonPath& path, double distance) {
  const Point3 point = path(distance);
  SpectralDensityVector total;
  for (const auto& [name, amplitude] : spec.amplitudes) {
    if (!(amplitude >= 0.0)) {
      throw Error(ErrorKind::InvalidInput, "noise amplitude on '" + name + "' is negative");
    }
    const Electrode& e = geometry.electrode(name);
    total += noise_from_field(field_above_polygon(e.shape, point, 1.0), amplitude);
  }
  return total;
}

namespace detail {

void check_fit_data(std::span<const SpectralDensityPoint> data, std::size_t min_distances,
                    std::size_t min_directions) {
  std::set<double> distances;
  std::set<ModeDirection> directions;
  for (const auto& p : data) {
    validate(p);
    distances.insert(p.distance);
    directions.insert(p.direction);
  }
  if (distances.size() < min_distances || directions.size() < min_directions) {
    throw Error(ErrorKind::InsufficientData,
                "fit needs at least " + std::to_string(min_distances) + " distances and " +
                    std::to_string(min_directions) + " directions");
  }
}

NoiseDesign build_noise_design(std::span<const Polygon> sources,
                               std::span<const SpectralDensityPoint> data, const IonPath& path) {
  NoiseDesign design;
  design.weighted = std::all_of(data.begin(), data.end(),
                                [](const SpectralDensityPoint& p) { return p.se_sigma > 0.0; });
  std::vector<Point3> points;
  points.reserve(data.size());
  for (const auto& p : data) points.push_back(path(p.distance));
  const auto fields = kernels::parallel::unit_fields(sources, points);

  const auto rows = static_cast<Eigen::Index>(data.size());
  const auto cols = static_cast<Eigen::Index>(sources.size());
  design.matrix.resize(rows, cols);
  design.rhs.resize(rows);
  design.sigma.resize(data.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& p = data[i];
    const double sigma = design.weighted ? p.se_sigma : 1.0;
    design.sigma[i] = sigma;
    design.rhs[i] = p.se / sigma;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double e = fields[i * cols + j].component(p.direction);
      design.matrix(i, j) = e * e / sigma;
    }
  }
  return design;
}

std::vector<std::vector<Eigen::Index>> identical_columns(const Eigen::MatrixXd& m,
                                                         double rel_tol) {
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<bool> used(m.cols(), false);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (used[j]) continue;
    std::vector<Eigen::Index> group{j};
    used[j] = true;
    const double scale = std::max(m.col(j).norm(), std::numeric_limits<double>::min());
    for (Eigen::Index k = j + 1; k < m.cols(); ++k) {
      if (used[k]) continue;
      if ((m.col(j) - m.col(k)).norm() <= rel_tol * std::max(scale, m.col(k).norm())) {
        group.push_back(k);
        used[k] = true;
      }
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace detail

TechnicalFit fit_electrode_amplitudes(const TrapGeometry& geometry,
                                      std::span<const SpectralDensityPoint> data,
                                      const IonPath& path, std::span<const std::string> allowed) {
  detail::check_fit_data(data, 4, 2);

  std::vector<std::size_t> members;
  if (allowed.empty()) {
    for (std::size_t i = 0; i < geometry.size(); ++i) members.push_back(i);
  } else {
    for (const auto& name : allowed) members.push_back(geometry.index_of(name));
  }
  std::vector<Polygon> sources;
  for (auto i : members) sources.push_back(geometry.electrodes()[i].shape);

  const auto design = detail::build_noise_design(sources, data, path);
  const auto groups = detail::identical_columns(design.matrix);

  // One column per group; the solution is shared out afterwards.
  Eigen::MatrixXd reduced(design.matrix.rows(), static_cast<Eigen::Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    reduced.col(static_cast<Eigen::Index>(g)) = design.matrix.col(groups[g].front());
  }
  const auto solution = lsq::nnls(reduced, design.rhs);

  TechnicalFit fit;
  for (const auto& e : geometry.electrodes()) fit.spec.amplitudes[e.name] = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double total = std::max(0.0, solution.x[static_cast<Eigen::Index>(g)]);
    const double share = total / static_cast<double>(groups[g].size());
    DegenerateGroup group;
    group.squared_amplitude_sum = total;
    for (const auto j : groups[g]) {
      const std::string& name = geometry.electrodes()[members[j]].name;
      fit.spec.amplitudes[name] = std::sqrt(share);
      group.electrodes.push_back(name);
    }
    fit.report.groups.push_back(std::move(group));
  }

  auto& report = fit.report;
  report.weighted = design.weighted;
  report.solver_iterations = solution.iterations;
  report.converged = solution.converged;
  const Eigen::VectorXd model_scaled = reduced * solution.x;
  for (Eigen::Index i = 0; i < design.rhs.size(); ++i) {
    const double r = model_scaled[i] - design.rhs[i];
    report.residuals.push_back(r);
    report.model.push_back(model_scaled[i] * design.sigma[i]);
    report.chi2 += r * r;
  }
  report.dof = std::max<int>(1, static_cast<int>(data.size()) - static_cast<int>(groups.size()));
  report.reduced_chi2 = report.chi2 / report.dof;
  return fit;
}

}  // namespace trapnoise
