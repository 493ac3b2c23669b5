#include "trapnoise/error.hpp"
#include "trapnoise/kernels.hpp"

#include <algorithm>
#include <omp.h>

namespace trapnoise::kernels::parallel {

SpectralDensityVector polygon_noise(std::span<const Polygon> sources,
                                    std::span<const double> amplitudes, Point3 point) {
  if (sources.size() != amplitudes.size()) {
    throw Error(ErrorKind::InvalidInput, "polygon_noise: one amplitude per source required");
  }
  const auto n = static_cast<std::ptrdiff_t>(sources.size());
  std::vector<SpectralDensityVector> terms(sources.size());
  // Exceptions must not escape the parallel region; check the domain first.
  if (!(point.z > 0.0)) throw Error(ErrorKind::Domain, "observation point must have z > 0");
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    terms[p] = noise_from_field(field_above_polygon(sources[p], point, 1.0), amplitudes[p]);
  }
  // Fixed-order reduction keeps the result identical to the serial kernel.
  SpectralDensityVector total;
  for (const auto& t : terms) total += t;
  return total;
}

std::vector<FieldVector> unit_fields(std::span<const Polygon> sources,
                                     std::span<const Point3> points) {
  for (const auto& pt : points) {
    if (!(pt.z > 0.0)) throw Error(ErrorKind::Domain, "observation point must have z > 0");
  }
  const std::size_t ns = sources.size();
  const auto total = static_cast<std::ptrdiff_t>(points.size() * ns);
  std::vector<FieldVector> out(points.size() * ns);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) / ns;
    const std::size_t p = static_cast<std::size_t>(k) % ns;
    out[k] = field_above_polygon(sources[p], points[i], 1.0);
  }
  return out;
}

void lag_products(const Raster& raster, std::span<const Offset> offsets, std::span<double> sums,
                  std::span<std::size_t> counts) {
  const int nx = raster.nx;
  const int ny = raster.ny;
  const int nr = raster.realizations;
  const auto n_offsets = static_cast<std::ptrdiff_t>(offsets.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n_offsets; ++k) {
    const Offset o = offsets[k];
    double* acc = &sums[k * nr];
    for (int r = 0; r < nr; ++r) acc[r] = 0.0;
    std::size_t count = 0;
    const int j_lo = std::max(0, -o.dy);
    const int j_hi = std::min(ny, ny - o.dy);
    const int i_lo = std::max(0, -o.dx);
    const int i_hi = std::min(nx, nx - o.dx);
    for (int j = j_lo; j < j_hi; ++j) {
      const std::size_t row_a = static_cast<std::size_t>(j) * nx;
      const std::size_t row_b = static_cast<std::size_t>(j + o.dy) * nx;
      for (int i = i_lo; i < i_hi; ++i) {
        const std::size_t a = row_a + i;
        const std::size_t b = row_b + i + o.dx;
        if (!raster.valid[a] || !raster.valid[b]) continue;
        ++count;
        const double* va = &raster.values[a * nr];
        const double* vb = &raster.values[b * nr];
        for (int r = 0; r < nr; ++r) acc[r] += va[r] * vb[r];
      }
    }
    counts[k] = count;
  }
}

}  // namespace trapnoise::kernels::parallel
