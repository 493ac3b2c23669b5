#include "trapnoise/error.hpp"
#include "trapnoise/kernels.hpp"

namespace trapnoise::kernels::serial {

SpectralDensityVector polygon_noise(std::span<const Polygon> sources,
                                    std::span<const double> amplitudes, Point3 point) {
  if (sources.size() != amplitudes.size()) {
    throw Error(ErrorKind::InvalidInput, "polygon_noise: one amplitude per source required");
  }
  SpectralDensityVector total;
  for (std::size_t p = 0; p < sources.size(); ++p) {
    total += noise_from_field(field_above_polygon(sources[p], point, 1.0), amplitudes[p]);
  }
  return total;
}

std::vector<FieldVector> unit_fields(std::span<const Polygon> sources,
                                     std::span<const Point3> points) {
  std::vector<FieldVector> out(points.size() * sources.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t p = 0; p < sources.size(); ++p) {
      out[i * sources.size() + p] = field_above_polygon(sources[p], points[i], 1.0);
    }
  }
  return out;
}

void lag_products(const Raster& raster, std::span<const Offset> offsets, std::span<double> sums,
                  std::span<std::size_t> counts) {
  const int nx = raster.nx;
  const int ny = raster.ny;
  const int nr = raster.realizations;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const Offset o = offsets[k];
    double* acc = &sums[k * nr];
    for (int r = 0; r < nr; ++r) acc[r] = 0.0;
    std::size_t count = 0;
    for (int j = 0; j < ny; ++j) {
      const int j2 = j + o.dy;
      if (j2 < 0 || j2 >= ny) continue;
      for (int i = 0; i < nx; ++i) {
        const int i2 = i + o.dx;
        if (i2 < 0 || i2 >= nx) continue;
        const std::size_t a = static_cast<std::size_t>(j) * nx + i;
        const std::size_t b = static_cast<std::size_t>(j2) * nx + i2;
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

}  // namespace trapnoise::kernels::serial
