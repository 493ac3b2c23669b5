#pragma once

// Data-parallel inner loops. Each kernel exists twice with identical
// signatures: `serial` is the reference used by the tests, `parallel` is the
// OpenMP version used by the library. The parallel versions fix their
// reduction order so both produce bit-identical results.

#include "trapnoise/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace trapnoise::kernels {

// Pixel offset for lag products.
struct Offset {
  int dx = 0;
  int dy = 0;
};

// Row-major raster with `realizations` values per pixel. Pixels outside every
// patch have valid == 0 and are skipped.
struct Raster {
  int nx = 0;
  int ny = 0;
  int realizations = 0;
  std::vector<unsigned char> valid;  // nx * ny
  std::vector<double> values;        // (nx * ny) * realizations
};

namespace serial {

// sum_p a_p^2 (E_p(point))^2, accumulated in source order.
SpectralDensityVector polygon_noise(std::span<const Polygon> sources,
                                    std::span<const double> amplitudes, Point3 point);

// Unit-potential field of every source at every point, indexed
// [point * sources.size() + source].
std::vector<FieldVector> unit_fields(std::span<const Polygon> sources,
                                     std::span<const Point3> points);

// For each offset: per-realization sums of value(p) * value(p + offset) over
// pixel pairs that are both valid, and the number of such pairs.
// sums has offsets.size() * realizations entries.
void lag_products(const Raster& raster, std::span<const Offset> offsets, std::span<double> sums,
                  std::span<std::size_t> counts);

}  // namespace serial

namespace parallel {

SpectralDensityVector polygon_noise(std::span<const Polygon> sources,
                                    std::span<const double> amplitudes, Point3 point);
std::vector<FieldVector> unit_fields(std::span<const Polygon> sources,
                                     std::span<const Point3> points);
void lag_products(const Raster& raster, std::span<const Offset> offsets, std::span<double> sums,
                  std::span<std::size_t> counts);

}  // namespace parallel

}  // namespace trapnoise::kernels
