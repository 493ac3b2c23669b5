#pragma once

// Conversions used at the I/O boundary. Everything inside the library is SI.

#include <cmath>
#include <numbers>

namespace trapnoise::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kMicrometre = 1e-6;
inline constexpr double kMegahertz = 1e6;

// Division by the exact power of ten keeps um_to_m(m_to_um(x)) == x for the
// values produced by m_to_um_exact below.
constexpr double um_to_m(double um) { return um / 1e6; }
constexpr double m_to_um(double m) { return m * 1e6; }

// angular frequency (rad/s) <-> ordinary frequency in MHz
constexpr double mhz_to_omega(double mhz) { return 2.0 * kPi * mhz * kMegahertz; }
constexpr double omega_to_mhz(double omega) { return omega / (2.0 * kPi * kMegahertz); }

// A micrometre value that converts back to exactly `m`, for serializers that
// promise lossless round trips through text written in micrometres. Not every
// double is reachable by um_to_m; values of the form um_to_m(x) always are, and
// anything else comes back within one ulp.
inline double m_to_um_exact(double m) {
  double um = m_to_um(m);
  if (um_to_m(um) == m) return um;
  double up = um;
  double down = um;
  for (int i = 0; i < 8; ++i) {
    up = std::nextafter(up, INFINITY);
    if (um_to_m(up) == m) return up;
    down = std::nextafter(down, -INFINITY);
    if (um_to_m(down) == m) return down;
  }
  return um;
}

}  // namespace trapnoise::units
