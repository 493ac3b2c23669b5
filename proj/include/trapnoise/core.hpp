#pragma once

#include <string>
#include <string_view>

namespace trapnoise {

// CODATA 2018, ten significant digits. The only place physical constants live.
namespace constants {
inline constexpr double kHbar = 1.054571817e-34;             // J s
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kAtomicMassUnit = 1.660539067e-27;    // kg
}  // namespace constants

// Rabi-decay heating rates read ~17% above sideband-asymmetry ones; data taken
// with the Rabi method is scaled by this factor when it is ingested.
inline constexpr double kRabiCalibration = 0.85;

enum class ModeDirection { PlanarX, PlanarY, Normal };
enum class Method { Sideband, Rabi };

std::string_view to_string(ModeDirection direction);
std::string_view to_string(Method method);
ModeDirection parse_direction(std::string_view text);
Method parse_method(std::string_view text);

struct IonSpecies {
  std::string name;
  double mass = 0.0;    // kg
  double charge = 0.0;  // C

  // Mass taken as mass_number * u, charge as charge_state * e.
  static IonSpecies from_mass_number(std::string name, int mass_number,
                                     int charge_state = 1);
};

IonSpecies calcium40();
IonSpecies beryllium9();
IonSpecies ytterbium171();
IonSpecies strontium88();
// Looks up one of the built-in species by name ("40Ca+", "Ca40", "9Be+", ...).
IonSpecies ion_by_name(std::string_view name);

void validate(const IonSpecies& ion);

struct Measurement {
  double distance = 0.0;           // m
  double secular_frequency = 0.0;  // rad/s
  ModeDirection direction = ModeDirection::PlanarY;
  Method method = Method::Sideband;
  double heating_rate = 0.0;        // quanta/s
  double heating_rate_sigma = 0.0;  // quanta/s
};

struct SpectralDensityPoint {
  double distance = 0.0;           // m
  double angular_frequency = 0.0;  // rad/s
  ModeDirection direction = ModeDirection::PlanarY;
  double se = 0.0;        // V^2 m^-2 Hz^-1
  double se_sigma = 0.0;  // V^2 m^-2 Hz^-1
};

void validate(const Measurement& m);
void validate(const SpectralDensityPoint& p);

// e^2 / (4 m hbar omega): heating rate per unit field spectral density.
double heating_rate_per_se(const IonSpecies& ion, double omega);

SpectralDensityPoint heating_rate_to_se(const Measurement& m, const IonSpecies& ion);

// The method tag of the returned measurement is Sideband: a converted value
// carries no measurement-method bias.
Measurement se_to_heating_rate(const SpectralDensityPoint& p, const IonSpecies& ion);

// Rescales a heating rate to the value the same field noise would produce on
// `ref_ion` at `ref_omega`. Treats S_E as frequency independent across the
// rescaling, which is the usual cross-trap comparison convention.
double normalize_heating_rate(const Measurement& m, const IonSpecies& ion,
                              const IonSpecies& ref_ion, double ref_omega);

Measurement apply_method_calibration(const Measurement& m,
                                     double rabi_factor = kRabiCalibration);

}  // namespace trapnoise
