#include "trapnoise/core.hpp"

#include "trapnoise/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace trapnoise {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " must be positive and finite");
  }
}

void require_non_negative(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " must be non-negative and finite");
  }
}

}  // namespace

std::string_view to_string(ModeDirection direction) {
  switch (direction) {
    case ModeDirection::PlanarX: return "planar_x";
    case ModeDirection::PlanarY: return "planar_y";
    case ModeDirection::Normal: return "normal";
  }
  return "?";
}

std::string_view to_string(Method method) {
  return method == Method::Rabi ? "rabi" : "sideband";
}

ModeDirection parse_direction(std::string_view text) {
  const std::string t = lowercase(text);
  if (t == "planar_x" || t == "x") return ModeDirection::PlanarX;
  if (t == "planar_y" || t == "y" || t == "planar") return ModeDirection::PlanarY;
  if (t == "normal" || t == "z") return ModeDirection::Normal;
  throw Error(ErrorKind::Parse, "unknown mode direction '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
  const std::string t = lowercase(text);
  if (t == "sideband") return Method::Sideband;
  if (t == "rabi") return Method::Rabi;
  throw Error(ErrorKind::Parse, "unknown measurement method '" + std::string(text) + "'");
}

IonSpecies IonSpecies::from_mass_number(std::string name, int mass_number, int charge_state) {
  IonSpecies ion{std::move(name), mass_number * constants::kAtomicMassUnit,
                 charge_state * constants::kElementaryCharge};
  validate(ion);
  return ion;
}

IonSpecies calcium40() { return IonSpecies::from_mass_number("40Ca+", 40); }
IonSpecies beryllium9() { return IonSpecies::from_mass_number("9Be+", 9); }
IonSpecies ytterbium171() { return IonSpecies::from_mass_number("171Yb+", 171); }
IonSpecies strontium88() { return IonSpecies::from_mass_number("88Sr+", 88); }

IonSpecies ion_by_name(std::string_view name) {
  const std::string t = lowercase(name);
  if (t == "40ca+" || t == "ca40" || t == "ca") return calcium40();
  if (t == "9be+" || t == "be9" || t == "be") return beryllium9();
  if (t == "171yb+" || t == "yb171" || t == "yb") return ytterbium171();
  if (t == "88sr+" || t == "sr88" || t == "sr") return strontium88();
  throw Error(ErrorKind::InvalidInput, "unknown ion species '" + std::string(name) + "'");
}

void validate(const IonSpecies& ion) {
  require_positive(ion.mass, "ion mass");
  if (ion.charge == 0.0 || !std::isfinite(ion.charge)) {
    throw Error(ErrorKind::InvalidInput, "ion charge must be non-zero");
  }
}

void validate(const Measurement& m) {
  require_positive(m.distance, "distance");
  require_positive(m.secular_frequency, "secular frequency");
  require_non_negative(m.heating_rate, "heating rate");
  require_non_negative(m.heating_rate_sigma, "heating rate sigma");
}

void validate(const SpectralDensityPoint& p) {
  require_positive(p.distance, "distance");
  require_positive(p.angular_frequency, "angular frequency");
  require_non_negative(p.se, "S_E");
  require_non_negative(p.se_sigma, "S_E sigma");
}

double heating_rate_per_se(const IonSpecies& ion, double omega) {
  validate(ion);
  require_positive(omega, "secular frequency");
  return ion.charge * ion.charge / (4.0 * ion.mass * constants::kHbar * omega);
}

SpectralDensityPoint heating_rate_to_se(const Measurement& m, const IonSpecies& ion) {
  validate(m);
  const double k = heating_rate_per_se(ion, m.secular_frequency);
  return {m.distance, m.secular_frequency, m.direction, m.heating_rate / k,
          m.heating_rate_sigma / k};
}

Measurement se_to_heating_rate(const SpectralDensityPoint& p, const IonSpecies& ion) {
  validate(p);
  const double k = heating_rate_per_se(ion, p.angular_frequency);
  return {p.distance, p.angular_frequency, p.direction, Method::Sideband, p.se * k,
          p.se_sigma * k};
}

double normalize_heating_rate(const Measurement& m, const IonSpecies& ion,
                              const IonSpecies& ref_ion, double ref_omega) {
  validate(m);
  validate(ion);
  validate(ref_ion);
  require_positive(ref_omega, "reference frequency");
  const double charge_ratio = ref_ion.charge / ion.charge;
  return m.heating_rate * (ion.mass * m.secular_frequency) / (ref_ion.mass * ref_omega) *
         charge_ratio * charge_ratio;
}

Measurement apply_method_calibration(const Measurement& m, double rabi_factor) {
  if (m.method != Method::Rabi) return m;
  Measurement out = m;
  out.heating_rate *= rabi_factor;
  out.heating_rate_sigma *= rabi_factor;
  return out;
}

}  // namespace trapnoise
