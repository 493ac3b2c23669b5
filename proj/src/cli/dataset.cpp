#include "trapnoise/cli/dataset.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/units.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace trapnoise::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what);
}

double number(const std::string& text, const std::string& column, const std::string& source,
              std::size_t line) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    fail(source, line, "column '" + column + "' is not a number: '" + text + "'");
  }
  return v;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return in;
}

}  // namespace

std::size_t Table::column(const std::string& name, const std::string& source) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorKind::Parse, source + ": missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto fields = split(s);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      fail(source, n,
           "expected " + std::to_string(t.header.size()) + " fields, found " +
               std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(n);
  }
  return t;
}

Table read_table_file(const std::string& path) {
  auto in = open(path);
  return read_table(in, path);
}

std::vector<Measurement> Dataset::measurements() const {
  std::vector<Measurement> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.measurement);
  return out;
}

Dataset parse_heating_rates(std::istream& in, const std::string& source,
                            const IngestOptions& options) {
  const Table t = read_table(in, source);
  Dataset ds;
  ds.source = source;
  if (t.header.empty()) {
    ds.warnings.push_back(source + ": empty file, no measurements read");
    return ds;
  }
  const auto c_d = t.column("distance_um", source);
  const auto c_f = t.column("frequency_MHz", source);
  const auto c_dir = t.column("direction", source);
  const auto c_m = t.column("method", source);
  const auto c_n = t.column("nbardot_per_s", source);
  const auto c_s = t.column("sigma_per_s", source);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::size_t line = t.lines[i];
    DatasetRow row;
    row.line = line;
    auto& m = row.measurement;
    try {
      m.distance = units::um_to_m(number(f[c_d], "distance_um", source, line));
      m.secular_frequency = units::mhz_to_omega(number(f[c_f], "frequency_MHz", source, line));
      m.direction = parse_direction(f[c_dir]);
      m.method = parse_method(f[c_m]);
      m.heating_rate = number(f[c_n], "nbardot_per_s", source, line);
      m.heating_rate_sigma = number(f[c_s], "sigma_per_s", source, line);
      validate(m);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Parse && std::string(e.what()).starts_with(source)) throw;
      fail(source, line, e.what());
    }
    ds.rows.push_back(row);
  }
  if (ds.rows.empty()) ds.warnings.push_back(source + ": header only, no measurements read");
  if (options.apply_calibration) calibrate(ds, options.calibration_factor);
  return ds;
}

Dataset ingest_csv(const std::string& path, const IngestOptions& options) {
  auto in = open(path);
  return parse_heating_rates(in, path, options);
}

void calibrate(Dataset& dataset, double factor) {
  for (auto& row : dataset.rows) {
    if (row.calibrated) continue;
    row.measurement = apply_method_calibration(row.measurement, factor);
    row.calibrated = true;
  }
}

std::vector<SpectralDensityPoint> parse_spectral_densities(std::istream& in,
                                                           const std::string& source) {
  const Table t = read_table(in, source);
  std::vector<SpectralDensityPoint> out;
  if (t.header.empty()) return out;
  const auto c_d = t.column("distance_um", source);
  const auto c_f = t.column("frequency_MHz", source);
  const auto c_dir = t.column("direction", source);
  const auto c_s = t.column("se", source);
  const auto c_e = t.column("se_sigma", source);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::size_t line = t.lines[i];
    SpectralDensityPoint p;
    try {
      p.distance = units::um_to_m(number(f[c_d], "distance_um", source, line));
      p.angular_frequency = units::mhz_to_omega(number(f[c_f], "frequency_MHz", source, line));
      p.direction = parse_direction(f[c_dir]);
      p.se = number(f[c_s], "se", source, line);
      p.se_sigma = number(f[c_e], "se_sigma", source, line);
      validate(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Parse && std::string(e.what()).starts_with(source)) throw;
      fail(source, line, e.what());
    }
    out.push_back(p);
  }
  return out;
}

bool is_spectral_density_table(const std::string& path) {
  auto in = open(path);
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto header = split(s);
    return std::find(header.begin(), header.end(), "se") != header.end();
  }
  return false;
}

std::vector<SpectralDensityPoint> load_spectral_densities(const std::string& path,
                                                          const IonSpecies& ion,
                                                          const IngestOptions& options) {
  if (is_spectral_density_table(path)) {
    auto in = open(path);
    return parse_spectral_densities(in, path);
  }
  const Dataset ds = ingest_csv(path, options);
  std::vector<SpectralDensityPoint> out;
  for (const auto& row : ds.rows) out.push_back(heating_rate_to_se(row.measurement, ion));
  return out;
}

}  // namespace trapnoise::cli
