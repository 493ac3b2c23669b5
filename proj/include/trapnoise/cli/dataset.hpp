#pragma once

// CSV ingestion. Heating-rate tables use the columns
//   distance_um, frequency_MHz, direction, method, nbardot_per_s, sigma_per_s
// and spectral-density tables use
//   distance_um, frequency_MHz, direction, se, se_sigma
// (S_E in V^2 m^-2 Hz^-1). Extra columns are ignored, blank lines and lines
// starting with '#' are skipped.

#include "trapnoise/core.hpp"

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace trapnoise::cli {

struct DatasetRow {
  Measurement measurement;
  bool calibrated = false;  // Rabi factor already applied to this row
  std::size_t line = 0;     // 1-based source line
};

struct Dataset {
  std::string source;
  std::vector<DatasetRow> rows;
  std::vector<std::string> warnings;

  std::vector<Measurement> measurements() const;
};

struct IngestOptions {
  bool apply_calibration = true;
  double calibration_factor = kRabiCalibration;
};

// Errors carry "source:line:" prefixes. An empty file yields an empty dataset
// and a warning.
Dataset parse_heating_rates(std::istream& in, const std::string& source,
                            const IngestOptions& options = {});
Dataset ingest_csv(const std::string& path, const IngestOptions& options = {});

// Applies the calibration to rows that have not had it yet; idempotent.
void calibrate(Dataset& dataset, double factor = kRabiCalibration);

std::vector<SpectralDensityPoint> parse_spectral_densities(std::istream& in,
                                                           const std::string& source);

// True when the header of `path` has an "se" column.
bool is_spectral_density_table(const std::string& path);

// Reads either table kind and returns S_E points; heating rates are
// calibrated (unless disabled) and converted with `ion`.
std::vector<SpectralDensityPoint> load_spectral_densities(const std::string& path,
                                                          const IonSpecies& ion,
                                                          const IngestOptions& options = {});

// Minimal CSV table for generic column access (fit-powerlaw).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  std::size_t column(const std::string& name, const std::string& source) const;
};
Table read_table(std::istream& in, const std::string& source);
Table read_table_file(const std::string& path);

}  // namespace trapnoise::cli
