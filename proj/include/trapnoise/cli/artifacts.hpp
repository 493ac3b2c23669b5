#pragma once

// Run configuration and artifact output. Every artifact starts with the fully
// resolved configuration so a result can be regenerated from the file alone.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace trapnoise::cli {

inline constexpr int kArtifactSchemaVersion = 1;
inline constexpr const char* kConfigEnvVar = "TRAPNOISE_CONFIG";

struct RunConfig {
  std::string command;
  std::string geometry;  // path; empty selects the built-in default trap
  std::string ion = "40Ca+";
  std::vector<double> distances;    // m
  std::vector<double> frequencies;  // rad/s
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  nlohmann::json parameters = nlohmann::json::object();  // subcommand-specific, boundary units

  void validate(bool stochastic) const;
  nlohmann::json to_json() const;
};

// "50:300:25" (inclusive range), "50,100,200" or a single value. Values must be
// positive and finite.
std::vector<double> parse_grid(const std::string& text);

// Shortest text that reads back as the same double.
std::string format_number(double v);

// Writes to a temporary file in the target directory, then renames it over
// `path`.
void write_atomic(const std::string& path, const std::string& contents);

// CSV artifact: "# trapnoise <json config>" then header and rows.
class CsvArtifact {
 public:
  CsvArtifact(const RunConfig& config, std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  std::string str() const;

 private:
  std::string text_;
  std::size_t width_;
};

// JSON artifact: {"schema_version": 1, "run": <config>, ...body}.
nlohmann::json json_artifact(const RunConfig& config, nlohmann::json body);

// Config documents have the RunConfig field names, with "d_um" and "f_MHz"
// grids given as strings or arrays.
nlohmann::json load_config_file(const std::string& path);

}  // namespace trapnoise::cli
