#include "trapnoise/cli/artifacts.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/units.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace trapnoise::cli {

namespace {

double parse_value(const std::string& text, const std::string& whole) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::InvalidInput, "malformed grid '" + whole + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_value(item, text));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw Error(ErrorKind::InvalidInput, "grid '" + text + "' must be start:stop:step");
    }
    const double n = std::floor((parts[1] - parts[0]) / parts[2] + 1e-9);
    if (n > 1e6) throw Error(ErrorKind::InvalidInput, "grid '" + text + "' is too long");
    for (int i = 0; i <= static_cast<int>(n); ++i) out.push_back(parts[0] + i * parts[2]);
  } else {
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_value(item, text));
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "empty grid");
  for (double v : out) {
    if (!(v > 0.0)) throw Error(ErrorKind::InvalidInput, "grid values must be positive");
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::Io, "cannot rename onto '" + path + "': " + ec.message());
  }
}

void RunConfig::validate(bool stochastic) const {
  if (stochastic && !seed) {
    throw Error(ErrorKind::InvalidInput, "stochastic subcommand needs a seed");
  }
  for (double d : distances) {
    if (!(d > 0.0)) throw Error(ErrorKind::InvalidInput, "distances must be positive");
  }
  for (double f : frequencies) {
    if (!(f > 0.0)) throw Error(ErrorKind::InvalidInput, "frequencies must be positive");
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json d = nlohmann::json::array();
  for (double v : distances) d.push_back(units::m_to_um_exact(v));
  nlohmann::json f = nlohmann::json::array();
  for (double v : frequencies) f.push_back(units::omega_to_mhz(v));
  nlohmann::json j{{"command", command},
                   {"geometry", geometry.empty() ? "builtin:default" : geometry},
                   {"ion", ion},
                   {"d_um", d},
                   {"f_MHz", f},
                   {"out_dir", out_dir},
                   {"parameters", parameters}};
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

CsvArtifact::CsvArtifact(const RunConfig& config, std::vector<std::string> header)
    : width_(header.size()) {
  nlohmann::json head{{"schema_version", kArtifactSchemaVersion}, {"run", config.to_json()}};
  text_ = "# trapnoise " + head.dump() + "\n";
  row(header);
}

void CsvArtifact::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("CSV row width mismatch");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    text_ += fields[i];
  }
  text_ += '\n';
}

std::string CsvArtifact::str() const { return text_; }

nlohmann::json json_artifact(const RunConfig& config, nlohmann::json body) {
  nlohmann::json j{{"schema_version", kArtifactSchemaVersion}, {"run", config.to_json()}};
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw Error(ErrorKind::Parse, "config '" + path + "' is not an object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "config '" + path + "': " + e.what());
  }
}

}  // namespace trapnoise::cli
