#include "trapnoise/cli/artifacts.hpp"
#include "trapnoise/cli/commands.hpp"
#include "trapnoise/cli/dataset.hpp"
#include "trapnoise/error.hpp"
#include "trapnoise/units.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

using namespace trapnoise;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("trapnoise_cli_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int status;
  json result;  // stdout document, or the error document
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  const std::string text = status == 0 ? out.str() : err.str();
  json doc;
  if (!text.empty()) doc = json::parse(text.substr(0, text.find('\n')), nullptr, false);
  return {status, doc};
}

const char* kRates =
    "distance_um,frequency_MHz,direction,method,nbardot_per_s,sigma_per_s\n"
    "# a comment line\n"
    "100,1.0,normal,sideband,250,25\n"
    "64,1.2,planar_y,rabi,100,10\n"
    "\n"
    "150,0.9,planar_x,sideband,40,6\n";

}  // namespace

TEST_CASE("ingestion converts units and calibrates once") {
  std::istringstream in(kRates);
  auto ds = cli::parse_heating_rates(in, "mem");
  REQUIRE(ds.rows.size() == 3);
  const auto& m = ds.rows[0].measurement;
  CHECK(m.distance == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(m.secular_frequency == doctest::Approx(units::mhz_to_omega(1.0)).epsilon(1e-15));
  CHECK(m.direction == ModeDirection::Normal);
  CHECK(m.heating_rate == 250.0);
  CHECK(ds.rows[0].line == 3);
  CHECK(ds.rows[1].measurement.heating_rate == doctest::Approx(85.0));
  CHECK(ds.rows[1].measurement.heating_rate_sigma == doctest::Approx(8.5));
  cli::calibrate(ds);
  CHECK(ds.rows[1].measurement.heating_rate == doctest::Approx(85.0));

  std::istringstream raw(kRates);
  const auto uncal = cli::parse_heating_rates(raw, "mem", {.apply_calibration = false});
  CHECK(uncal.rows[1].measurement.heating_rate == 100.0);
}

TEST_CASE("ingestion errors name the line") {
  const auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      cli::parse_heating_rates(in, "bad.csv");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string header = "distance_um,frequency_MHz,direction,method,nbardot_per_s,sigma_per_s\n";
  CHECK(message(header + "100,1,normal,sideband,abc,1\n").find("bad.csv:2") != std::string::npos);
  CHECK(message(header + "100,1,normal,sideband,5,1\n100,1,sideways,sideband,5,1\n")
            .find("bad.csv:3") != std::string::npos);
  CHECK(message(header + "100,1,normal,laser,5,1\n").find("bad.csv:2") != std::string::npos);
  CHECK(message(header + "100,1,normal\n").find("bad.csv:2") != std::string::npos);
  CHECK(message("distance_um,frequency_MHz,direction,method,nbardot_per_s\n1,1,normal,rabi,1\n")
            .find("sigma_per_s") != std::string::npos);

  std::istringstream empty("");
  const auto ds = cli::parse_heating_rates(empty, "empty.csv");
  CHECK(ds.rows.empty());
  CHECK(ds.warnings.size() == 1);
}

TEST_CASE("grid parsing") {
  CHECK(cli::parse_grid("50:300:25").size() == 11);
  CHECK(cli::parse_grid("50:300:25").back() == 300.0);
  CHECK(cli::parse_grid("1,2.5,4") == std::vector<double>{1, 2.5, 4});
  CHECK_THROWS_AS(cli::parse_grid("50:10:5"), Error);
  CHECK_THROWS_AS(cli::parse_grid("1,-2"), Error);
  CHECK_THROWS_AS(cli::parse_grid(""), Error);
}

TEST_CASE("convert then convert --inverse reproduces the input") {
  TempDir dir;
  write(dir / "rates.csv", kRates);
  auto a = invoke({"convert", "--input", dir / "rates.csv", "--out-dir", dir.path.string(),
                   "--no-calibration"});
  REQUIRE(a.status == 0);
  CHECK(a.result["command"] == "convert");
  auto b = invoke({"convert", "--inverse", "--input", dir / "convert.csv", "--out-dir",
                   dir.path.string()});
  REQUIRE(b.status == 0);
  std::ifstream back_in(dir / "convert_inverse.csv");
  std::istringstream orig(kRates);
  const auto original = cli::parse_heating_rates(orig, "orig", {.apply_calibration = false});
  const auto back = cli::parse_heating_rates(back_in, "back", {.apply_calibration = false});
  REQUIRE(back.rows.size() == original.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    const auto& x = original.rows[i].measurement;
    const auto& y = back.rows[i].measurement;
    CHECK(std::abs(y.heating_rate / x.heating_rate - 1) < 1e-12);
    CHECK(std::abs(y.heating_rate_sigma / x.heating_rate_sigma - 1) < 1e-12);
    CHECK(std::abs(y.distance / x.distance - 1) < 1e-12);
    CHECK(std::abs(y.secular_frequency / x.secular_frequency - 1) < 1e-12);
  }
}

TEST_CASE("analytic-patch eval feeds fit-powerlaw") {
  TempDir dir;
  auto ev = invoke({"analytic-patch", "eval", "--zeta-um", "106", "--d-um", "50:300:25",
                    "--out-dir", dir.path.string()});
  REQUIRE(ev.status == 0);
  const auto t = cli::read_table_file(dir / "analytic_patch_eval.csv");
  const auto cp = t.column("se_planar", "eval");
  const auto cn = t.column("se_normal", "eval");
  REQUIRE(t.rows.size() == 11);
  double prev = INFINITY;
  for (const auto& row : t.rows) {
    const double p = std::stod(row[cp]);
    CHECK(p < prev);
    prev = p;
    CHECK(std::stod(row[cn]) == 2.0 * p);
  }
  auto fit = invoke({"fit-powerlaw", "--input", dir / "analytic_patch_eval.csv", "--y",
                     "se_planar", "--out-dir", dir.path.string()});
  REQUIRE(fit.status == 0);
  const double beta = fit.result["result"]["beta"].get<double>();
  CHECK(beta >= 2.3);
  CHECK(beta <= 2.9);
}

TEST_CASE("artifacts carry the resolved run configuration") {
  TempDir dir;
  REQUIRE(invoke({"simulate-technical", "--electrodes", "DC9", "--d-um", "50,100", "--out-dir",
                  dir.path.string()})
              .status == 0);
  const std::string csv = slurp(dir / "simulate_technical.csv");
  REQUIRE(csv.starts_with("# trapnoise "));
  const json header = json::parse(csv.substr(12, csv.find('\n') - 12));
  CHECK(header["schema_version"] == cli::kArtifactSchemaVersion);
  CHECK(header["run"]["command"] == "simulate-technical");
  CHECK(header["run"]["ion"] == "40Ca+");
  CHECK(header["run"]["d_um"].size() == 2);
}

TEST_CASE("module errors give a nonzero status and error JSON") {
  TempDir dir;
  auto missing = invoke({"convert", "--input", dir / "nope.csv", "--out-dir", dir.path.string()});
  CHECK(missing.status == 1);
  CHECK(missing.result["error"]["kind"] == "io");
  auto bad_ion = invoke({"analytic-patch", "eval", "--zeta-um", "10", "--ion", "unobtainium",
                         "--out-dir", dir.path.string()});
  CHECK(bad_ion.status == 1);
  CHECK(bad_ion.result["error"].contains("message"));
  auto negative = invoke({"analytic-patch", "eval", "--zeta-um", "-3", "--out-dir",
                          dir.path.string()});
  CHECK(negative.status == 1);
  CHECK(invoke({"no-such-command"}).status == 2);
  CHECK(invoke({}).status == 2);
}

TEST_CASE("the binary's exit status follows module errors") {
  TempDir dir;
  const std::string bin = TRAPNOISE_CLI_BINARY;
  const std::string ok = "\"" + bin + "\" analytic-patch eval --zeta-um 50 --d-um 50,60 --out-dir \"" +
                         dir.path.string() + "\" > \"" + (dir / "out.txt") + "\"";
  CHECK(std::system(ok.c_str()) == 0);
  const std::string bad = "\"" + bin + "\" fit-technical --input \"" + (dir / "missing.csv") +
                          "\" --out-dir \"" + dir.path.string() + "\" 2> \"" +
                          (dir / "err.txt") + "\"";
  CHECK(std::system(bad.c_str()) != 0);
  const json err = json::parse(slurp(dir / "err.txt"));
  CHECK(err["error"]["kind"] == "io");
}

TEST_CASE("configuration from the environment") {
  TempDir dir;
  write(dir / "cfg.json", json{{"ion", "9Be+"}, {"d_um", "60:80:10"}}.dump());
  ::setenv(cli::kConfigEnvVar, (dir / "cfg.json").c_str(), 1);
  auto r = invoke({"analytic-patch", "eval", "--zeta-um", "40", "--out-dir", dir.path.string()});
  ::unsetenv(cli::kConfigEnvVar);
  REQUIRE(r.status == 0);
  const std::string csv = slurp(dir / "analytic_patch_eval.csv");
  const json header = json::parse(csv.substr(12, csv.find('\n') - 12));
  CHECK(header["run"]["ion"] == "9Be+");
  CHECK(cli::read_table_file(dir / "analytic_patch_eval.csv").rows.size() == 3);
  // Flags win over the file.
  write(dir / "cfg2.json", json{{"ion", "9Be+"}}.dump());
  auto r2 = invoke({"analytic-patch", "eval", "--zeta-um", "40", "--d-um", "70", "--config",
                    dir / "cfg2.json", "--ion", "40Ca+", "--out-dir", dir.path.string()});
  REQUIRE(r2.status == 0);
  const std::string csv2 = slurp(dir / "analytic_patch_eval.csv");
  CHECK(json::parse(csv2.substr(12, csv2.find('\n') - 12))["run"]["ion"] == "40Ca+");
}

TEST_CASE("stochastic commands are bit-reproducible and report the seed") {
  TempDir a, b;
  for (const auto* d : {&a, &b}) {
    auto r = invoke({"voronoi", "generate", "--density-per-um2", "2e-5", "--seed", "17",
                     "--out-dir", d->path.string()});
    REQUIRE(r.status == 0);
    CHECK(r.result["result"]["seed"] == 17);
  }
  const auto pa = slurp(a / "voronoi_patches.json");
  const auto pb = slurp(b / "voronoi_patches.json");
  CHECK_FALSE(pa.empty());
  // Only the out_dir entry of the embedded config differs.
  auto ja = json::parse(pa), jb = json::parse(pb);
  ja["run"].erase("out_dir");
  jb["run"].erase("out_dir");
  CHECK(ja == jb);

  auto ac = invoke({"voronoi", "autocorr", "--patches", a / "voronoi_patches.json", "--seed", "3",
                    "--out-dir", a.path.string()});
  REQUIRE(ac.status == 0);
  CHECK(ac.result["result"]["seed"] == 3);
}

TEST_CASE("the fit pipeline is invariant under row order") {
  TempDir dir;
  std::string header = "distance_um,frequency_MHz,direction,method,nbardot_per_s,sigma_per_s\n";
  std::vector<std::string> rows;
  for (int d = 40; d <= 300; d += 20) {
    const double r = 5e3 * std::pow(d / 100.0, -2.6);
    rows.push_back(std::to_string(d) + ",1.0,planar_y,sideband," + std::to_string(r) + "," +
                   std::to_string(0.05 * r) + "\n");
    rows.push_back(std::to_string(d) + ",1.0,normal,rabi," + std::to_string(2.3 * r) + "," +
                   std::to_string(0.1 * r) + "\n");
  }
  std::string forward = header, reversed = header;
  for (const auto& r : rows) forward += r;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) reversed += *it;
  write(dir / "f.csv", forward);
  write(dir / "r.csv", reversed);
  fs::create_directories(dir.path / "f");
  fs::create_directories(dir.path / "r");
  REQUIRE(invoke({"fit-technical", "--input", dir / "f.csv", "--out-dir", dir / "f"}).status == 0);
  REQUIRE(invoke({"fit-technical", "--input", dir / "r.csv", "--out-dir", dir / "r"}).status == 0);
  const auto a = json::parse(slurp(dir / "f/fit_technical.json"))["fit"];
  const auto b = json::parse(slurp(dir / "r/fit_technical.json"))["fit"];
  CHECK(a["chi2"].get<double>() == doctest::Approx(b["chi2"].get<double>()).epsilon(1e-10));
  for (auto it = a["amplitudes_V_per_rtHz"].begin(); it != a["amplitudes_V_per_rtHz"].end(); ++it) {
    const double x = it.value().get<double>();
    const double y = b["amplitudes_V_per_rtHz"][it.key()].get<double>();
    CHECK(std::abs(x - y) <= 1e-8 * std::max(std::abs(x), 1e-12));
  }
}

TEST_CASE("other subcommands run end to end") {
  TempDir dir;
  const std::string out = dir.path.string();
  write(dir / "rates.csv", kRates);
  CHECK(invoke({"normalize", "--input", dir / "rates.csv", "--ref-ion", "9Be+", "--out-dir", out})
            .status == 0);
  CHECK(fs::exists(dir / "normalize.csv"));

  REQUIRE(invoke({"analytic-patch", "eval", "--zeta-um", "106", "--d-um", "40:300:20",
                  "--amplitude", "1e-9", "--out-dir", out})
              .status == 0);
  // Reshape the eval curve into an S_E table for the fitters.
  const auto t = cli::read_table_file(dir / "analytic_patch_eval.csv");
  std::string se = "distance_um,frequency_MHz,direction,se,se_sigma\n";
  for (const auto& row : t.rows) {
    const double p = std::stod(row[t.column("se_planar", "x")]);
    se += row[0] + ",1,planar_y," + cli::format_number(p) + "," + cli::format_number(0.05 * p) + "\n";
    se += row[0] + ",1,normal," + cli::format_number(2 * p) + "," + cli::format_number(0.1 * p) + "\n";
  }
  write(dir / "se.csv", se);
  auto af = invoke({"analytic-patch", "fit", "--input", dir / "se.csv", "--out-dir", out});
  REQUIRE(af.status == 0);
  const auto report = json::parse(slurp(dir / "analytic_patch_fit.json"));
  CHECK(report.dump().find("zeta") != std::string::npos);

  REQUIRE(invoke({"voronoi", "generate", "--density-per-um2", "1e-5", "--out-dir", out}).status == 0);
  auto vf = invoke({"voronoi", "fit", "--patches", dir / "voronoi_patches.json", "--input",
                    dir / "se.csv", "--out-dir", out});
  REQUIRE(vf.status == 0);
  CHECK(fs::exists(dir / "voronoi_fit_patches.json"));
  CHECK(fs::exists(dir / "voronoi_fit.csv"));
  CHECK(invoke({"fit-technical", "--input", dir / "se.csv", "--out-dir", out}).status == 0);
}
