#include "trapnoise/cli/commands.hpp"

#include "trapnoise/cli/artifacts.hpp"
#include "trapnoise/cli/dataset.hpp"
#include "trapnoise/error.hpp"
#include "trapnoise/fitting.hpp"
#include "trapnoise/ion_path.hpp"
#include "trapnoise/patch_analytic.hpp"
#include "trapnoise/patch_voronoi.hpp"
#include "trapnoise/technical_noise.hpp"
#include "trapnoise/units.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace trapnoise::cli {

namespace {

using nlohmann::json;
using units::m_to_um;
using units::um_to_m;

std::string num(double v) { return format_number(v); }

// Options every subcommand accepts. Values left unset fall back to the config
// file, then to built-in defaults.
struct Common {
  std::string config_path;
  std::string geometry;
  std::string ion;
  std::string out_dir;
  std::string d_um;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double path_x_um = 0.0;
  double path_y_um = 0.0;
};

struct Context {
  RunConfig config;
  std::ostream& out;
  std::string out_path(const std::string& name) const {
    return (std::filesystem::path(config.out_dir) / name).string();
  }
  void write(const std::string& name, const std::string& contents, json& artifacts) const {
    const std::string path = out_path(name);
    write_atomic(path, contents);
    artifacts.push_back(path);
  }
  TrapGeometry geometry() const {
    return config.geometry.empty() ? default_trap_geometry() : load_geometry(config.geometry);
  }
  IonSpecies ion() const { return ion_by_name(config.ion); }
  IonPath path() const {
    return IonPath::vertical(um_to_m(config.parameters.value("path_x_um", 0.0)),
                             um_to_m(config.parameters.value("path_y_um", 0.0)));
  }
};

void add_common(CLI::App* app, Common& c, bool with_grid, bool with_seed) {
  app->add_option("--config", c.config_path,
                  std::string("JSON run configuration (default: $") + kConfigEnvVar + ")");
  app->add_option("--geometry", c.geometry, "electrode geometry JSON (default: built-in trap)");
  app->add_option("--ion", c.ion, "ion species, e.g. 40Ca+, 9Be+ (default 40Ca+)");
  app->add_option("--out-dir", c.out_dir, "directory for artifacts (default .)");
  if (with_grid) {
    app->add_option("--d-um", c.d_um, "distance grid in um: start:stop:step or a,b,c");
  }
  if (with_seed) {
    app->add_option("--seed", c.seed, "RNG seed (default 1)")
        ->each([&c](const std::string&) { c.seed_given = true; });
  }
}

RunConfig resolve(const std::string& command, const Common& c, const CLI::App* app) {
  json file = json::object();
  std::string config_path = c.config_path;
  if (config_path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) config_path = env;
  }
  if (!config_path.empty()) file = load_config_file(config_path);

  RunConfig cfg;
  cfg.command = command;
  const auto pick = [&](const std::string& flag, const std::string& value, const char* key,
                        std::string fallback) {
    if (app->count(flag) > 0) return value;
    if (file.contains(key)) return file.at(key).get<std::string>();
    return fallback;
  };
  try {
    cfg.geometry = pick("--geometry", c.geometry, "geometry", "");
    cfg.ion = pick("--ion", c.ion, "ion", "40Ca+");
    cfg.out_dir = pick("--out-dir", c.out_dir, "out_dir", ".");
    if (app->get_option_no_throw("--d-um") != nullptr && app->count("--d-um") > 0) {
      for (double v : parse_grid(c.d_um)) cfg.distances.push_back(um_to_m(v));
    } else if (file.contains("d_um")) {
      const auto& g = file.at("d_um");
      std::vector<double> um = g.is_string() ? parse_grid(g.get<std::string>())
                                             : g.get<std::vector<double>>();
      for (double v : um) cfg.distances.push_back(um_to_m(v));
    }
    if (file.contains("f_MHz")) {
      const auto& g = file.at("f_MHz");
      std::vector<double> mhz = g.is_string() ? parse_grid(g.get<std::string>())
                                              : g.get<std::vector<double>>();
      for (double v : mhz) cfg.frequencies.push_back(units::mhz_to_omega(v));
    }
    if (app->get_option_no_throw("--seed") != nullptr) {
      if (c.seed_given) {
        cfg.seed = c.seed;
      } else if (file.contains("seed")) {
        cfg.seed = file.at("seed").get<std::uint64_t>();
      } else {
        cfg.seed = 1;
      }
    }
    if (file.contains("parameters")) cfg.parameters = file.at("parameters");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "config: " + std::string(e.what()));
  }
  ion_by_name(cfg.ion);  // reject unknown species early
  return cfg;
}

std::vector<double> default_distances(const RunConfig& cfg) {
  if (!cfg.distances.empty()) return cfg.distances;
  std::vector<double> d;
  for (double v : parse_grid("50:300:10")) d.push_back(um_to_m(v));
  return d;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

json power_law_json(const PowerLawFit& f) {
  return {{"exponent", f.exponent},
          {"exponent_sigma", f.exponent_sigma},
          {"beta", -f.exponent},
          {"log_prefactor", f.log_prefactor},
          {"log_prefactor_sigma", f.log_prefactor_sigma},
          {"chi2", f.chi2},
          {"reduced_chi2", f.reduced_chi2},
          {"dof", f.dof},
          {"weighted", f.weighted},
          {"flagged_rows", f.flagged}};
}

// ---- subcommands ----------------------------------------------------------

json cmd_convert(const Context& ctx, const std::string& input, bool inverse, bool no_cal,
                 const std::string& output) {
  const IonSpecies ion = ctx.ion();
  json artifacts = json::array();
  if (!inverse) {
    const Dataset ds = ingest_csv(input, {.apply_calibration = !no_cal});
    CsvArtifact csv(ctx.config,
                    {"distance_um", "frequency_MHz", "direction", "se", "se_sigma"});
    for (const auto& row : ds.rows) {
      const auto p = heating_rate_to_se(row.measurement, ion);
      csv.row({num(units::m_to_um_exact(p.distance)), num(units::omega_to_mhz(p.angular_frequency)),
               std::string(to_string(p.direction)), num(p.se), num(p.se_sigma)});
    }
    ctx.write(output.empty() ? "convert.csv" : output, csv.str(), artifacts);
    return {{"rows", ds.rows.size()}, {"warnings", ds.warnings}, {"artifacts", artifacts}};
  }
  std::ifstream in(input);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + input + "'");
  const auto points = parse_spectral_densities(in, input);
  CsvArtifact csv(ctx.config, {"distance_um", "frequency_MHz", "direction", "method",
                               "nbardot_per_s", "sigma_per_s"});
  for (const auto& p : points) {
    const auto m = se_to_heating_rate(p, ion);
    csv.row({num(units::m_to_um_exact(m.distance)),
             num(units::omega_to_mhz(m.secular_frequency)), std::string(to_string(m.direction)),
             std::string(to_string(m.method)), num(m.heating_rate), num(m.heating_rate_sigma)});
  }
  ctx.write(output.empty() ? "convert_inverse.csv" : output, csv.str(), artifacts);
  return {{"rows", points.size()}, {"artifacts", artifacts}};
}

double cell_number(const Table& t, std::size_t row, std::size_t col, const std::string& source) {
  const std::string& s = t.rows[row][col];
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Parse, source + ":" + std::to_string(t.lines[row]) + ": column '" +
                                    t.header[col] + "' is not a number: '" + s + "'");
}

json cmd_fit_powerlaw(const Context& ctx, const std::string& input, const std::string& xcol,
                      const std::string& ycol, const std::string& scol,
                      const std::vector<std::string>& where) {
  const Table t = read_table_file(input);
  if (t.header.empty()) throw Error(ErrorKind::InsufficientData, input + ": empty table");
  const auto cx = t.column(xcol, input);
  const auto cy = t.column(ycol, input);
  std::optional<std::size_t> cs;
  if (!scol.empty()) cs = t.column(scol, input);
  std::vector<std::pair<std::size_t, std::string>> filters;
  for (const auto& w : where) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidInput, "--where expects column=value, got '" + w + "'");
    }
    filters.emplace_back(t.column(w.substr(0, eq), input), w.substr(eq + 1));
  }
  std::vector<double> x, y, s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const bool keep = std::all_of(filters.begin(), filters.end(),
                                  [&](const auto& f) { return t.rows[r][f.first] == f.second; });
    if (!keep) continue;
    x.push_back(cell_number(t, r, cx, input));
    y.push_back(cell_number(t, r, cy, input));
    if (cs) s.push_back(cell_number(t, r, *cs, input));
  }
  const PowerLawFit fit = fit_power_law(x, y, s);
  json artifacts = json::array();
  json body = power_law_json(fit);
  body["points"] = x.size();
  body["x_column"] = xcol;
  body["y_column"] = ycol;
  ctx.write("fit_powerlaw.json", json_artifact(ctx.config, {{"fit", body}}).dump(2) + "\n",
            artifacts);
  body["artifacts"] = artifacts;
  return body;
}

json cmd_simulate_technical(const Context& ctx, const std::string& electrodes, double amp_uv) {
  const TrapGeometry g = ctx.geometry();
  std::vector<std::string> names = split_list(electrodes);
  if (names.empty()) {
    for (const auto& e : g.electrodes()) names.push_back(e.name);
  }
  const auto distances = default_distances(ctx.config);
  const IonPath path = ctx.path();
  CsvArtifact csv(ctx.config,
                  {"electrode", "distance_um", "se_x", "se_y", "se_z", "normal_over_planar_y"});
  json summary = json::object();
  for (const auto& name : names) {
    ElectrodeNoiseSpec spec;
    spec.amplitudes[name] = amp_uv * 1e-6;
    double rmin = INFINITY, rmax = 0.0;
    for (double d : distances) {
      const auto s = technical_se(g, spec, path, d);
      const double ratio = s.y > 0.0 ? s.z / s.y : INFINITY;
      if (std::isfinite(ratio)) {
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
      }
      csv.row({name, num(units::m_to_um_exact(d)), num(s.x), num(s.y), num(s.z), num(ratio)});
    }
    summary[name] = {{"normal_over_planar_y_min", rmin}, {"normal_over_planar_y_max", rmax}};
  }
  json artifacts = json::array();
  ctx.write("simulate_technical.csv", csv.str(), artifacts);
  return {{"electrodes", summary}, {"artifacts", artifacts}};
}

json cmd_fit_technical(const Context& ctx, const std::string& input, bool no_cal,
                       const std::string& electrodes) {
  const TrapGeometry g = ctx.geometry();
  const auto data = load_spectral_densities(input, ctx.ion(), {.apply_calibration = !no_cal});
  const auto allowed = split_list(electrodes);
  const IonPath path = ctx.path();
  const auto fit = fit_electrode_amplitudes(g, data, path, allowed);

  json amps = json::object();
  for (const auto& [name, a] : fit.spec.amplitudes) amps[name] = a;
  json groups = json::array();
  for (const auto& grp : fit.report.groups) {
    groups.push_back({{"electrodes", grp.electrodes},
                      {"squared_amplitude_sum_V2_per_Hz", grp.squared_amplitude_sum}});
  }
  const auto& r = fit.report;
  json report{{"amplitudes_V_per_rtHz", amps},
              {"groups", groups},
              {"chi2", r.chi2},
              {"reduced_chi2", r.reduced_chi2},
              {"dof", r.dof},
              {"weighted", r.weighted},
              {"converged", r.converged},
              {"solver_iterations", r.solver_iterations}};

  CsvArtifact csv(ctx.config,
                  {"distance_um", "direction", "se", "se_sigma", "model", "residual"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv.row({num(units::m_to_um_exact(data[i].distance)),
             std::string(to_string(data[i].direction)), num(data[i].se), num(data[i].se_sigma),
             num(r.model[i]), num(r.residuals[i])});
  }
  json artifacts = json::array();
  ctx.write("fit_technical.json", json_artifact(ctx.config, {{"fit", report}}).dump(2) + "\n",
            artifacts);
  ctx.write("fit_technical.csv", csv.str(), artifacts);
  return {{"reduced_chi2", r.reduced_chi2}, {"dof", r.dof}, {"artifacts", artifacts}};
}

json cmd_analytic_eval(const Context& ctx, double zeta_um, double amplitude) {
  AnalyticPatchParams params{um_to_m(zeta_um), amplitude, 0.0};
  const auto distances = default_distances(ctx.config);
  CsvArtifact csv(ctx.config, {"distance_um", "se_planar", "se_normal", "local_beta"});
  for (double d : distances) {
    const double sp = analytic_se(params, d, ModeDirection::PlanarY);
    const double sn = analytic_se(params, d, ModeDirection::Normal);
    csv.row({num(units::m_to_um_exact(d)), num(sp), num(sn), num(local_exponent(params, d))});
  }
  json artifacts = json::array();
  ctx.write("analytic_patch_eval.csv", csv.str(), artifacts);
  return {{"points", distances.size()}, {"artifacts", artifacts}};
}

json cmd_analytic_fit(const Context& ctx, const std::string& input, bool no_cal) {
  const auto data = load_spectral_densities(input, ctx.ion(), {.apply_calibration = !no_cal});
  const ZetaFit fit = fit_zeta(data);
  const auto& r = fit.report;
  json report{{"zeta_um", m_to_um(fit.params.zeta)},
              {"zeta_sigma_um", m_to_um(r.zeta_sigma)},
              {"amplitude", fit.params.amplitude},
              {"log_amplitude_sigma", r.log_amplitude_sigma},
              {"chi2", r.chi2},
              {"reduced_chi2", r.reduced_chi2},
              {"dof", r.dof},
              {"weighted", r.weighted},
              {"at_boundary", r.at_boundary},
              {"flat_profile", r.flat_profile}};
  std::vector<double> distances = ctx.config.distances;
  if (distances.empty()) {
    std::set<double> ds;
    for (const auto& p : data) ds.insert(p.distance);
    distances.assign(ds.begin(), ds.end());
  }
  CsvArtifact csv(ctx.config, {"distance_um", "se_planar", "se_normal", "local_beta"});
  for (double d : distances) {
    csv.row({num(units::m_to_um_exact(d)), num(analytic_se(fit.params, d, ModeDirection::PlanarY)),
             num(analytic_se(fit.params, d, ModeDirection::Normal)),
             num(local_exponent(fit.params, d))});
  }
  json artifacts = json::array();
  ctx.write("analytic_patch_fit.json", json_artifact(ctx.config, {{"fit", report}}).dump(2) + "\n",
            artifacts);
  ctx.write("analytic_patch_fit.csv", csv.str(), artifacts);
  report["artifacts"] = artifacts;
  return report;
}

json cmd_voronoi_generate(Context& ctx, double density_um2, double target_zeta_um,
                          double grid_um) {
  const TrapGeometry g = ctx.geometry();
  double density = density_um2 * 1e12;
  json extra = json::object();
  if (target_zeta_um > 0.0) {
    DensityCalibrationOptions opt;
    opt.grid_step = um_to_m(grid_um);
    opt.first_seed = *ctx.config.seed;
    const auto cal = calibrate_density(g, um_to_m(target_zeta_um), opt);
    density = cal.density;
    extra = {{"calibrated_density_per_um2", density * 1e-12},
             {"calibration_mean_zeta_um", m_to_um(cal.mean_zeta)},
             {"calibration_zeta_spread_um", m_to_um(cal.zeta_spread)},
             {"calibration_converged", cal.converged}};
  }
  if (!(density > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "give --density-per-um2 or --target-zeta-um");
  }
  const auto config = generate_patches(g, density, *ctx.config.seed);
  json artifacts = json::array();
  json doc = json_artifact(ctx.config, patches_to_json(config));
  ctx.write("voronoi_patches.json", doc.dump(1) + "\n", artifacts);
  json out{{"patches", config.size()},
           {"density_per_um2", density * 1e-12},
           {"total_area_um2", config.total_area() * 1e12},
           {"artifacts", artifacts}};
  for (auto it = extra.begin(); it != extra.end(); ++it) out[it.key()] = it.value();
  return out;
}

json cmd_voronoi_autocorr(const Context& ctx, const std::string& patches, double grid_um,
                          int realizations) {
  const auto config = patches_from_json(read_json_file(patches));
  AutocorrelationOptions opt;
  opt.realizations = realizations;
  const auto est = estimate_autocorrelation(config, um_to_m(grid_um), *ctx.config.seed, opt);
  CsvArtifact csv(ctx.config, {"lag_um", "autocorrelation", "pairs"});
  for (std::size_t i = 0; i < est.lags.size(); ++i) {
    csv.row({num(m_to_um(est.lags[i])), num(est.values[i]), std::to_string(est.pair_counts[i])});
  }
  json report{{"fitted_zeta_um", m_to_um(est.fitted_zeta)},
              {"fit_range_um", m_to_um(est.fit_range)},
              {"region_size_um", m_to_um(est.region_size)},
              {"fit_rms", est.fit_rms},
              {"zeta_exceeds_region", est.zeta_exceeds_region},
              {"realizations", est.realizations}};
  json artifacts = json::array();
  ctx.write("voronoi_autocorr.csv", csv.str(), artifacts);
  ctx.write("voronoi_autocorr.json", json_artifact(ctx.config, {{"fit", report}}).dump(2) + "\n",
            artifacts);
  report["artifacts"] = artifacts;
  return report;
}

json cmd_voronoi_fit(const Context& ctx, const std::string& patches, const std::string& input,
                     bool no_cal, bool unbounded, double max_ratio) {
  const auto config = patches_from_json(read_json_file(patches));
  const auto data = load_spectral_densities(input, ctx.ion(), {.apply_calibration = !no_cal});
  PatchFitOptions opt;
  opt.bounded_ratio = !unbounded;
  opt.max_ratio = max_ratio;
  const auto fit = fit_patch_amplitudes(config, data, ctx.path(), opt);
  const auto& r = fit.report;
  json report{{"chi2", r.chi2},
              {"reduced_chi2", r.reduced_chi2},
              {"dof", r.dof},
              {"weighted", r.weighted},
              {"converged", r.converged},
              {"bounded_ratio", r.bounded_ratio},
              {"achieved_ratio", r.achieved_ratio},
              {"max_planar_ratio", r.max_planar_ratio},
              {"degenerate_groups", r.degenerate_groups},
              {"residuals", r.residuals}};
  CsvArtifact csv(ctx.config, {"distance_um", "se_x", "se_y", "se_z"});
  for (std::size_t i = 0; i < r.distances.size(); ++i) {
    csv.row({num(units::m_to_um_exact(r.distances[i])), num(r.planar_x[i]), num(r.planar_y[i]),
             num(r.normal[i])});
  }
  json artifacts = json::array();
  ctx.write("voronoi_fit_patches.json",
            json_artifact(ctx.config, patches_to_json(fit.config)).dump(1) + "\n", artifacts);
  ctx.write("voronoi_fit.json", json_artifact(ctx.config, {{"fit", report}}).dump(2) + "\n",
            artifacts);
  ctx.write("voronoi_fit.csv", csv.str(), artifacts);
  return {{"reduced_chi2", r.reduced_chi2},
          {"max_planar_ratio", r.max_planar_ratio},
          {"artifacts", artifacts}};
}

json cmd_normalize(const Context& ctx, const std::string& input, bool no_cal,
                   const std::string& ref_ion_name, double ref_mhz) {
  const Dataset ds = ingest_csv(input, {.apply_calibration = !no_cal});
  const IonSpecies ion = ctx.ion();
  const IonSpecies ref = ion_by_name(ref_ion_name);
  const double ref_omega = units::mhz_to_omega(ref_mhz);
  CsvArtifact csv(ctx.config, {"distance_um", "frequency_MHz", "direction", "nbardot_per_s",
                               "sigma_per_s", "normalized_per_s", "normalized_sigma_per_s"});
  for (const auto& row : ds.rows) {
    const auto& m = row.measurement;
    const double scale = m.heating_rate > 0.0
                             ? normalize_heating_rate(m, ion, ref, ref_omega) / m.heating_rate
                             : normalize_heating_rate({m.distance, m.secular_frequency,
                                                       m.direction, m.method, 1.0, 0.0},
                                                      ion, ref, ref_omega);
    csv.row({num(units::m_to_um_exact(m.distance)), num(units::omega_to_mhz(m.secular_frequency)),
             std::string(to_string(m.direction)), num(m.heating_rate),
             num(m.heating_rate_sigma), num(m.heating_rate * scale),
             num(m.heating_rate_sigma * scale)});
  }
  json artifacts = json::array();
  ctx.write("normalize.csv", csv.str(), artifacts);
  return {{"rows", ds.rows.size()}, {"warnings", ds.warnings}, {"artifacts", artifacts}};
}

json error_json(std::string_view kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Electric-field noise models for planar ion traps", "trapnoise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "trapnoise 1.0");

  // One Common block per subcommand so defaults never leak between them.
  std::map<std::string, Common> common;
  std::function<json(RunConfig&)> action;
  std::string command;

  const auto sub = [&](CLI::App* parent, const std::string& name, const std::string& full,
                       const std::string& help, bool grid, bool seed) {
    CLI::App* s = parent->add_subcommand(name, help);
    add_common(s, common[full], grid, seed);
    s->add_option("--path-x-um", common[full].path_x_um, "ion path x offset in um");
    s->add_option("--path-y-um", common[full].path_y_um, "ion path y offset in um");
    return s;
  };
  // Resolves the config for `full` and stores the path offsets into parameters.
  const auto bind = [&](CLI::App* s, const std::string& full, bool stochastic,
                        std::function<json(Context&)> body) {
    s->callback([&, s, full, stochastic, body] {
      command = full;
      action = [&, s, full, stochastic, body](RunConfig&) {
        RunConfig cfg = resolve(full, common[full], s);
        if (s->count("--path-x-um")) cfg.parameters["path_x_um"] = common[full].path_x_um;
        if (s->count("--path-y-um")) cfg.parameters["path_y_um"] = common[full].path_y_um;
        cfg.validate(stochastic);
        Context ctx{cfg, out};
        json result = body(ctx);
        if (stochastic) result["seed"] = *cfg.seed;
        return result;
      };
    });
  };

  // convert
  std::string conv_in, conv_out;
  bool conv_inverse = false, conv_nocal = false;
  auto* conv = sub(&app, "convert", "convert", "heating rate <-> field spectral density", false,
                   false);
  conv->add_option("--input", conv_in, "CSV input")->required();
  conv->add_option("--output", conv_out, "artifact file name");
  conv->add_flag("--inverse", conv_inverse, "S_E table to heating rates");
  conv->add_flag("--no-calibration", conv_nocal, "do not rescale Rabi-method rows");
  bind(conv, "convert", false, [&](Context& c) {
    c.config.parameters["inverse"] = conv_inverse;
    c.config.parameters["calibration"] = !conv_nocal;
    c.config.parameters["input"] = conv_in;
    return cmd_convert(c, conv_in, conv_inverse, conv_nocal, conv_out);
  });

  // fit-powerlaw
  std::string pl_in, pl_x = "distance_um", pl_y = "se", pl_s;
  std::vector<std::string> pl_where;
  auto* pl = sub(&app, "fit-powerlaw", "fit-powerlaw", "log-log power-law fit of two columns",
                 false, false);
  pl->add_option("--input", pl_in, "CSV input")->required();
  pl->add_option("--x", pl_x, "abscissa column (default distance_um)");
  pl->add_option("--y", pl_y, "ordinate column (default se)");
  pl->add_option("--sigma", pl_s, "uncertainty column of y; unweighted when omitted");
  pl->add_option("--where", pl_where, "row filter column=value (repeatable)");
  bind(pl, "fit-powerlaw", false, [&](Context& c) {
    c.config.parameters["input"] = pl_in;
    c.config.parameters["x"] = pl_x;
    c.config.parameters["y"] = pl_y;
    c.config.parameters["sigma"] = pl_s;
    c.config.parameters["where"] = pl_where;
    return cmd_fit_powerlaw(c, pl_in, pl_x, pl_y, pl_s, pl_where);
  });

  // simulate-technical
  std::string st_electrodes;
  double st_amp = 3.0;
  auto* st = sub(&app, "simulate-technical", "simulate-technical",
                 "per-electrode technical-noise curves", true, false);
  st->add_option("--electrodes", st_electrodes, "comma-separated names (default: every electrode)");
  st->add_option("--amplitude-uV", st_amp, "noise amplitude in uV/sqrt(Hz) (default 3)");
  bind(st, "simulate-technical", false, [&](Context& c) {
    c.config.parameters["electrodes"] = st_electrodes;
    c.config.parameters["amplitude_uV"] = st_amp;
    c.config.distances = default_distances(c.config);
    return cmd_simulate_technical(c, st_electrodes, st_amp);
  });

  // fit-technical
  std::string ft_in, ft_electrodes;
  bool ft_nocal = false;
  auto* ft = sub(&app, "fit-technical", "fit-technical",
                 "joint non-negative fit of per-electrode amplitudes", false, false);
  ft->add_option("--input", ft_in, "heating-rate or S_E CSV")->required();
  ft->add_option("--electrodes", ft_electrodes, "restrict the fit to these electrodes");
  ft->add_flag("--no-calibration", ft_nocal, "do not rescale Rabi-method rows");
  bind(ft, "fit-technical", false, [&](Context& c) {
    c.config.parameters["input"] = ft_in;
    c.config.parameters["electrodes"] = ft_electrodes;
    c.config.parameters["calibration"] = !ft_nocal;
    return cmd_fit_technical(c, ft_in, ft_nocal, ft_electrodes);
  });

  // analytic-patch eval|fit
  auto* ap = app.add_subcommand("analytic-patch", "exponential-correlation patch model");
  ap->require_subcommand(1);
  double ape_zeta = 0.0, ape_amp = 1.0;
  auto* ape = sub(ap, "eval", "analytic-patch eval", "S_E(d) curves and local exponent", true,
                  false);
  ape->add_option("--zeta-um", ape_zeta, "correlation length in um")->required();
  ape->add_option("--amplitude", ape_amp, "combined amplitude A (default 1)");
  bind(ape, "analytic-patch eval", false, [&](Context& c) {
    c.config.parameters["zeta_um"] = ape_zeta;
    c.config.parameters["amplitude"] = ape_amp;
    c.config.distances = default_distances(c.config);
    return cmd_analytic_eval(c, ape_zeta, ape_amp);
  });
  std::string apf_in;
  bool apf_nocal = false;
  auto* apf = sub(ap, "fit", "analytic-patch fit", "fit zeta and amplitude to data", true, false);
  apf->add_option("--input", apf_in, "heating-rate or S_E CSV")->required();
  apf->add_flag("--no-calibration", apf_nocal, "do not rescale Rabi-method rows");
  bind(apf, "analytic-patch fit", false, [&](Context& c) {
    c.config.parameters["input"] = apf_in;
    c.config.parameters["calibration"] = !apf_nocal;
    return cmd_analytic_fit(c, apf_in, apf_nocal);
  });

  // voronoi generate|autocorr|fit
  auto* vo = app.add_subcommand("voronoi", "explicit Poisson-Voronoi patch configurations");
  vo->require_subcommand(1);
  double vg_density = 0.0, vg_target = 0.0, vg_grid = 10.0;
  auto* vg = sub(vo, "generate", "voronoi generate", "tessellate the electrodes", false, true);
  vg->add_option("--density-per-um2", vg_density, "seed density per um^2");
  vg->add_option("--target-zeta-um", vg_target,
                 "calibrate the density to this fitted correlation length instead");
  vg->add_option("--grid-um", vg_grid, "raster step used by the calibration (default 10)");
  bind(vg, "voronoi generate", true, [&](Context& c) {
    c.config.parameters["density_per_um2"] = vg_density;
    c.config.parameters["target_zeta_um"] = vg_target;
    c.config.parameters["grid_um"] = vg_grid;
    return cmd_voronoi_generate(c, vg_density, vg_target, vg_grid);
  });
  std::string va_patches;
  double va_grid = 10.0;
  int va_real = 20;
  auto* va = sub(vo, "autocorr", "voronoi autocorr", "empirical autocorrelation and zeta", false,
                 true);
  va->add_option("--patches", va_patches, "patch configuration JSON")->required();
  va->add_option("--grid-um", va_grid, "raster step in um (default 10)");
  va->add_option("--realizations", va_real, "random value assignments (default 20)");
  bind(va, "voronoi autocorr", true, [&](Context& c) {
    c.config.parameters["patches"] = va_patches;
    c.config.parameters["grid_um"] = va_grid;
    c.config.parameters["realizations"] = va_real;
    return cmd_voronoi_autocorr(c, va_patches, va_grid, va_real);
  });
  std::string vf_patches, vf_in;
  bool vf_nocal = false, vf_unbounded = false;
  double vf_ratio = 4.0;
  auto* vf = sub(vo, "fit", "voronoi fit", "fit patch amplitudes to data", false, false);
  vf->add_option("--patches", vf_patches, "patch configuration JSON")->required();
  vf->add_option("--input", vf_in, "heating-rate or S_E CSV")->required();
  vf->add_option("--max-ratio", vf_ratio, "largest/smallest amplitude bound (default 4)");
  vf->add_flag("--unbounded", vf_unbounded, "plain non-negative fit without a ratio bound");
  vf->add_flag("--no-calibration", vf_nocal, "do not rescale Rabi-method rows");
  bind(vf, "voronoi fit", false, [&](Context& c) {
    c.config.parameters["patches"] = vf_patches;
    c.config.parameters["input"] = vf_in;
    c.config.parameters["max_ratio"] = vf_unbounded ? json(nullptr) : json(vf_ratio);
    c.config.parameters["calibration"] = !vf_nocal;
    return cmd_voronoi_fit(c, vf_patches, vf_in, vf_nocal, vf_unbounded, vf_ratio);
  });

  // normalize
  std::string nz_in, nz_ref = "40Ca+";
  double nz_f = 1.0;
  bool nz_nocal = false;
  auto* nz = sub(&app, "normalize", "normalize",
                 "rescale heating rates to a reference ion and frequency", false, false);
  nz->add_option("--input", nz_in, "heating-rate CSV")->required();
  nz->add_option("--ref-ion", nz_ref, "reference species (default 40Ca+)");
  nz->add_option("--ref-frequency-MHz", nz_f, "reference secular frequency (default 1)");
  nz->add_flag("--no-calibration", nz_nocal, "do not rescale Rabi-method rows");
  bind(nz, "normalize", false, [&](Context& c) {
    c.config.parameters["input"] = nz_in;
    c.config.parameters["ref_ion"] = nz_ref;
    c.config.parameters["ref_frequency_MHz"] = nz_f;
    c.config.parameters["calibration"] = !nz_nocal;
    return cmd_normalize(c, nz_in, nz_nocal, nz_ref, nz_f);
  });

  std::vector<std::string> argv_store{"trapnoise"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()).dump() << "\n";
    return 2;
  }

  try {
    RunConfig unused;
    const json result = action(unused);
    out << json{{"command", command}, {"result", result}}.dump() << "\n";
    return 0;
  } catch (const Error& e) {
    err << error_json(to_string(e.kind()), e.what()).dump() << "\n";
  } catch (const std::exception& e) {
    err << error_json("internal", e.what()).dump() << "\n";
  }
  return 1;
}

}  // namespace trapnoise::cli
