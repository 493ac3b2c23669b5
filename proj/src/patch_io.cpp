#include "trapnoise/error.hpp"
#include "trapnoise/patch_voronoi.hpp"
#include "trapnoise/units.hpp"

#include <nlohmann/json.hpp>

namespace trapnoise {

nlohmann::json patches_to_json(const PatchConfiguration& config) {
  config.validate();
  nlohmann::json patches = nlohmann::json::array();
  for (std::size_t i = 0; i < config.size(); ++i) {
    nlohmann::json vertices = nlohmann::json::array();
    for (const auto& v : config.polygons[i].vertices()) {
      vertices.push_back({units::m_to_um_exact(v.x), units::m_to_um_exact(v.y)});
    }
    patches.push_back({{"parent", config.parents[i]},
                       {"amplitude", config.amplitudes[i]},
                       {"vertices_um", std::move(vertices)}});
  }
  return {{"schema_version", 1},
          {"seed", config.seed},
          {"target_density_per_m2", config.target_density},
          {"patches", std::move(patches)}};
}

PatchConfiguration patches_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != 1) {
      throw Error(ErrorKind::Parse, "unsupported patch schema_version");
    }
    PatchConfiguration config;
    config.seed = doc.at("seed").get<std::uint64_t>();
    config.target_density = doc.at("target_density_per_m2").get<double>();
    for (const auto& p : doc.at("patches")) {
      std::vector<Point2> vertices;
      for (const auto& v : p.at("vertices_um")) {
        vertices.push_back({units::um_to_m(v.at(0).get<double>()),
                            units::um_to_m(v.at(1).get<double>())});
      }
      config.polygons.push_back(Polygon::from_clipped(std::move(vertices)));
      config.parents.push_back(p.at("parent").get<std::string>());
      config.amplitudes.push_back(p.at("amplitude").get<double>());
    }
    config.validate();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("patch configuration: ") + e.what());
  }
}

}  // namespace trapnoise
