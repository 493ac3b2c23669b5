#include "trapnoise/error.hpp"
#include "trapnoise/geometry.hpp"
#include "trapnoise/units.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace trapnoise {

TrapGeometry geometry_from_json(const nlohmann::json& doc) {
  try {
    if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != 1) {
      throw Error(ErrorKind::Parse, "unsupported geometry schema_version");
    }
    std::vector<Electrode> electrodes;
    for (const auto& item : doc.at("electrodes")) {
      std::vector<Point2> vertices;
      for (const auto& xy : item.at("vertices_um")) {
        if (xy.size() != 2) throw Error(ErrorKind::Parse, "vertex must be [x, y]");
        vertices.push_back({units::um_to_m(xy[0].get<double>()),
                            units::um_to_m(xy[1].get<double>())});
      }
      const auto name = item.at("name").get<std::string>();
      try {
        electrodes.push_back({name, Polygon(std::move(vertices))});
      } catch (const Error& e) {
        throw Error(e.kind(), "electrode '" + name + "': " + e.what());
      }
    }
    return TrapGeometry(std::move(electrodes), units::um_to_m(doc.at("gap_width_um").get<double>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("geometry document: ") + e.what());
  }
}

nlohmann::json geometry_to_json(const TrapGeometry& geometry) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["gap_width_um"] = units::m_to_um_exact(geometry.gap_width());
  auto& list = doc["electrodes"] = nlohmann::json::array();
  for (const auto& e : geometry.electrodes()) {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& p : e.shape.vertices()) {
      verts.push_back({units::m_to_um_exact(p.x), units::m_to_um_exact(p.y)});
    }
    list.push_back({{"name", e.name}, {"vertices_um", std::move(verts)}});
  }
  return doc;
}

TrapGeometry load_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open geometry file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "geometry file '" + path + "': " + e.what());
  }
  return geometry_from_json(doc);
}

}  // namespace trapnoise
