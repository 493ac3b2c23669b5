#pragma once

// Planar electrode geometry and the gapless-plane electrostatics above it.
//
// Each electrode is treated as a polygon held at a fixed potential inside an
// otherwise grounded, infinite z = 0 plane. The Dirichlet half-space solution
// for that boundary value problem is
//
//   phi(P) = V * Omega(P) / (2 pi),
//
// with Omega the solid angle the polygon subtends at P. Omega is summed over a
// fan of signed triangles (exact for any simple polygon), and its gradient is
// evaluated as the Biot-Savart line integral of a unit current around the
// polygon boundary, so the field needs no numerical differentiation.

#include "trapnoise/core.hpp"

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

namespace trapnoise {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct FieldVector {
  double x = 0.0;  // V/m
  double y = 0.0;
  double z = 0.0;

  double component(ModeDirection direction) const;
  FieldVector& operator+=(const FieldVector& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  FieldVector operator*(double s) const { return {x * s, y * s, z * s}; }
};

// Component-wise squared field, summed over independent noise sources.
struct SpectralDensityVector {
  double x = 0.0;  // V^2 m^-2 Hz^-1
  double y = 0.0;
  double z = 0.0;

  double component(ModeDirection direction) const;
  SpectralDensityVector& operator+=(const SpectralDensityVector& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

// a^2 * (Ex^2, Ey^2, Ez^2)
SpectralDensityVector noise_from_field(const FieldVector& unit_field, double amplitude);

struct BoundingBox {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool overlaps(const BoundingBox& o) const {
    return xmin < o.xmax && o.xmin < xmax && ymin < o.ymax && o.ymin < ymax;
  }
};

// Simple counter-clockwise polygon in the z = 0 plane.
class Polygon {
 public:
  Polygon() = default;
  // Validates: >= 3 vertices, finite coordinates, counter-clockwise with
  // positive area, no self-intersection. Consecutive duplicate vertices are
  // dropped first.
  explicit Polygon(std::vector<Point2> vertices);

  // Skips the O(n^2) simplicity check. For polygons produced by clipping a
  // valid polygon against a convex window, which cannot self-intersect.
  static Polygon from_clipped(std::vector<Point2> vertices);

  static Polygon rectangle(double xmin, double xmax, double ymin, double ymax);

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  double area() const { return area_; }
  Point2 centroid() const;
  BoundingBox bounds() const;
  bool contains(Point2 p) const;  // boundary points count as outside
  bool is_convex() const;

 private:
  struct Unchecked {};
  Polygon(std::vector<Point2> vertices, Unchecked);

  std::vector<Point2> vertices_;
  double area_ = 0.0;
};

double signed_area(std::span<const Point2> vertices);
bool is_simple(std::span<const Point2> vertices);
// True when the two polygons share interior points.
bool interiors_overlap(const Polygon& a, const Polygon& b);

struct Electrode {
  std::string name;
  Polygon shape;
};

class TrapGeometry {
 public:
  TrapGeometry() = default;
  // Validates unique names and pairwise disjoint interiors.
  TrapGeometry(std::vector<Electrode> electrodes, double gap_width);

  const std::vector<Electrode>& electrodes() const { return electrodes_; }
  std::size_t size() const { return electrodes_.size(); }
  double gap_width() const { return gap_width_; }
  // Throws UnknownElectrode.
  std::size_t index_of(std::string_view name) const;
  const Electrode& electrode(std::string_view name) const;
  BoundingBox bounds() const;
  double total_area() const;

 private:
  std::vector<Electrode> electrodes_;
  double gap_width_ = 0.0;
};

// Solid angle (sr) subtended by the polygon at `point`; positive for z > 0.
double solid_angle(const Polygon& polygon, Point3 point);
// d(Omega)/d(point)
FieldVector solid_angle_gradient(const Polygon& polygon, Point3 point);

// z <= 0 throws Domain.
double potential_above_polygon(const Polygon& polygon, Point3 point, double volts);
FieldVector field_above_polygon(const Polygon& polygon, Point3 point, double volts);

// Closed-form corner arctangent expressions for the axis-aligned rectangle
// [xmin, xmax] x [ymin, ymax]; independent of the polygon route above.
double rectangle_potential(double xmin, double xmax, double ymin, double ymax, Point3 point,
                           double volts);
FieldVector rectangle_field(double xmin, double xmax, double ymin, double ymax, Point3 point,
                            double volts);

// Unit-potential field of every electrode, in geometry order.
std::vector<FieldVector> basis_fields(const TrapGeometry& geometry, Point3 point);
std::map<std::string, FieldVector> electrode_basis_fields(const TrapGeometry& geometry,
                                                          Point3 point);
std::vector<double> basis_potentials(const TrapGeometry& geometry, Point3 point);

// Built-in approximation of a four-RF-electrode surface trap: centre DC9,
// diagonal RF1-RF4, outer DC1-DC8, 20 um trenches. Matches
// data/default_trap.json.
TrapGeometry default_trap_geometry();

// Geometry documents: {"schema_version": 1, "gap_width_um": ..,
//   "electrodes": [{"name": .., "vertices_um": [[x, y], ...]}, ...]}
TrapGeometry geometry_from_json(const nlohmann::json& doc);
nlohmann::json geometry_to_json(const TrapGeometry& geometry);
TrapGeometry load_geometry(const std::string& path);

}  // namespace trapnoise
