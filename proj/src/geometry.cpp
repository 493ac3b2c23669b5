#include "trapnoise/geometry.hpp"

#include "trapnoise/error.hpp"
#include "trapnoise/units.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

namespace trapnoise {

namespace {

struct Vec3 {
  double x, y, z;
};

inline Vec3 sub(Point3 p, Point2 v) { return {p.x - v.x, p.y - v.y, p.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void require_above_plane(Point3 point) {
  if (!(point.z > 0.0) || !std::isfinite(point.x) || !std::isfinite(point.y) ||
      !std::isfinite(point.z)) {
    throw Error(ErrorKind::Domain, "observation point must have finite coordinates and z > 0");
  }
}

double cross2(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool segments_cross_properly(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double d1 = cross2(c, d, a);
  const double d2 = cross2(c, d, b);
  const double d3 = cross2(a, b, c);
  const double d4 = cross2(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

std::vector<Point2> drop_repeated(std::vector<Point2> v) {
  std::vector<Point2> out;
  out.reserve(v.size());
  for (const auto& p : v) {
    if (!out.empty() && out.back().x == p.x && out.back().y == p.y) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && out.front().x == out.back().x && out.front().y == out.back().y) {
    out.pop_back();
  }
  return out;
}

// Points guaranteed (for star-shaped polygons) or likely (otherwise) to be
// interior: centroids of positively oriented fan triangles.
std::vector<Point2> interior_samples(const Polygon& p) {
  std::vector<Point2> out;
  const auto& v = p.vertices();
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (cross2(v[0], v[i], v[i + 1]) <= 0.0) continue;
    Point2 c{(v[0].x + v[i].x + v[i + 1].x) / 3.0, (v[0].y + v[i].y + v[i + 1].y) / 3.0};
    if (p.contains(c)) out.push_back(c);
  }
  return out;
}

}  // namespace

double FieldVector::component(ModeDirection direction) const {
  switch (direction) {
    case ModeDirection::PlanarX: return x;
    case ModeDirection::PlanarY: return y;
    case ModeDirection::Normal: return z;
  }
  return 0.0;
}

double SpectralDensityVector::component(ModeDirection direction) const {
  switch (direction) {
    case ModeDirection::PlanarX: return x;
    case ModeDirection::PlanarY: return y;
    case ModeDirection::Normal: return z;
  }
  return 0.0;
}

SpectralDensityVector noise_from_field(const FieldVector& e, double amplitude) {
  const double a2 = amplitude * amplitude;
  return {a2 * e.x * e.x, a2 * e.y * e.y, a2 * e.z * e.z};
}

// ---------------------------------------------------------------------------
// Polygon

double signed_area(std::span<const Point2> v) {
  double twice = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    twice += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return 0.5 * twice;
}

bool is_simple(std::span<const Point2> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Point2 c = v[j];
      const Point2 d = v[(j + 1) % n];
      if (segments_cross_properly(a, b, c, d)) return false;
    }
  }
  // Non-adjacent vertices must be distinct.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (v[i].x == v[j].x && v[i].y == v[j].y) return false;
    }
  }
  return true;
}

Polygon::Polygon(std::vector<Point2> vertices) : Polygon(drop_repeated(std::move(vertices)), Unchecked{}) {
  if (!is_simple(vertices_)) {
    throw Error(ErrorKind::InvalidGeometry, "polygon is self-intersecting");
  }
}

Polygon::Polygon(std::vector<Point2> vertices, Unchecked) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) {
    throw Error(ErrorKind::InvalidGeometry, "polygon needs at least three distinct vertices");
  }
  for (const auto& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::InvalidGeometry, "polygon vertex is not finite");
    }
  }
  area_ = signed_area(vertices_);
  if (!(area_ > 0.0)) {
    throw Error(ErrorKind::InvalidGeometry,
                "polygon must be counter-clockwise with positive area");
  }
}

Polygon Polygon::from_clipped(std::vector<Point2> vertices) {
  return Polygon(drop_repeated(std::move(vertices)), Unchecked{});
}

Polygon Polygon::rectangle(double xmin, double xmax, double ymin, double ymax) {
  return Polygon({{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}});
}

Point2 Polygon::centroid() const {
  double cx = 0.0, cy = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double w = vertices_[j].x * vertices_[i].y - vertices_[i].x * vertices_[j].y;
    cx += (vertices_[j].x + vertices_[i].x) * w;
    cy += (vertices_[j].y + vertices_[i].y) * w;
  }
  return {cx / (6.0 * area_), cy / (6.0 * area_)};
}

BoundingBox Polygon::bounds() const {
  BoundingBox b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : vertices_) {
    b.xmin = std::min(b.xmin, p.x);
    b.xmax = std::max(b.xmax, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

bool Polygon::contains(Point2 p) const {
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = vertices_[i];
    const Point2 b = vertices_[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool Polygon::is_convex() const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross2(vertices_[i], vertices_[(i + 1) % n], vertices_[(i + 2) % n]) < 0.0) return false;
  }
  return true;
}

bool interiors_overlap(const Polygon& a, const Polygon& b) {
  if (!a.bounds().overlaps(b.bounds())) return false;
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  for (std::size_t i = 0; i < va.size(); ++i) {
    for (std::size_t j = 0; j < vb.size(); ++j) {
      if (segments_cross_properly(va[i], va[(i + 1) % va.size()], vb[j],
                                  vb[(j + 1) % vb.size()])) {
        return true;
      }
    }
  }
  for (const auto& p : interior_samples(a)) {
    if (b.contains(p)) return true;
  }
  for (const auto& p : interior_samples(b)) {
    if (a.contains(p)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// TrapGeometry

TrapGeometry::TrapGeometry(std::vector<Electrode> electrodes, double gap_width)
    : electrodes_(std::move(electrodes)), gap_width_(gap_width) {
  if (electrodes_.empty()) {
    throw Error(ErrorKind::InvalidGeometry, "geometry has no electrodes");
  }
  if (!(gap_width_ >= 0.0)) {
    throw Error(ErrorKind::InvalidGeometry, "gap width must be non-negative");
  }
  std::set<std::string> names;
  for (const auto& e : electrodes_) {
    if (e.name.empty()) throw Error(ErrorKind::InvalidGeometry, "electrode name is empty");
    if (!names.insert(e.name).second) {
      throw Error(ErrorKind::InvalidGeometry, "duplicate electrode name '" + e.name + "'");
    }
  }
  for (std::size_t i = 0; i < electrodes_.size(); ++i) {
    for (std::size_t j = i + 1; j < electrodes_.size(); ++j) {
      if (interiors_overlap(electrodes_[i].shape, electrodes_[j].shape)) {
        throw Error(ErrorKind::InvalidGeometry,
                    "electrodes '" + electrodes_[i].name + "' and '" + electrodes_[j].name +
                        "' overlap");
      }
    }
  }
}

std::size_t TrapGeometry::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < electrodes_.size(); ++i) {
    if (electrodes_[i].name == name) return i;
  }
  throw Error(ErrorKind::UnknownElectrode, "unknown electrode '" + std::string(name) + "'");
}

const Electrode& TrapGeometry::electrode(std::string_view name) const {
  return electrodes_[index_of(name)];
}

BoundingBox TrapGeometry::bounds() const {
  BoundingBox b = electrodes_.front().shape.bounds();
  for (const auto& e : electrodes_) {
    const BoundingBox eb = e.shape.bounds();
    b.xmin = std::min(b.xmin, eb.xmin);
    b.xmax = std::max(b.xmax, eb.xmax);
    b.ymin = std::min(b.ymin, eb.ymin);
    b.ymax = std::max(b.ymax, eb.ymax);
  }
  return b;
}

double TrapGeometry::total_area() const {
  double a = 0.0;
  for (const auto& e : electrodes_) a += e.shape.area();
  return a;
}

// ---------------------------------------------------------------------------
// Electrostatics

double solid_angle(const Polygon& polygon, Point3 point) {
  const auto& v = polygon.vertices();
  const Vec3 r0 = sub(point, v[0]);
  const double n0 = norm(r0);
  double omega = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const Vec3 r1 = sub(point, v[i]);
    const Vec3 r2 = sub(point, v[i + 1]);
    const double n1 = norm(r1);
    const double n2 = norm(r2);
    // Van Oosterom-Strackee. Vectors here point from the vertices to the
    // observer, so a counter-clockwise triangle seen from above gives a
    // positive triple product.
    const double numer = dot(r0, cross(r1, r2));
    const double denom = n0 * n1 * n2 + dot(r0, r1) * n2 + dot(r0, r2) * n1 + dot(r1, r2) * n0;
    omega += 2.0 * std::atan2(numer, denom);
  }
  return omega;
}

FieldVector solid_angle_gradient(const Polygon& polygon, Point3 point) {
  // grad Omega = -sum over edges of the Biot-Savart segment integral
  //   (e x r_a) (|r_a| + |r_b|) / (|r_a| |r_b| (|r_a| |r_b| + r_a . r_b))
  // with e the edge vector and r_a, r_b pointing from its ends to the observer.
  const auto& v = polygon.vertices();
  const std::size_t n = v.size();
  double gx = 0.0, gy = 0.0, gz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % n];
    const Vec3 ra = sub(point, a);
    const Vec3 rb = sub(point, b);
    const double na = norm(ra);
    const double nb = norm(rb);
    const Vec3 e{b.x - a.x, b.y - a.y, 0.0};
    const Vec3 c = cross(e, ra);
    const double s = (na + nb) / (na * nb * (na * nb + dot(ra, rb)));
    gx -= c.x * s;
    gy -= c.y * s;
    gz -= c.z * s;
  }
  return {gx, gy, gz};
}

double potential_above_polygon(const Polygon& polygon, Point3 point, double volts) {
  require_above_plane(point);
  return volts * solid_angle(polygon, point) / (2.0 * units::kPi);
}

FieldVector field_above_polygon(const Polygon& polygon, Point3 point, double volts) {
  require_above_plane(point);
  const FieldVector g = solid_angle_gradient(polygon, point);
  return g * (-volts / (2.0 * units::kPi));
}

namespace {

struct RectCorner {
  double dx, dy;
  double sign;
};

std::array<RectCorner, 4> rect_corners(double xmin, double xmax, double ymin, double ymax,
                                       Point3 p) {
  return {{{xmax - p.x, ymax - p.y, 1.0},
           {xmin - p.x, ymax - p.y, -1.0},
           {xmax - p.x, ymin - p.y, -1.0},
           {xmin - p.x, ymin - p.y, 1.0}}};
}

void require_rectangle(double xmin, double xmax, double ymin, double ymax) {
  if (!(xmax > xmin) || !(ymax > ymin)) {
    throw Error(ErrorKind::InvalidGeometry, "degenerate rectangle");
  }
}

}  // namespace

double rectangle_potential(double xmin, double xmax, double ymin, double ymax, Point3 point,
                           double volts) {
  require_above_plane(point);
  require_rectangle(xmin, xmax, ymin, ymax);
  const double z = point.z;
  double sum = 0.0;
  for (const auto& c : rect_corners(xmin, xmax, ymin, ymax, point)) {
    const double r = std::sqrt(c.dx * c.dx + c.dy * c.dy + z * z);
    sum += c.sign * std::atan(c.dx * c.dy / (z * r));
  }
  return volts * sum / (2.0 * units::kPi);
}

FieldVector rectangle_field(double xmin, double xmax, double ymin, double ymax, Point3 point,
                            double volts) {
  require_above_plane(point);
  require_rectangle(xmin, xmax, ymin, ymax);
  const double z = point.z;
  const double z2 = z * z;
  FieldVector e;
  for (const auto& c : rect_corners(xmin, xmax, ymin, ymax, point)) {
    const double x2 = c.dx * c.dx;
    const double y2 = c.dy * c.dy;
    const double r = std::sqrt(x2 + y2 + z2);
    e.x += c.sign * c.dy * z / (r * (x2 + z2));
    e.y += c.sign * c.dx * z / (r * (y2 + z2));
    e.z += c.sign * c.dx * c.dy * (x2 + y2 + 2.0 * z2) / (r * (x2 + z2) * (y2 + z2));
  }
  return e * (volts / (2.0 * units::kPi));
}

std::vector<FieldVector> basis_fields(const TrapGeometry& geometry, Point3 point) {
  require_above_plane(point);
  std::vector<FieldVector> out;
  out.reserve(geometry.size());
  for (const auto& e : geometry.electrodes()) {
    out.push_back(field_above_polygon(e.shape, point, 1.0));
  }
  return out;
}

std::map<std::string, FieldVector> electrode_basis_fields(const TrapGeometry& geometry,
                                                          Point3 point) {
  const auto fields = basis_fields(geometry, point);
  std::map<std::string, FieldVector> out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out.emplace(geometry.electrodes()[i].name, fields[i]);
  }
  return out;
}

std::vector<double> basis_potentials(const TrapGeometry& geometry, Point3 point) {
  require_above_plane(point);
  std::vector<double> out;
  out.reserve(geometry.size());
  for (const auto& e : geometry.electrodes()) {
    out.push_back(potential_above_polygon(e.shape, point, 1.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Default geometry
//
// Coordinates in micrometres; the trap is mirror-symmetric under x -> -x. The
// centre electrode DC9 sits 10 um below the RF null (the default ion axis), so
// it contributes a planar y field at the ion as the measured trap does.
//
//   DC1 | DC2            y in [ 210,  450]
//   DC4 RF1 | RF2 DC6    y in [  90,  190]   (DC4/DC6 span y in [-190, 190])
//   DC4 DC3 DC9 DC5 DC6  y in [ -70,   70]   (DC9: y in [-70, 50])
//   DC4 RF3 | RF4 DC6    y in [-190,  -90]
//   DC7 | DC8            y in [-450, -210]

TrapGeometry default_trap_geometry() {
  const auto rect = [](double x0, double x1, double y0, double y1) {
    using units::um_to_m;
    return Polygon::rectangle(um_to_m(x0), um_to_m(x1), um_to_m(y0), um_to_m(y1));
  };
  std::vector<Electrode> e;
  e.push_back({"DC1", rect(-450, -10, 210, 450)});
  e.push_back({"DC2", rect(10, 450, 210, 450)});
  e.push_back({"DC3", rect(-170, -70, -70, 70)});
  e.push_back({"DC4", rect(-450, -190, -190, 190)});
  e.push_back({"DC5", rect(70, 170, -70, 70)});
  e.push_back({"DC6", rect(190, 450, -190, 190)});
  e.push_back({"DC7", rect(-450, -10, -450, -210)});
  e.push_back({"DC8", rect(10, 450, -450, -210)});
  e.push_back({"DC9", rect(-50, 50, -70, 50)});
  e.push_back({"RF1", rect(-170, -10, 90, 190)});
  e.push_back({"RF2", rect(10, 170, 90, 190)});
  e.push_back({"RF3", rect(-170, -10, -190, -90)});
  e.push_back({"RF4", rect(10, 170, -190, -90)});
  return TrapGeometry(std::move(e), units::um_to_m(20.0));
}

}  // namespace trapnoise
