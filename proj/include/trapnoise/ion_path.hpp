#pragma once

#include "trapnoise/error.hpp"
#include "trapnoise/geometry.hpp"

#include <functional>
#include <utility>

namespace trapnoise {

// Ion position as a function of ion-surface distance d. The z coordinate must
// equal d.
class IonPath {
 public:
  // Straight line normal to the surface through (x, y).
  static IonPath vertical(double x = 0.0, double y = 0.0) {
    return IonPath([x, y](double d) { return Point3{x, y, d}; });
  }

  explicit IonPath(std::function<Point3(double)> curve) : curve_(std::move(curve)) {}

  Point3 operator()(double d) const {
    if (!(d > 0.0)) throw Error(ErrorKind::Domain, "ion-surface distance must be positive");
    const Point3 p = curve_(d);
    if (p.z != d) throw Error(ErrorKind::Domain, "ion path z coordinate must equal the distance");
    return p;
  }

 private:
  std::function<Point3(double)> curve_;
};

}  // namespace trapnoise
