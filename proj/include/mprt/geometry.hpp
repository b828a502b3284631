#pragma once

// Convex domains (unit disk, axis-aligned rectangle) and ray exit distances.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mprt/base.hpp"

namespace mprt {

enum class Shape { unit_disk, rectangle };

class Domain {
 public:
  static Domain unit_disk() { return Domain(Shape::unit_disk, 1.0, 1.0); }

  static Domain rectangle(double width, double height) {
    require(width > 0.0 && height > 0.0, "rectangle dimensions must be positive");
    return Domain(Shape::rectangle, 0.5 * width, 0.5 * height);
  }

  Shape shape() const { return shape_; }

  // Half-extents of the bounding box [-hx,hx] x [-hy,hy].
  double half_x() const { return hx_; }
  double half_y() const { return hy_; }

  double diameter() const {
    if (shape_ == Shape::unit_disk) return 2.0;
    return 2.0 * std::hypot(hx_, hy_);
  }

  double area() const {
    if (shape_ == Shape::unit_disk) return 4.0 * std::atan(1.0);
    return 4.0 * hx_ * hy_;
  }

  bool contains(Vec2 p) const {
    if (shape_ == Shape::unit_disk) return dot(p, p) < 1.0;
    return std::abs(p.x) < hx_ && std::abs(p.y) < hy_;
  }

  // Distance from an interior point to the boundary.
  double boundary_distance(Vec2 p) const {
    if (shape_ == Shape::unit_disk) return 1.0 - norm(p);
    return std::min(hx_ - std::abs(p.x), hy_ - std::abs(p.y));
  }

  // Travel distance backward along v until the boundary: x - tau*v lies on
  // the boundary. For the disk, tau = x.v + sqrt((x.v)^2 + 1 - |x|^2); the
  // sign twin -(x.v) + sqrt(...) is the exit distance forward along +v.
  double exit_distance(Vec2 x, Vec2 v) const {
    if (!contains(x)) throw mprt::domain_error("exit_distance: point is not interior");
    if (shape_ == Shape::unit_disk) {
      double xv = dot(x, v);
      double disc = xv * xv + 1.0 - dot(x, x);
      return xv + std::sqrt(std::max(disc, 0.0));
    }
    double tau = std::numeric_limits<double>::infinity();
    if (v.x > 0.0)
      tau = std::min(tau, (x.x + hx_) / v.x);
    else if (v.x < 0.0)
      tau = std::min(tau, (x.x - hx_) / v.x);
    if (v.y > 0.0)
      tau = std::min(tau, (x.y + hy_) / v.y);
    else if (v.y < 0.0)
      tau = std::min(tau, (x.y - hy_) / v.y);
    return tau;
  }

  // Exit distance forward along +v; exit_distance(x,v) + forward_exit(x,v)
  // is the chord length through x in direction v.
  double forward_exit(Vec2 x, Vec2 v) const { return exit_distance(x, -v); }

  Vec2 outward_normal(Vec2 b) const {
    if (shape_ == Shape::unit_disk) {
      double r = norm(b);
      if (r == 0.0) throw mprt::domain_error("outward_normal: origin is not on the boundary");
      return {b.x / r, b.y / r};
    }
    // Nearest face wins; corners resolve to the x face.
    if (hx_ - std::abs(b.x) <= hy_ - std::abs(b.y)) return {b.x >= 0.0 ? 1.0 : -1.0, 0.0};
    return {0.0, b.y >= 0.0 ? 1.0 : -1.0};
  }

 private:
  Domain(Shape s, double hx, double hy) : shape_(s), hx_(hx), hy_(hy) {}

  Shape shape_;
  double hx_, hy_;
};

}  // namespace mprt
