#pragma once

// Boundary sources and the scattering operator K.

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "mprt/fields.hpp"

namespace mprt {

// Inflow data on the boundary. Pinned between positive bounds
// 0 < f_lo <= f <= f_hi; the solvers' max-principle bounds are phrased in
// terms of these two numbers.
class BoundarySource {
 public:
  static BoundarySource constant(double c) {
    require(c > 0.0, "boundary source must be positive");
    return BoundarySource([c](Vec2, Vec2) { return c; }, c, c);
  }

  // Direction-independent trace f0(x); lo/hi must bound it on the boundary.
  static BoundarySource isotropic(std::function<double(Vec2)> f0, double lo, double hi) {
    require(0.0 < lo && lo <= hi, "boundary source bounds must satisfy 0 < lo <= hi");
    return BoundarySource([f = std::move(f0)](Vec2 x, Vec2) { return f(x); }, lo, hi);
  }

  double operator()(Vec2 x, Vec2 v) const { return f_(x, v); }
  double lower() const { return lo_; }
  double upper() const { return hi_; }

 private:
  BoundarySource(std::function<double(Vec2, Vec2)> f, double lo, double hi)
      : f_(std::move(f)), lo_(lo), hi_(hi) {}

  std::function<double(Vec2, Vec2)> f_;
  double lo_, hi_;
};

// Angular redistribution (K u)(x,v) = sum_k w_k p(v,v') u(x,v'). The kernel
// is nonnegative and row- and column-stochastic under the quadrature
// weights, so K preserves constants and the angular average of K u equals
// the angular average of u.
class ScatteringModel {
 public:
  static ScatteringModel isotropic() { return ScatteringModel(); }

  static ScatteringModel tabulated(Eigen::MatrixXd p, const AngularQuadrature& ang) {
    int n = ang.size();
    require(p.rows() == n && p.cols() == n, "scattering table must be n_v x n_v");
    for (int i = 0; i < n; ++i) {
      double row = 0.0, col = 0.0;
      for (int j = 0; j < n; ++j) {
        require(p(i, j) >= 0.0, "scattering table entries must be nonnegative");
        row += ang.weight(j) * p(i, j);
        col += ang.weight(j) * p(j, i);
      }
      require(std::abs(row - 1.0) <= 1e-12 && std::abs(col - 1.0) <= 1e-12,
              "scattering table rows and columns must average to one");
    }
    ScatteringModel k;
    k.iso_ = false;
    k.p_ = std::move(p);
    return k;
  }

  bool isotropic_kernel() const { return iso_; }

  // Isotropic kernel broadcasts the angular average exactly, so that path
  // shares code with angular_average rather than looping over a table of
  // ones.
  AngularField apply(const AngularField& u, const AngularQuadrature& ang) const {
    require(u.directions() == ang.size(), "angular field and quadrature disagree on direction count");
    if (iso_) return broadcast(angular_average(u, ang), ang.size());
    AngularField r(u.grid(), ang.size());
    int n = ang.size(), cells = u.cells();
    for (int d = 0; d < n; ++d) {
      double* out = r.slice(d);
      for (int k = 0; k < n; ++k) {
        double w = ang.weight(k) * p_(d, k);
        const double* in = u.slice(k);
        for (int a = 0; a < cells; ++a) out[a] += w * in[a];
      }
    }
    return r;
  }

 private:
  ScatteringModel() = default;

  bool iso_ = true;
  Eigen::MatrixXd p_;
};

}  // namespace mprt
