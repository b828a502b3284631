#pragma once

// Scalar fields on active cells and direction-resolved angular fields.
// Both are thin wrappers over contiguous storage; all algebra is pointwise.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "mprt/angular.hpp"
#include "mprt/base.hpp"
#include "mprt/grid.hpp"

namespace mprt {

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(const SpatialGrid& g, double fill = 0.0) : grid_(&g), v_(g.n_active(), fill) {}
  ScalarField(const SpatialGrid& g, const std::function<double(Vec2)>& f) : grid_(&g), v_(g.n_active()) {
    for (int a = 0; a < g.n_active(); ++a) v_[a] = f(g.center(a));
  }

  const SpatialGrid& grid() const {
    if (!grid_) throw validation_error("field has no grid");
    return *grid_;
  }
  int size() const { return static_cast<int>(v_.size()); }
  double& operator[](int a) { return v_[a]; }
  double operator[](int a) const { return v_[a]; }
  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }

 private:
  const SpatialGrid* grid_ = nullptr;
  std::vector<double> v_;
};

inline void check_same_grid(const ScalarField& a, const ScalarField& b) {
  if (&a.grid() != &b.grid() || a.size() != b.size())
    throw validation_error("fields live on different grids");
}

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  check_same_grid(a, b);
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  check_same_grid(a, b);
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  check_same_grid(a, b);
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] *= b[i];
  return r;
}

inline ScalarField operator*(double s, const ScalarField& a) {
  ScalarField r = a;
  for (int i = 0; i < r.size(); ++i) r[i] *= s;
  return r;
}

inline double sup_norm(const ScalarField& a) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

// Discrete L^p norm with cell-area measure h^2 per active cell.
inline double lp_norm(const ScalarField& a, double p) {
  require(p >= 1.0, "Lp norm needs p >= 1");
  if (std::isinf(p)) return sup_norm(a);
  double h2 = a.grid().h() * a.grid().h();
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i]), p) * h2;
  return std::pow(s, 1.0 / p);
}

// Direction-resolved field: n_v contiguous slices of n_active values.
class AngularField {
 public:
  AngularField() = default;
  AngularField(const SpatialGrid& g, int n_v, double fill = 0.0)
      : grid_(&g), nv_(n_v), v_(static_cast<size_t>(n_v) * g.n_active(), fill) {}

  const SpatialGrid& grid() const {
    if (!grid_) throw validation_error("field has no grid");
    return *grid_;
  }
  int directions() const { return nv_; }
  int cells() const { return grid_->n_active(); }

  double* slice(int d) { return v_.data() + static_cast<size_t>(d) * cells(); }
  const double* slice(int d) const { return v_.data() + static_cast<size_t>(d) * cells(); }
  double& at(int d, int a) { return v_[static_cast<size_t>(d) * cells() + a]; }
  double at(int d, int a) const { return v_[static_cast<size_t>(d) * cells() + a]; }
  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }

 private:
  const SpatialGrid* grid_ = nullptr;
  int nv_ = 0;
  std::vector<double> v_;
};

inline double sup_norm(const AngularField& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

inline double sup_diff(const AngularField& a, const AngularField& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Normalized angular mean, sum_j w_j u(.,v_j) with sum w_j = 1. Its value
// lies between the directional min and max at every cell.
inline ScalarField angular_average(const AngularField& u, const AngularQuadrature& ang) {
  require(u.directions() == ang.size(), "angular field and quadrature disagree on direction count");
  ScalarField m(u.grid(), 0.0);
  for (int d = 0; d < ang.size(); ++d) {
    const double* s = u.slice(d);
    double w = ang.weight(d);
    for (int a = 0; a < m.size(); ++a) m[a] += w * s[a];
  }
  return m;
}

inline AngularField broadcast(const ScalarField& m, int n_v) {
  AngularField u(m.grid(), n_v);
  for (int d = 0; d < n_v; ++d) std::copy(m.data().begin(), m.data().end(), u.slice(d));
  return u;
}

}  // namespace mprt
