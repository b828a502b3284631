#pragma once

// Midpoint quadrature on the unit circle: theta_j = 2*pi*(j+1/2)/n_v with
// uniform weights 1/n_v. An even n_v keeps the direction set closed under
// v -> -v, which the transport sweeps and the reciprocity checks rely on.

#include <cmath>
#include <vector>

#include "mprt/base.hpp"

namespace mprt {

inline constexpr double pi = 3.14159265358979323846;

class AngularQuadrature {
 public:
  explicit AngularQuadrature(int n_v) : nv_(n_v) {
    require(n_v >= 2, "angular quadrature needs at least two directions");
    require(n_v % 2 == 0, "direction count must be even so the set is closed under v -> -v");
    theta_.resize(nv_);
    dir_.resize(nv_);
    for (int j = 0; j < nv_; ++j) {
      theta_[j] = 2.0 * pi * (j + 0.5) / nv_;
      dir_[j] = {std::cos(theta_[j]), std::sin(theta_[j])};
    }
  }

  int size() const { return nv_; }
  double theta(int j) const { return theta_[j]; }
  Vec2 dir(int j) const { return dir_[j]; }
  double weight(int) const { return 1.0 / nv_; }

  // theta_{j + nv/2} = theta_j + pi exactly for the midpoint family.
  int opposite(int j) const { return (j + nv_ / 2) % nv_; }

 private:
  int nv_;
  std::vector<double> theta_;
  std::vector<Vec2> dir_;
};

}  // namespace mprt
