#pragma once

// Diffusive scaling: absorption shrinks by eps while scattering grows by
// 1/eps, keeping the optical thickness of the domain fixed at order 1/eps.

#include "mprt/elliptic.hpp"
#include "mprt/fields.hpp"

namespace mprt {

struct ScaledCoefficients {
  double eps;
  ScalarField sigma_a;  // base, >= 0
  ScalarField sigma_s;  // base, strictly positive

  ScaledCoefficients(double e, ScalarField sa, ScalarField ss)
      : eps(e), sigma_a(std::move(sa)), sigma_s(std::move(ss)) {
    require(eps > 0.0, "scaling parameter must be positive");
    check_same_grid(sigma_a, sigma_s);
    if (sigma_a.min() < 0.0) throw model_error("base absorption must be nonnegative");
    if (sigma_s.min() <= 0.0)
      throw model_error("base scattering must be strictly positive under the diffusive scaling");
  }

  // Derived fields are recomputed at each call so they can never go stale.
  ScalarField sigma_a_eps() const { return eps * sigma_a; }
  ScalarField sigma_s_eps() const { return (1.0 / eps) * sigma_s; }
  ScalarField sigma_t_eps() const { return sigma_a_eps() + sigma_s_eps(); }
};

// Principal eigenpair of -div((1/(2 sigma_t_eps)) grad .), the elliptic
// operator whose eigenvalue lambda_eps matches the Peierls gap at order
// eps^2. The 2 is the space dimension entering the diffusion coefficient.
inline EigenPair eigenpair_scaled(const SpatialGrid& g, const ScaledCoefficients& c) {
  ScalarField st = c.sigma_t_eps();
  ScalarField D(g, 0.0);
  for (int a = 0; a < D.size(); ++a) D[a] = 1.0 / (2.0 * st[a]);
  return dirichlet_eigenpair(g, D);
}

// Companion limit operator with sigma_t_eps replaced by the base sigma_s,
// i.e. -div((1/(2 sigma_s)) grad .). Its eigenvalue is the limit of
// lambda_eps/eps as eps -> 0.
inline EigenPair eigenpair_limit(const SpatialGrid& g, const ScalarField& sigma_s) {
  if (sigma_s.min() <= 0.0) throw model_error("limit operator needs strictly positive scattering");
  ScalarField D(g, 0.0);
  for (int a = 0; a < D.size(); ++a) D[a] = 1.0 / (2.0 * sigma_s[a]);
  return dirichlet_eigenpair(g, D);
}

}  // namespace mprt
