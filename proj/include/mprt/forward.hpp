#pragma once

// Outer fixed-point iteration for the semilinear problem: freeze the
// absorption at sigma_a(m_n), solve the linear transport problem, and relax
// toward the new angular mean. The map S preserves [0, sup f], so iterates
// are clamped there; the limit satisfies <u> = m* and the returned u solves
// the linear problem frozen at m*.

#include <optional>
#include <sstream>
#include <vector>

#include "mprt/model.hpp"
#include "mprt/transport.hpp"

namespace mprt {

struct FixedPointConfig {
  double tol_fp = 1e-8;       // on ||S(m_n) - m_n||_inf
  int n_fp = 200;
  double theta = 1.0;         // relaxation in (0,1]
  TransportConfig transport;
  bool warm_start = true;     // reuse the previous inner solution as u_init
};

struct ForwardSolution {
  AngularField u;
  ScalarField m;        // fixed point of S
  ScalarField sigma_a;  // absorption evaluated at m
  std::vector<double> residuals;
  int outer_iterations = 0;
  int theta_halvings = 0;
  int inner_iterations = 0;  // summed source-iteration count
};

inline ForwardSolution fixed_point_solve(const SpatialGrid& g, const AngularQuadrature& ang,
                                         const MPAModel& model, const ScalarField& sigma_s,
                                         const ScatteringModel& K, const BoundarySource& f,
                                         const FixedPointConfig& cfg,
                                         const ScalarField* m0 = nullptr) {
  require(cfg.tol_fp > 0.0, "outer tolerance must be positive");
  require(cfg.theta > 0.0 && cfg.theta <= 1.0, "relaxation parameter must lie in (0,1]");
  require(&model.grid() == &g, "model lives on a different grid");
  check_same_grid(model.sigma(0), sigma_s);

  double fbar = f.upper();
  ScalarField m(g, 0.0);
  if (m0) {
    check_same_grid(*m0, sigma_s);
    m = *m0;
    for (int a = 0; a < m.size(); ++a) m[a] = std::clamp(m[a], 0.0, fbar);
  }

  double theta = cfg.theta;
  int increases = 0, halvings = 0, inner = 0;
  std::vector<double> residuals;
  std::optional<LinearSolveResult> cur;
  double h_ray = resolve_h_ray(g, cfg.transport);

  for (int it = 0; it <= cfg.n_fp; ++it) {
    ScalarField sig_a = model.eval(m);
    ScalarField sig_t = sig_a + sigma_s;
    AttenuationCache cache(g, ang, sig_t, h_ray);
    const AngularField* init = (cfg.warm_start && cur) ? &cur->u : nullptr;
    cur = solve_linear_rte(g, ang, sig_a, sigma_s, K, f, cfg.transport, &cache, init);
    inner += cur->iterations;

    ScalarField s = angular_average(cur->u, ang);
    double res = sup_norm(s - m);
    residuals.push_back(res);
    if (res <= cfg.tol_fp) {
      ForwardSolution out{std::move(cur->u), std::move(m), std::move(sig_a),
                          std::move(residuals), it, halvings, inner};
      // Invariant-set and max-principle bounds on the fixed point, with the
      // same slack the inner solver grants its iterates.
      double lo = f.lower() * std::exp(-g.domain().diameter() * model.growth(fbar)) - 1e-6;
      if (out.m.min() < lo || out.m.max() > fbar + 1e-6) {
        std::ostringstream os;
        os << "fixed point escapes its a-priori bounds: range [" << out.m.min() << ", "
           << out.m.max() << "] vs [" << lo << ", " << fbar + 1e-6 << "]";
        throw numerical_error(os.str());
      }
      return out;
    }

    // Relaxed update, clamped back into the invariant set M = [0, fbar].
    if (residuals.size() >= 2 && res > residuals[residuals.size() - 2]) {
      if (++increases >= 3) {
        theta *= 0.5;
        ++halvings;
        increases = 0;
      }
    } else {
      increases = 0;
    }
    for (int a = 0; a < m.size(); ++a)
      m[a] = std::clamp((1.0 - theta) * m[a] + theta * s[a], 0.0, fbar);
  }

  std::ostringstream os;
  os << "fixed-point iteration did not reach tol " << cfg.tol_fp << " in " << cfg.n_fp
     << " iterations; last residuals:";
  size_t from = residuals.size() > 5 ? residuals.size() - 5 : 0;
  for (size_t i = from; i < residuals.size(); ++i) os << " " << residuals[i];
  throw iteration_error(os.str());
}

// Internal functional H = sigma_a(m*)^q * m*, the data of the inverse
// problem. Strictly positive whenever the boundary source is.
inline ScalarField internal_data(const MPAModel& model, const ForwardSolution& sol) {
  ScalarField H = sol.sigma_a;
  double q = model.q();
  for (int a = 0; a < H.size(); ++a) {
    double base = H[a];
    double p = (q == 1.0) ? base : std::pow(base, q);
    H[a] = p * sol.m[a];
  }
  return H;
}

}  // namespace mprt
