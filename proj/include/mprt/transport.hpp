#pragma once

// Long-characteristic transport: attenuation line integrals, the boundary
// sweep u = E(tau)*f + int E*q ds, and source iteration for the linear
// problem v.grad(u) + sigma_t u = sigma_s K u, u = f on the inflow boundary.
//
// Every path integral in the project (sweeps, the attenuation cache, the
// kernel assembly in peierls.hpp) goes through ray_profile below, so the
// composite-trapezoid rule and its sampling cadence are shared exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "mprt/angular.hpp"
#include "mprt/fields.hpp"
#include "mprt/scattering.hpp"

namespace mprt {

namespace detail {

inline int ray_samples(double s, double h_ray) {
  return std::max(1, static_cast<int>(std::ceil(s / h_ray - 1e-12)));
}

// Marches backward from x along v to distance s in S = ray_samples(s,h_ray)
// equal steps, accumulating prefix trapezoid integrals of the extended
// sigma_t buffer. E[k] = exp(-int_0^{k*delta} sigma_t(x - t v) dt), k=0..S.
// Returns S.
inline int ray_profile(const SpatialGrid& g, const std::vector<double>& sigt_full, Vec2 x, Vec2 v,
                       double s, double h_ray, std::vector<double>& E, double& delta) {
  int S = ray_samples(s, h_ray);
  delta = s / S;
  E.resize(S + 1);
  E[0] = 1.0;
  double integral = 0.0;
  double prev = g.bilinear(sigt_full, x);
  for (int k = 1; k <= S; ++k) {
    Vec2 p = x - (k * delta) * v;
    double cur = g.bilinear(sigt_full, p);
    integral += 0.5 * delta * (prev + cur);
    E[k] = std::exp(-integral);
    prev = cur;
  }
  return S;
}

// Same march and accumulation order as ray_profile, returning only the full
// integral. exp(-ray_integral(...)) therefore reproduces ray_profile's E[S]
// bit for bit; single-point attenuation queries use this to skip the prefix
// exponentials.
inline double ray_integral(const SpatialGrid& g, const std::vector<double>& sigt_full, Vec2 x,
                           Vec2 v, double s, double h_ray) {
  int S = ray_samples(s, h_ray);
  double delta = s / S;
  double integral = 0.0;
  double prev = g.bilinear(sigt_full, x);
  for (int k = 1; k <= S; ++k) {
    Vec2 p = x - (k * delta) * v;
    double cur = g.bilinear(sigt_full, p);
    integral += 0.5 * delta * (prev + cur);
    prev = cur;
  }
  return integral;
}

}  // namespace detail

// Total cross-section bound to a grid with its extended buffer prebuilt;
// answers attenuation queries along arbitrary rays.
class AttenuationField {
 public:
  AttenuationField(const ScalarField& sigma_t, double h_ray)
      : grid_(&sigma_t.grid()), h_ray_(h_ray) {
    require(h_ray > 0.0, "ray step must be positive");
    grid_->scatter_extended(sigma_t.data().data(), full_);
  }

  const SpatialGrid& grid() const { return *grid_; }
  double h_ray() const { return h_ray_; }
  const std::vector<double>& extended() const { return full_; }

  // exp(-int_0^s sigma_t(x - t v) dt) for an interior x and unit v,
  // 0 <= s <= exit_distance(x, v).
  double attenuation(Vec2 x, Vec2 v, double s) const {
    if (s < 0.0) throw mprt::domain_error("attenuation: negative path length");
    if (s == 0.0) return 1.0;
    double tau = grid_->domain().exit_distance(x, v);
    if (s > tau * (1.0 + 1e-9) + 1e-12)
      throw mprt::domain_error("attenuation: path extends past the domain boundary");
    return std::exp(-detail::ray_integral(*grid_, full_, x, v, s, h_ray_));
  }

 private:
  const SpatialGrid* grid_;
  double h_ray_;
  std::vector<double> full_;
};

inline double attenuation(Vec2 x, Vec2 v, double s, const ScalarField& sigma_t, double h_ray) {
  return AttenuationField(sigma_t, h_ray).attenuation(x, v, s);
}

struct TransportConfig {
  double h_ray = 0.0;     // 0 resolves to half the grid spacing
  double tol_si = 1e-8;   // relative sup-norm change between source iterates
  int n_si = 50;          // iteration cap; scaled runs need roughly 50/eps^2
  bool cache_rays = true; // build an attenuation cache when none is supplied
};

inline double resolve_h_ray(const SpatialGrid& g, const TransportConfig& cfg) {
  return cfg.h_ray > 0.0 ? cfg.h_ray : 0.5 * g.h();
}

// Exit-ray attenuation profiles for every (direction, cell) pair, stored so
// repeated sweeps against a fixed sigma_t reuse the prefix integrals. The
// stored values are produced by the same ray_profile call a cache-less sweep
// makes, hence bit-identical to fresh computation.
class AttenuationCache {
 public:
  AttenuationCache(const SpatialGrid& g, const AngularQuadrature& ang, const ScalarField& sigma_t,
                   double h_ray)
      : grid_(&g), nv_(ang.size()), h_ray_(h_ray), sigt_(sigma_t.data()) {
    check_same_grid(ScalarField(g), sigma_t);
    g.scatter_extended(sigma_t.data().data(), full_);
    int n = g.n_active();
    size_t slots = static_cast<size_t>(nv_) * n;
    offset_.resize(slots + 1);
    count_.resize(slots);
    delta_.resize(slots);
    tau_.resize(slots);

    // Sizing pass so each direction can fill its span independently.
    offset_[0] = 0;
    for (int d = 0; d < nv_; ++d) {
      Vec2 v = ang.dir(d);
      for (int a = 0; a < n; ++a) {
        double tau = g.domain().exit_distance(g.center(a), v);
        size_t s = static_cast<size_t>(d) * n + a;
        count_[s] = detail::ray_samples(tau, h_ray);
        tau_[s] = tau;
        offset_[s + 1] = offset_[s] + count_[s] + 1;
      }
    }
    e_.resize(offset_.back());
    parallel_for(nv_, [&](int d) {
      std::vector<double> E;
      Vec2 v = ang.dir(d);
      for (int a = 0; a < n; ++a) {
        size_t s = static_cast<size_t>(d) * n + a;
        double delta;
        int S = detail::ray_profile(g, full_, g.center(a), v, tau_[s], h_ray_, E, delta);
        delta_[s] = delta;
        std::copy(E.begin(), E.end(), e_.begin() + offset_[s]);
        (void)S;
      }
    });
  }

  const SpatialGrid& grid() const { return *grid_; }
  int directions() const { return nv_; }
  double h_ray() const { return h_ray_; }
  const std::vector<double>& extended() const { return full_; }

  bool matches(const ScalarField& sigma_t) const {
    if (sigma_t.size() != static_cast<int>(sigt_.size())) return false;
    for (int a = 0; a < sigma_t.size(); ++a)
      if (sigma_t[a] != sigt_[a]) return false;
    return true;
  }

  int samples(int d, int a) const { return count_[slot(d, a)]; }
  double delta(int d, int a) const { return delta_[slot(d, a)]; }
  double tau(int d, int a) const { return tau_[slot(d, a)]; }
  const double* profile(int d, int a) const { return e_.data() + offset_[slot(d, a)]; }

 private:
  size_t slot(int d, int a) const { return static_cast<size_t>(d) * grid_->n_active() + a; }

  const SpatialGrid* grid_;
  int nv_;
  double h_ray_;
  std::vector<double> sigt_, full_;
  std::vector<size_t> offset_;
  std::vector<int> count_;
  std::vector<double> delta_, tau_, e_;
};

// One transport application: u(x,v) = E(tau)*f(x - tau v, v)
//                                   + int_0^tau E(s) q(x - s v, v) ds
// with tau the backward exit distance. q may be null (no volume source).
// Linear in (q, f) and nonnegative for nonnegative data.
inline AngularField sweep(const SpatialGrid& g, const AngularQuadrature& ang, const AngularField* q,
                          const ScalarField& sigma_t, const BoundarySource& f, double h_ray,
                          const AttenuationCache* cache = nullptr) {
  if (q) require(q->directions() == ang.size(), "volume source and quadrature disagree");
  if (cache) {
    require(cache->directions() == ang.size() && &cache->grid() == &g,
            "attenuation cache was built for a different discretization");
    if (!cache->matches(sigma_t))
      throw validation_error("attenuation cache was built for a different total cross-section");
    if (cache->h_ray() != h_ray)
      throw validation_error("attenuation cache was built with a different ray step");
  }
  std::vector<double> sigt_full;
  if (!cache) g.scatter_extended(sigma_t.data().data(), sigt_full);
  const std::vector<double>& full = cache ? cache->extended() : sigt_full;

  AngularField out(g, ang.size());
  int n = g.n_active();
  parallel_for(ang.size(), [&](int d) {
    Vec2 v = ang.dir(d);
    std::vector<double> qfull, E;
    if (q) g.scatter_extended(q->slice(d), qfull);
    double* res = out.slice(d);
    for (int a = 0; a < n; ++a) {
      Vec2 x = g.center(a);
      int S;
      double delta, tau;
      const double* prof;
      if (cache) {
        S = cache->samples(d, a);
        delta = cache->delta(d, a);
        tau = cache->tau(d, a);
        prof = cache->profile(d, a);
      } else {
        tau = g.domain().exit_distance(x, v);
        S = detail::ray_profile(g, full, x, v, tau, h_ray, E, delta);
        prof = E.data();
      }
      double val = prof[S] * f(x - tau * v, v);
      if (q) {
        // Composite trapezoid in s over the same sample ladder as E.
        double acc = 0.5 * (prof[0] * g.bilinear(qfull, x) +
                            prof[S] * g.bilinear(qfull, x - tau * v));
        for (int k = 1; k < S; ++k)
          acc += prof[k] * g.bilinear(qfull, x - (k * delta) * v);
        val += delta * acc;
      }
      res[a] = val;
    }
  });
  return out;
}

struct LinearSolveResult {
  AngularField u;
  int iterations = 0;
  std::vector<double> residuals;
};

// Source iteration for the frozen-absorption linear problem. Starting from
// the uncollided sweep the iterates increase monotonically toward the
// solution; the contraction factor is bounded by sup sigma_s/sigma_t.
// u_init (optional) warm-starts the iteration without changing its limit.
inline LinearSolveResult solve_linear_rte(const SpatialGrid& g, const AngularQuadrature& ang,
                                          const ScalarField& sigma_a, const ScalarField& sigma_s,
                                          const ScatteringModel& K, const BoundarySource& f,
                                          const TransportConfig& cfg,
                                          const AttenuationCache* cache = nullptr,
                                          const AngularField* u_init = nullptr) {
  check_same_grid(sigma_a, sigma_s);
  require(&sigma_a.grid() == &g, "cross-sections live on a different grid");
  if (sigma_a.min() <= 0.0)
    throw model_error("linear transport needs a strictly positive absorption cross-section");
  if (sigma_s.min() < 0.0) throw model_error("scattering cross-section must be nonnegative");

  double h_ray = resolve_h_ray(g, cfg);
  ScalarField sigma_t = sigma_a + sigma_s;
  std::optional<AttenuationCache> local;
  if (!cache && cfg.cache_rays) local.emplace(g, ang, sigma_t, h_ray);
  const AttenuationCache* use = cache ? cache : (local ? &*local : nullptr);

  LinearSolveResult r{u_init ? *u_init : sweep(g, ang, nullptr, sigma_t, f, h_ray, use), 0, {}};
  if (sigma_s.max() > 0.0) {
    bool done = false;
    for (int it = 0; it < cfg.n_si; ++it) {
      AngularField ku = K.apply(r.u, ang);
      for (int d = 0; d < ang.size(); ++d) {
        double* s = ku.slice(d);
        for (int a = 0; a < g.n_active(); ++a) s[a] *= sigma_s[a];
      }
      AngularField next = sweep(g, ang, &ku, sigma_t, f, h_ray, use);
      double res = sup_diff(next, r.u) / std::max(sup_norm(next), 1e-300);
      r.u = std::move(next);
      r.iterations = it + 1;
      r.residuals.push_back(res);
      if (res <= cfg.tol_si) {
        done = true;
        break;
      }
    }
    if (!done) {
      std::ostringstream os;
      os << "source iteration did not reach tol " << cfg.tol_si << " in " << cfg.n_si
         << " iterations; last residuals:";
      size_t from = r.residuals.size() > 5 ? r.residuals.size() - 5 : 0;
      for (size_t i = from; i < r.residuals.size(); ++i) os << " " << r.residuals[i];
      throw iteration_error(os.str());
    }
  }

  // Max-principle bounds, with quadrature slack.
  double hi = f.upper() + 1e-6;
  double lo = f.lower() * std::exp(-g.domain().diameter() * sigma_a.max()) - 1e-6;
  double umin = r.u.min(), umax = r.u.max();
  if (umax > hi || umin < lo || umin < -1e-12) {
    std::ostringstream os;
    os << "transport solution violates its a-priori bounds: range [" << umin << ", " << umax
       << "] vs [" << lo << ", " << hi << "]";
    throw numerical_error(os.str());
  }
  return r;
}

}  // namespace mprt
