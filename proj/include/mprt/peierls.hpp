#pragma once

// Dense assembly of the Peierls integral operator for the mean flux,
//   (P f)(x) = (1/2pi) int_Omega E(x,y)/|x-y| sigma_t(y) f(y) dy,
// its spectral radius via power iteration on the symmetrized form, the
// attenuation maximum mu, Nystrom solves of the mean-flux equation, and the
// epsilon scan that measures how the spectral gap closes under diffusive
// scaling.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "mprt/scaled.hpp"
#include "mprt/scattering.hpp"
#include "mprt/transport.hpp"

namespace mprt {

struct PeierlsConfig {
  int n_theta = 256;  // angular resolution of the per-cell escape average
  double h_ray = 0.0; // 0 resolves to half the grid spacing
};

struct PeierlsMatrix {
  Eigen::MatrixXd P;
  double eps = 1.0;
  ScalarField sigma_t;  // snapshot the matrix was assembled from
  const SpatialGrid* grid = nullptr;
};

// Midpoint rule for the off-diagonal blocks; the diagonal carries the mass
// the midpoint rule cannot see. Row i of the exact operator applied to the
// constant 1 equals 1 minus the mean attenuation from x_i to the boundary,
// so the diagonal is set to that row total minus the assembled off-diagonal
// row sum. This keeps every row sum strictly below 1 (sub-stochastic),
// which an equal-area local rule for the 1/|x-y| singularity does not.
inline PeierlsMatrix assemble_peierls_kernel(const SpatialGrid& g, const ScalarField& sigma_t,
                                             double eps_tag, const PeierlsConfig& cfg = {}) {
  require(&sigma_t.grid() == &g, "cross-section lives on a different grid");
  require(g.n_active() >= 2, "kernel assembly needs at least two active cells");
  if (sigma_t.min() < 0.0) throw model_error("total cross-section must be nonnegative");

  int n = g.n_active();
  double h = g.h();
  double h_ray = cfg.h_ray > 0.0 ? cfg.h_ray : 0.5 * h;
  AttenuationField att(sigma_t, h_ray);

  PeierlsMatrix out;
  out.P = Eigen::MatrixXd::Zero(n, n);
  out.eps = eps_tag;
  out.sigma_t = sigma_t;
  out.grid = &g;
  Eigen::MatrixXd& P = out.P;

  // E(x_i,x_j) is symmetric in (i,j); each pair is integrated once. Rows are
  // filled by the thread owning the larger index, so writes never collide.
  parallel_for(n, [&](int i) {
    Vec2 xi = g.center(i);
    for (int j = 0; j < i; ++j) {
      Vec2 xj = g.center(j);
      Vec2 d = xi - xj;
      double dist = norm(d);
      double E = att.attenuation(xi, {d.x / dist, d.y / dist}, dist);
      double w = h * h * E / (2.0 * pi * dist);
      P(i, j) = w * sigma_t[j];
      P(j, i) = w * sigma_t[i];
    }
  });

  // Escape average and the residual-mass diagonal.
  std::vector<double> row_total(n);
  parallel_for(n, [&](int i) {
    Vec2 xi = g.center(i);
    double esc = 0.0;
    for (int l = 0; l < cfg.n_theta; ++l) {
      double th = 2.0 * pi * (l + 0.5) / cfg.n_theta;
      Vec2 w{std::cos(th), std::sin(th)};
      double s = g.domain().exit_distance(xi, -w);  // exit forward along +w
      esc += att.attenuation(xi, -w, s);
    }
    row_total[i] = 1.0 - esc / cfg.n_theta;
  });
  for (int i = 0; i < n; ++i) {
    double off = P.row(i).sum();
    double diag = row_total[i] - off;
    if (diag < -1e-10)
      throw numerical_error("kernel assembly produced a negative diagonal; refine the grid");
    P(i, i) = std::max(diag, 0.0);
  }

  for (int i = 0; i < n; ++i) {
    if (P.row(i).sum() >= 1.0)
      throw numerical_error("kernel row sum reached 1; the operator must be sub-stochastic");
  }
  return out;
}

inline PeierlsMatrix assemble_peierls(const ScaledCoefficients& c, const SpatialGrid& g,
                                      const PeierlsConfig& cfg = {}) {
  return assemble_peierls_kernel(g, c.sigma_t_eps(), c.eps, cfg);
}

// Power iteration from the all-ones vector; stops when the Rayleigh
// quotient moves by no more than inc_tol.
inline double power_radius(const Eigen::MatrixXd& S, Eigen::VectorXd* vec_out = nullptr,
                           int max_it = 100000, double inc_tol = 1e-12) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(S.rows());
  v.normalize();
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_it; ++it) {
    Eigen::VectorXd w = S * v;
    double lam = v.dot(w);
    if (std::abs(lam - prev) <= inc_tol) {
      if (vec_out) *vec_out = v;
      return lam;
    }
    double wn = w.norm();
    if (wn == 0.0) throw numerical_error("power iteration hit the zero vector");
    v = w / wn;
    prev = lam;
  }
  throw iteration_error(
      "power iteration: eigenvalue increment stayed above 1e-12 for 1e5 iterations; "
      "the spectral gap is near-degenerate");
}

// Spectral radius of P via its symmetrization sigma_t^{1/2} P sigma_t^{-1/2}
// (similar, hence same spectrum; symmetric because E and |x-y| are).
inline double spectral_radius(const PeierlsMatrix& pm, ScalarField* vec_out = nullptr) {
  int n = static_cast<int>(pm.P.rows());
  Eigen::VectorXd sq(n);
  for (int i = 0; i < n; ++i) {
    double st = pm.sigma_t[i];
    if (st <= 0.0) throw numerical_error("symmetrization needs a strictly positive cross-section");
    sq[i] = std::sqrt(st);
  }
  Eigen::MatrixXd S = pm.P;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) *= sq[i] / sq[j];
  Eigen::VectorXd v;
  double rho = power_radius(S, &v);
  if (!(rho > 0.0 && rho < 1.0)) {
    std::ostringstream os;
    os << "spectral radius " << rho << " escapes (0,1)";
    throw numerical_error(os.str());
  }
  if (vec_out) {
    // Undo the similarity: the P eigenvector is sigma_t^{-1/2} v.
    ScalarField phi(*pm.grid, 0.0);
    for (int i = 0; i < n; ++i) phi[i] = v[i] / sq[i];
    double sign = 0.0;
    for (int i = 0; i < n; ++i) sign += phi[i];
    if (sign < 0.0) for (int i = 0; i < n; ++i) phi[i] = -phi[i];
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) nrm += phi[i] * phi[i];
    nrm = pm.grid->h() * std::sqrt(nrm);
    for (int i = 0; i < n; ++i) phi[i] /= nrm;
    *vec_out = phi;
  }
  return rho;
}

// Largest boundary-path attenuation deficit over (active cell, direction):
// mu = max 1 - E(x, x - tau v) with tau the full backward exit distance.
inline double mu_constant(const SpatialGrid& g, const ScalarField& sigma_t,
                          const AngularQuadrature& ang, double h_ray = 0.0) {
  require(&sigma_t.grid() == &g, "cross-section lives on a different grid");
  if (h_ray <= 0.0) h_ray = 0.5 * g.h();
  std::vector<double> full;
  g.scatter_extended(sigma_t.data().data(), full);
  std::vector<double> per_dir(ang.size(), 0.0);
  parallel_for(ang.size(), [&](int d) {
    Vec2 v = ang.dir(d);
    double worst = 0.0;
    for (int a = 0; a < g.n_active(); ++a) {
      Vec2 x = g.center(a);
      double tau = g.domain().exit_distance(x, v);
      double E = std::exp(-detail::ray_integral(g, full, x, v, tau, h_ray));
      worst = std::max(worst, 1.0 - E);
    }
    per_dir[d] = worst;
  });
  double mu = 0.0;
  for (double w : per_dir) mu = std::max(mu, w);
  return mu;
}

inline double mu_constant(const ScaledCoefficients& c, const AngularQuadrature& ang,
                          double h_ray = 0.0) {
  return mu_constant(c.sigma_a.grid(), c.sigma_t_eps(), ang, h_ray);
}

// Mean incoming boundary flux per cell: the escape-path average of
// attenuation times the boundary trace, (1/n) sum_l E(x->exit_l) f(exit_l).
inline Eigen::VectorXd boundary_flux_vector(const SpatialGrid& g, const ScalarField& sigma_t,
                                            const BoundarySource& f, int n_theta, double h_ray) {
  AttenuationField att(sigma_t, h_ray);
  int n = g.n_active();
  Eigen::VectorXd b(n);
  parallel_for(n, [&](int i) {
    Vec2 x = g.center(i);
    double acc = 0.0;
    for (int l = 0; l < n_theta; ++l) {
      double th = 2.0 * pi * (l + 0.5) / n_theta;
      Vec2 w{std::cos(th), std::sin(th)};
      double s = g.domain().exit_distance(x, -w);
      Vec2 exit = x + s * w;
      acc += att.attenuation(x, -w, s) * f(exit, -w);
    }
    b[i] = acc / n_theta;
  });
  return b;
}

// Nystrom solve of the mean-flux integral equation
//   m = P diag(sigma_s/sigma_t) m + b,
// the angular average of the transport solution without sweeping.
inline ScalarField nystrom_mean_flux(const PeierlsMatrix& pm, const ScalarField& sigma_s,
                                     const BoundarySource& f, int n_theta_b = 64,
                                     double h_ray = 0.0) {
  const SpatialGrid& g = *pm.grid;
  check_same_grid(pm.sigma_t, sigma_s);
  int n = g.n_active();
  if (h_ray <= 0.0) h_ray = 0.5 * g.h();
  Eigen::VectorXd b = boundary_flux_vector(g, pm.sigma_t, f, n_theta_b, h_ray);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    double st = pm.sigma_t[j];
    if (st <= 0.0) throw numerical_error("mean-flux solve needs sigma_t > 0");
    double ratio = sigma_s[j] / st;
    A.col(j) -= pm.P.col(j) * ratio;
  }
  Eigen::VectorXd m = A.partialPivLu().solve(b);
  ScalarField out(g, 0.0);
  for (int i = 0; i < n; ++i) out[i] = m[i];
  if (out.min() < -1e-10 || out.max() > f.upper() * (1.0 + 1e-6) + 1e-6)
    throw numerical_error("mean-flux solution escapes its max-principle bounds");
  return out;
}

struct ScaledSolve {
  ScalarField m;
  int outer = 0;
  std::vector<double> residuals;
};

// Semilinear mean flux under the diffusive scaling: Picard on the frozen
// absorption, each step one kernel assembly plus one dense solve. Chosen
// over source iteration, whose contraction degrades like 1 - O(eps^2).
inline ScaledSolve scaled_mean_flux(const SpatialGrid& g, const MPAModel& model, double eps,
                                    const ScalarField& sigma_s, const BoundarySource& f,
                                    double tol, int max_outer, const PeierlsConfig& cfg = {}) {
  ScaledSolve r{ScalarField(g, 0.0), 0, {}};
  for (int it = 0; it < max_outer; ++it) {
    ScalarField sig_a = model.eval(r.m);
    ScaledCoefficients c(eps, sig_a, sigma_s);
    PeierlsMatrix pm = assemble_peierls(c, g, cfg);
    ScalarField next = nystrom_mean_flux(pm, c.sigma_s_eps(), f, 64, cfg.h_ray);
    double res = sup_norm(next - r.m) / std::max(sup_norm(next), 1e-300);
    r.m = std::move(next);
    r.outer = it + 1;
    r.residuals.push_back(res);
    if (res <= tol) return r;
  }
  std::ostringstream os;
  os << "scaled mean-flux iteration did not reach tol " << tol << " in " << max_outer
     << " outer steps";
  throw iteration_error(os.str());
}

struct ScanRow {
  double eps = 0.0;
  double one_minus_rho = 0.0;
  double lambda_over_eps = 0.0;
  double mu = 0.0;
  double slope_cum = 0.0;  // NaN on the first row
};

struct ScanConfig {
  std::vector<double> eps;
  PeierlsConfig kernel;
  int n_theta_mu = 64;
  double beta = -1.0;      // >= 0 switches on the rough perturbation eps^beta
  double rough_amp = 1.0;
  uint64_t seed = 20260819ull;
};

// Per eps: spectral gap of P_eps, the elliptic eigenvalue over eps, and mu.
// slope_cum is the least-squares slope of log(1-rho) against log(eps) over
// the rows seen so far. The optional perturbation adds a fixed bounded
// rough field (uniform per cell, seeded) scaled by eps^beta to sigma_a.
inline std::vector<ScanRow> epsilon_scan(const SpatialGrid& g, const ScalarField& sigma_a,
                                         const ScalarField& sigma_s, const ScanConfig& sc) {
  for (size_t i = 0; i + 1 < sc.eps.size(); ++i)
    require(sc.eps[i] > sc.eps[i + 1], "epsilon list must be strictly decreasing");
  for (double e : sc.eps) require(e > 0.0, "epsilon values must be positive");

  ScalarField rough(g, 0.0);
  if (sc.beta >= 0.0) {
    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int a = 0; a < g.n_active(); ++a) rough[a] = u(rng);
  }

  std::vector<ScanRow> rows;
  std::vector<double> logs_e, logs_g;
  AngularQuadrature mu_ang(sc.n_theta_mu);
  for (double eps : sc.eps) {
    ScalarField sa = sigma_a;
    if (sc.beta >= 0.0) {
      double amp = sc.rough_amp * std::pow(eps, sc.beta);
      for (int a = 0; a < sa.size(); ++a) sa[a] = std::max(0.0, sa[a] + amp * rough[a]);
    }
    ScaledCoefficients c(eps, sa, sigma_s);
    PeierlsMatrix pm = assemble_peierls(c, g, sc.kernel);
    double rho = spectral_radius(pm);
    EigenPair ep = eigenpair_scaled(g, c);
    double mu = mu_constant(g, pm.sigma_t, mu_ang, sc.kernel.h_ray);

    ScanRow row;
    row.eps = eps;
    row.one_minus_rho = 1.0 - rho;
    row.lambda_over_eps = ep.value / eps;
    row.mu = mu;
    logs_e.push_back(std::log(eps));
    logs_g.push_back(std::log(row.one_minus_rho));
    if (rows.empty()) {
      row.slope_cum = std::numeric_limits<double>::quiet_NaN();
    } else {
      double n = static_cast<double>(logs_e.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (size_t k = 0; k < logs_e.size(); ++k) {
        sx += logs_e[k];
        sy += logs_g[k];
        sxx += logs_e[k] * logs_e[k];
        sxy += logs_e[k] * logs_g[k];
      }
      row.slope_cum = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mprt
