#pragma once

// Semilinear diffusion limit: -div(D grad U) + sigma_a(U) U = 0 with
// Dirichlet trace f0, solved by Newton with line search and a damped Picard
// fallback, iterates clamped to the comparison bounds [theta_disc, sup f0].

#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "mprt/elliptic.hpp"
#include "mprt/model.hpp"

namespace mprt {

struct DiffusionProblem {
  ScalarField D;
  const MPAModel* model = nullptr;
  std::function<double(Vec2)> f0;
  double f0_inf = 0.0, f0_sup = 0.0;

  DiffusionProblem(ScalarField d, const MPAModel& m, std::function<double(Vec2)> trace, double lo,
                   double hi)
      : D(std::move(d)), model(&m), f0(std::move(trace)), f0_inf(lo), f0_sup(hi) {
    if (D.min() <= 0.0) throw model_error("diffusion coefficient must be strictly positive");
    require(0.0 < lo && lo <= hi, "Dirichlet trace bounds must satisfy 0 < inf <= sup");
  }

  static DiffusionProblem constant_data(const SpatialGrid& g, ScalarField d, const MPAModel& m,
                                        double c) {
    require(c > 0.0, "Dirichlet trace must be positive");
    (void)g;
    return DiffusionProblem(std::move(d), m, [c](Vec2) { return c; }, c, c);
  }
};

inline ScalarField default_diffusion_coefficient(const SpatialGrid& g, const ScalarField& sigma_s) {
  if (sigma_s.min() <= 0.0) throw model_error("default diffusion coefficient needs sigma_s > 0");
  ScalarField D(g, 0.0);
  for (int a = 0; a < D.size(); ++a) D[a] = 1.0 / (2.0 * sigma_s[a]);
  return D;
}

struct DiffusionReport {
  double theta_disc = 0.0;
  int newton_iterations = 0;
  int picard_iterations = 0;
  bool used_fallback = false;
  std::vector<double> residuals;
};

namespace detail {

// Residual of the discrete semilinear system, F(U) = A U + sigma_a(U).U - rhs.
inline Eigen::VectorXd diffusion_residual(const SWOperator& op, const Eigen::VectorXd& rhs,
                                          const MPAModel& model, const SpatialGrid& g,
                                          const Eigen::VectorXd& U) {
  ScalarField uf(g, 0.0);
  for (int a = 0; a < uf.size(); ++a) uf[a] = U[a];
  ScalarField sig = model.eval(uf);
  Eigen::VectorXd F = op.A * U - rhs;
  for (int a = 0; a < uf.size(); ++a) F[a] += sig[a] * U[a];
  return F;
}

}  // namespace detail

inline ScalarField solve_semilinear_diffusion(const SpatialGrid& g, const DiffusionProblem& p,
                                              double tol, DiffusionReport* rep = nullptr) {
  require(tol > 0.0, "tolerance must be positive");
  require(&p.D.grid() == &g, "problem lives on a different grid");
  const MPAModel& model = *p.model;
  SWOperator op = assemble_diffusion(g, p.D);
  Eigen::VectorXd rhs = op.dirichlet_rhs(p.f0);
  int n = g.n_active();

  // Comparison solve with absorption frozen at its largest value; its
  // minimum is the lower barrier theta_disc for the nonlinear solution.
  ScalarField sig_max = model.eval(ScalarField(g, p.f0_sup));
  Eigen::SparseMatrix<double> Amax = op.A;
  for (int a = 0; a < n; ++a) Amax.coeffRef(a, a) += sig_max[a];
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(Amax);
  if (lu.info() != Eigen::Success)
    throw numerical_error("diffusion solve: comparison factorization failed");
  Eigen::VectorXd V = lu.solve(rhs);
  double theta_disc = std::max(0.0, V.minCoeff());

  DiffusionReport local;
  DiffusionReport& r = rep ? *rep : local;
  r.theta_disc = theta_disc;

  // Residuals are measured against the Dirichlet load. Cut-arm coefficients
  // grow like 1/alpha near tangential boundary cuts, so an absolute residual
  // floor of eps_mach * ||A|| is unavoidable; relative to ||rhs|| the
  // factorization always has headroom.
  const double fscale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());

  auto clamp_vec = [&](Eigen::VectorXd& U) {
    for (int a = 0; a < n; ++a) U[a] = std::clamp(U[a], theta_disc, p.f0_sup);
  };

  Eigen::VectorXd U = Eigen::VectorXd::Constant(n, p.f0_sup);
  Eigen::VectorXd F = detail::diffusion_residual(op, rhs, model, g, U);
  double fn = F.lpNorm<Eigen::Infinity>();
  r.residuals.push_back(fn);

  bool newton_ok = true;
  for (int it = 0; it < 60 && fn > tol * fscale; ++it) {
    // Jacobian diag: sigma_a(U) + U * d(sigma_a)/dU, local part only.
    ScalarField uf(g, 0.0);
    for (int a = 0; a < n; ++a) uf[a] = U[a];
    ScalarField sig = model.eval(uf);
    ScalarField dsig = model.eval_derivative_local(uf);
    Eigen::SparseMatrix<double> J = op.A;
    for (int a = 0; a < n; ++a) J.coeffRef(a, a) += sig[a] + dsig[a] * U[a];
    Eigen::SparseLU<Eigen::SparseMatrix<double>> jlu;
    jlu.compute(J);
    if (jlu.info() != Eigen::Success) {
      newton_ok = false;
      break;
    }
    Eigen::VectorXd dU = jlu.solve(-F);

    double alpha = 1.0;
    Eigen::VectorXd Utry;
    double ftry = fn;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Utry = U + alpha * dU;
      clamp_vec(Utry);
      Eigen::VectorXd Ft = detail::diffusion_residual(op, rhs, model, g, Utry);
      ftry = Ft.lpNorm<Eigen::Infinity>();
      if (ftry < fn) {
        U = Utry;
        F = Ft;
        fn = ftry;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++r.newton_iterations;
    if (!accepted) {
      newton_ok = false;
      break;
    }
    r.residuals.push_back(fn);
  }

  if (fn > tol * fscale) {
    // Damped Picard fallback: freeze the absorption, resolve, average.
    r.used_fallback = true;
    (void)newton_ok;
    for (int it = 0; it < 400 && fn > tol * fscale; ++it) {
      ScalarField uf(g, 0.0);
      for (int a = 0; a < n; ++a) uf[a] = U[a];
      ScalarField sig = model.eval(uf);
      Eigen::SparseMatrix<double> Af = op.A;
      for (int a = 0; a < n; ++a) Af.coeffRef(a, a) += sig[a];
      Eigen::SparseLU<Eigen::SparseMatrix<double>> flu;
      flu.compute(Af);
      if (flu.info() != Eigen::Success)
        throw numerical_error("diffusion solve: Picard factorization failed");
      Eigen::VectorXd Unew = flu.solve(rhs);
      U = 0.5 * U + 0.5 * Unew;
      clamp_vec(U);
      F = detail::diffusion_residual(op, rhs, model, g, U);
      fn = F.lpNorm<Eigen::Infinity>();
      r.residuals.push_back(fn);
      ++r.picard_iterations;
    }
    if (fn > tol * fscale) {
      std::ostringstream os;
      os << "diffusion solve: Newton and Picard both stalled at residual " << fn << " (tol " << tol
         << ")";
      throw iteration_error(os.str());
    }
  }

  ScalarField out(g, 0.0);
  for (int a = 0; a < n; ++a) out[a] = U[a];
  if (out.min() < theta_disc - 1e-8 || out.max() > p.f0_sup + 1e-8)
    throw numerical_error("diffusion solution escapes its comparison bounds");
  return out;
}

// Internal data in the diffusion regime, H = sigma_a(U) U (exponent 1).
inline ScalarField diffusion_data(const ScalarField& U, const MPAModel& model) {
  if (U.min() < 0.0) throw validation_error("diffusion data needs U >= 0");
  return model.eval(U) * U;
}

// ||sig_u - sig_ut||_p / ||H - Ht||_p where the first pair are the evaluated
// absorption fields sigma_a(U) and sigma_a~(U~). Conventions: 0/0 -> 0,
// x/0 -> inf.
inline double lp_stability_ratio(const ScalarField& H, const ScalarField& Ht,
                                 const ScalarField& sig_u, const ScalarField& sig_ut, double p) {
  require(p >= 1.0 && !std::isinf(p), "stability ratio needs p in [1, inf)");
  check_same_grid(H, Ht);
  check_same_grid(H, sig_u);
  check_same_grid(H, sig_ut);
  double num = lp_norm(sig_u - sig_ut, p);
  double den = lp_norm(H - Ht, p);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace mprt
