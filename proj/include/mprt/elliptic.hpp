#pragma once

// Five-point discretization of -div(D grad u) on the active cells with
// Dirichlet data imposed where grid lines cut the boundary (Shortley-Weller
// arms), plus the principal Dirichlet eigenpair via inverse power iteration.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <vector>

#include "mprt/fields.hpp"

namespace mprt {

struct SWOperator {
  Eigen::SparseMatrix<double> A;
  // Coefficients that multiply the Dirichlet value at each boundary cut.
  struct BdryTerm {
    int row;
    double coeff;
    Vec2 point;
  };
  std::vector<BdryTerm> bdry;

  Eigen::VectorXd dirichlet_rhs(const std::function<double(Vec2)>& f0) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(A.rows());
    for (const auto& t : bdry) r[t.row] += t.coeff * f0(t.point);
    return r;
  }
};

// For each of the 4 arms of a cell: full arms use the harmonic mean of D
// across the face; cut arms use the cell's own D and the fractional length
// alpha = t/h to the boundary. The pair (alpha_plus, alpha_minus) per axis
// gives the classical coefficients 2*D/(h^2 alpha (alpha_plus+alpha_minus)).
inline SWOperator assemble_diffusion(const SpatialGrid& g, const ScalarField& D) {
  require(&D.grid() == &g, "diffusion coefficient lives on a different grid");
  if (D.min() <= 0.0) throw model_error("diffusion coefficient must be strictly positive");

  const double h = g.h();
  SWOperator op;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(5) * g.n_active());

  const int step_i[4] = {1, -1, 0, 0};
  const int step_j[4] = {0, 0, 1, -1};

  for (int a = 0; a < g.n_active(); ++a) {
    int i = g.active_i(a), j = g.active_j(a);
    Vec2 x = g.center(a);
    double alpha[4], dface[4];
    int nb[4];
    for (int s = 0; s < 4; ++s) {
      nb[s] = g.cell_at(i + step_i[s], j + step_j[s]);
      if (nb[s] >= 0) {
        alpha[s] = 1.0;
        dface[s] = 2.0 * D[a] * D[nb[s]] / (D[a] + D[nb[s]]);
      } else {
        Vec2 dir{static_cast<double>(step_i[s]), static_cast<double>(step_j[s])};
        double t = g.domain().forward_exit(x, dir);
        alpha[s] = std::clamp(t / h, 1e-6, 1.0);
        dface[s] = D[a];
      }
    }
    double diag = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      int sp = 2 * axis, sm = 2 * axis + 1;
      double asum = alpha[sp] + alpha[sm];
      for (int s : {sp, sm}) {
        double c = 2.0 * dface[s] / (h * h * alpha[s] * asum);
        diag += c;
        if (nb[s] >= 0) {
          trip.emplace_back(a, nb[s], -c);
        } else {
          Vec2 dir{static_cast<double>(step_i[s]), static_cast<double>(step_j[s])};
          Vec2 cut = x + (alpha[s] * h) * dir;
          op.bdry.push_back({a, c, cut});
        }
      }
    }
    trip.emplace_back(a, a, diag);
  }
  op.A.resize(g.n_active(), g.n_active());
  op.A.setFromTriplets(trip.begin(), trip.end());
  return op;
}

struct EigenPair {
  double value = 0.0;
  ScalarField vec;
  double residual = 0.0;
  int iterations = 0;
};

// Principal Dirichlet eigenpair of -div(D grad .) by inverse power
// iteration. The eigenvector is sign-normalized positive and scaled to unit
// discrete L2 norm, h*||phi||_2 = 1.
inline EigenPair dirichlet_eigenpair(const SpatialGrid& g, const ScalarField& D) {
  SWOperator op = assemble_diffusion(g, D);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(op.A);
  if (lu.info() != Eigen::Success)
    throw numerical_error("elliptic eigensolve: sparse factorization failed");

  int n = g.n_active();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  x.normalize();
  double lam = 0.0, prev = 0.0;
  int it = 0;
  for (it = 1; it <= 500; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    if (lu.info() != Eigen::Success)
      throw numerical_error("elliptic eigensolve: back substitution failed");
    x = y.normalized();
    Eigen::VectorXd ax = op.A * x;
    lam = x.dot(ax);
    double res = (ax - lam * x).norm();
    if (res <= 1e-10 * std::abs(lam) || (it > 3 && std::abs(lam - prev) <= 1e-14 * std::abs(lam)))
      break;
    prev = lam;
  }
  if (x.sum() < 0.0) x = -x;
  if (x.minCoeff() <= 0.0)
    throw numerical_error("elliptic eigensolve: principal eigenvector is not interior-positive");

  EigenPair out;
  out.value = lam;
  out.iterations = it;
  out.residual = (op.A * x - lam * x).norm() / x.norm();
  if (out.residual > 1e-8 * std::max(1.0, std::abs(lam)))
    throw numerical_error("elliptic eigensolve: residual tolerance not met");
  x /= g.h() * x.norm();
  out.vec = ScalarField(g, 0.0);
  for (int a = 0; a < n; ++a) out.vec[a] = x[a];
  return out;
}

}  // namespace mprt
