#pragma once

// Polynomial absorption law sigma_a(m) = sum_k sigma_k(x) |m(x)|^k with an
// optional symmetric PSD smoothing kernel T_k applied to |m| inside each
// term. The degree-0 coefficient is strictly positive, which gives the
// uniform lower bound the transport solver's a-priori estimates need.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mprt/fields.hpp"

namespace mprt {

inline double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

class MPAModel {
 public:
  // kernels[k] (optional, may be shorter than sigma) acts on active-cell
  // vectors; an absent entry means identity.
  MPAModel(std::vector<ScalarField> sigma, double q = 1.0,
           std::vector<std::shared_ptr<const Eigen::MatrixXd>> kernels = {})
      : sigma_(std::move(sigma)), q_(q), kernels_(std::move(kernels)) {
    if (sigma_.empty()) throw model_error("absorption law needs at least the degree-0 coefficient");
    if (q_ < 1.0) throw model_error("data exponent q < 1 is unsupported");
    const SpatialGrid& g = sigma_[0].grid();
    for (size_t k = 1; k < sigma_.size(); ++k) check_same_grid(sigma_[0], sigma_[k]);
    if (sigma_[0].min() <= 0.0)
      throw model_error("absorption law violates sigma_{a,0} > 0");
    for (size_t k = 1; k < sigma_.size(); ++k)
      if (sigma_[k].min() < 0.0)
        throw model_error("absorption coefficients sigma_{a,k} must be nonnegative for k >= 1");
    for (const auto& T : kernels_) {
      if (!T) continue;
      int n = g.n_active();
      if (T->rows() != n || T->cols() != n)
        throw model_error("smoothing kernel must be n_active x n_active");
      if ((*T - T->transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw model_error("smoothing kernel must be symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*T, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10)
        throw model_error("smoothing kernel must be positive semidefinite");
    }
  }

  int degree() const { return static_cast<int>(sigma_.size()) - 1; }
  double q() const { return q_; }
  const ScalarField& sigma(int k) const { return sigma_[k]; }
  const SpatialGrid& grid() const { return sigma_[0].grid(); }
  bool has_kernels() const {
    for (const auto& T : kernels_)
      if (T) return true;
    return false;
  }

  double sigma_lower() const { return sigma_[0].min(); }

  // Growth envelope g(t) = sum_k sup(sigma_k) t^k, nondecreasing on t >= 0.
  double growth(double t) const {
    double s = 0.0;
    for (size_t k = 0; k < sigma_.size(); ++k) s += sigma_[k].max() * ipow(t, static_cast<int>(k));
    return s;
  }

  ScalarField eval(const ScalarField& m) const {
    check_same_grid(sigma_[0], m);
    ScalarField out = sigma_[0];
    for (size_t k = 1; k < sigma_.size(); ++k) {
      std::vector<double> t = term_input(m);
      apply_kernel(static_cast<int>(k), t);
      for (int a = 0; a < out.size(); ++a) out[a] += sigma_[k][a] * ipow(t[a], static_cast<int>(k));
    }
    double floor = sigma_lower();
    for (int a = 0; a < out.size(); ++a)
      if (out[a] < floor - 1e-12 * (1.0 + floor))
        throw model_error("absorption evaluation fell below inf sigma_{a,0}");
    return out;
  }

  // Local derivative sum_k k sigma_k m^{k-1} for m >= 0, used as a Newton
  // preconditioner by the diffusion solver; ignores kernels (the exact
  // derivative is then nonlocal) which only changes the iteration path.
  ScalarField eval_derivative_local(const ScalarField& m) const {
    check_same_grid(sigma_[0], m);
    ScalarField out(m.grid(), 0.0);
    for (size_t k = 1; k < sigma_.size(); ++k)
      for (int a = 0; a < out.size(); ++a)
        out[a] += k * sigma_[k][a] * ipow(std::abs(m[a]), static_cast<int>(k) - 1);
    return out;
  }

  // Quadrature value of the derivative-positivity integral
  // int sum_k k sigma_k (T_k m)^{k-1} (T_k f) f dx, m >= 0.
  double frechet_positivity(const ScalarField& m, const ScalarField& f) const {
    check_same_grid(sigma_[0], m);
    check_same_grid(sigma_[0], f);
    if (m.min() < 0.0) throw validation_error("frechet check needs m >= 0");
    double h2 = grid().h() * grid().h();
    double total = 0.0;
    for (size_t k = 1; k < sigma_.size(); ++k) {
      std::vector<double> tm = m.data(), tf = f.data();
      apply_kernel(static_cast<int>(k), tm);
      apply_kernel(static_cast<int>(k), tf);
      for (int a = 0; a < m.size(); ++a)
        total += h2 * k * sigma_[k][a] * ipow(tm[a], static_cast<int>(k) - 1) * tf[a] * f[a];
    }
    return total;
  }

 private:
  std::vector<double> term_input(const ScalarField& m) const {
    std::vector<double> t = m.data();
    for (double& x : t) x = std::abs(x);
    return t;
  }

  void apply_kernel(int k, std::vector<double>& t) const {
    if (k >= static_cast<int>(kernels_.size()) || !kernels_[k]) return;
    Eigen::Map<Eigen::VectorXd> v(t.data(), t.size());
    Eigen::VectorXd r = (*kernels_[k]) * v;
    v = r;
  }

  std::vector<ScalarField> sigma_;
  double q_;
  std::vector<std::shared_ptr<const Eigen::MatrixXd>> kernels_;
};

}  // namespace mprt
