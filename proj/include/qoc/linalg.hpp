#pragma once

#include <Eigen/Dense>

namespace qoc::linalg {

/// Spectral form of a skew-Hermitian generator K = Q diag(i w) Q^H, so that
/// exp(K t) is evaluated exactly unitary for any t.
class SkewExp {
 public:
  explicit SkewExp(const Eigen::MatrixXcd& skew);

  Eigen::MatrixXcd exp(double t) const;
  Eigen::VectorXcd apply(double t, const Eigen::VectorXcd& v) const;

  const Eigen::MatrixXcd& vectors() const { return q_; }
  /// Frequencies w with K = Q diag(i w) Q^H.
  const Eigen::VectorXd& frequencies() const { return w_; }

 private:
  Eigen::MatrixXcd q_;
  Eigen::VectorXd w_;
};

/// exp(-i Hm t) for Hermitian Hm.
Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& hermitian, double t);

/// exp(K t) for skew-Hermitian K.
Eigen::MatrixXcd expm_skew(const Eigen::MatrixXcd& skew, double t);

/// exp(U t) for real antisymmetric U; orthogonal to rounding.
Eigen::MatrixXd expm_antisymmetric(const Eigen::MatrixXd& antisym, double t);

/// Step map rho -> exp(U dt) rho for real antisymmetric U together with the
/// adjoint pairing of its Frechet derivative:
///   lambda^T [d/dU exp(U dt)](E) rho = sum_cd G_cd E_cd,  G = pairing(lambda, rho).
/// Small steps use the power series summed to rounding level; larger ones
/// the spectral form.
class OrthogonalStep {
 public:
  OrthogonalStep(const Eigen::MatrixXd& antisym, double dt);

  const Eigen::MatrixXd& matrix() const { return exp_; }
  Eigen::MatrixXd pairing(const Eigen::VectorXd& lambda, const Eigen::VectorXd& rho) const;

 private:
  double dt_;
  bool series_ = false;
  int terms_ = 0;
  Eigen::MatrixXd x_;     // U dt (series mode)
  Eigen::MatrixXcd q_;
  Eigen::VectorXcd ell_;  // eigenvalues of U dt
  Eigen::MatrixXcd phi_;  // divided differences of exp over ell
  Eigen::MatrixXd exp_;
};

/// Numerical rank with singular values relative to the largest.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol);

}  // namespace qoc::linalg
