#include "qoc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace qoc::linalg {

namespace {
const std::complex<double> kI(0.0, 1.0);
}

SkewExp::SkewExp(const Eigen::MatrixXcd& skew) {
  // -i K is Hermitian with eigenvalues w; K = i (-i K).
  Eigen::MatrixXcd herm = -kI * skew;
  herm = 0.5 * (herm + herm.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
  q_ = es.eigenvectors();
  w_ = es.eigenvalues();
}

Eigen::MatrixXcd SkewExp::exp(double t) const {
  Eigen::VectorXcd phase(w_.size());
  for (Eigen::Index a = 0; a < w_.size(); ++a) phase[a] = std::exp(kI * (w_[a] * t));
  return q_ * phase.asDiagonal() * q_.adjoint();
}

Eigen::VectorXcd SkewExp::apply(double t, const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd c = q_.adjoint() * v;
  for (Eigen::Index a = 0; a < w_.size(); ++a) c[a] *= std::exp(kI * (w_[a] * t));
  return q_ * c;
}

Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& hermitian, double t) {
  return SkewExp(-kI * hermitian).exp(t);
}

Eigen::MatrixXcd expm_skew(const Eigen::MatrixXcd& skew, double t) { return SkewExp(skew).exp(t); }

Eigen::MatrixXd expm_antisymmetric(const Eigen::MatrixXd& antisym, double t) {
  return SkewExp(antisym.cast<std::complex<double>>()).exp(t).real();
}

OrthogonalStep::OrthogonalStep(const Eigen::MatrixXd& antisym, double dt) : dt_(dt) {
  const Eigen::Index n = antisym.rows();
  const double norm = (antisym * dt).cwiseAbs().colwise().sum().maxCoeff();
  if (n > 0 && norm <= 0.5) {
    series_ = true;
    x_ = antisym * dt;
    // Smallest K with norm^K / K! below rounding.
    double term = 1.0;
    terms_ = 1;
    while (term > 1e-18 && terms_ < 30) {
      term *= norm / terms_;
      ++terms_;
    }
    exp_ = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k < terms_; ++k) {
      power = (power * x_) / k;
      exp_ += power;
    }
    return;
  }
  SkewExp spectral(antisym.cast<std::complex<double>>());
  q_ = spectral.vectors();
  ell_.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) ell_[a] = kI * (spectral.frequencies()[a] * dt);
  phi_.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const std::complex<double> d = ell_[a] - ell_[b];
      if (std::abs(d) < 1e-7) {
        phi_(a, b) = std::exp(ell_[b]) * (1.0 + 0.5 * d + d * d / 6.0);
      } else {
        phi_(a, b) = (std::exp(ell_[a]) - std::exp(ell_[b])) / d;
      }
    }
  }
  Eigen::VectorXcd e(n);
  for (Eigen::Index a = 0; a < n; ++a) e[a] = std::exp(ell_[a]);
  exp_ = (q_ * e.asDiagonal() * q_.adjoint()).real();
}

Eigen::MatrixXd OrthogonalStep::pairing(const Eigen::VectorXd& lambda, const Eigen::VectorXd& rho) const {
  if (series_) {
    // exp'(X)(E) = sum_k 1/k! sum_{m+l=k-1} X^m E X^l, paired with lambda, rho.
    const Eigen::Index n = x_.rows();
    Eigen::MatrixXd a(n, terms_), b(n, terms_);
    a.col(0) = lambda;
    b.col(0) = rho;
    for (int m = 1; m < terms_; ++m) {
      a.col(m) = x_.transpose() * a.col(m - 1);
      b.col(m) = x_ * b.col(m - 1);
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    double inv_fact = 1.0;
    for (int k = 1; k <= terms_; ++k) {
      inv_fact /= k;
      for (int m = 0; m < k && m < terms_ && k - 1 - m < terms_; ++m) g.noalias() += inv_fact * a.col(m) * b.col(k - 1 - m).transpose();
    }
    return dt_ * g;
  }
  const Eigen::VectorXcd a = q_.transpose() * lambda.cast<std::complex<double>>();
  const Eigen::VectorXcd r = q_.adjoint() * rho.cast<std::complex<double>>();
  const Eigen::MatrixXcd m = (a * r.transpose()).cwiseProduct(phi_);
  // dA/dU = dt; fold it in so callers pair directly with dU.
  return dt_ * (q_.conjugate() * m * q_.transpose()).real();
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++r;
  }
  return r;
}

}  // namespace qoc::linalg
