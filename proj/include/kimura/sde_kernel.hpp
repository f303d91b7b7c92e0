#pragma once

// SDE-level fields derived from an operator: g, e, f, the diffusion matrix D
// and its square root, drift, covariance alpha, the standard-side D-hat and the
// Girsanov field theta.

#include "kimura/operator_models.hpp"

#include <memory>
#include <optional>

namespace kimura {

/// Symmetric PSD square root by spectral decomposition (eigenvalues ascending,
/// eigenvectors signed so their first nonzero entry is positive). Eigenvalues
/// in [-1e-12 max(1, |D|), 0) are clipped to 0; kInvalidMatrix for asymmetric
/// input, kEllipticityViolation for a more negative eigenvalue.
Eigen::MatrixXd dispersion_sqrt(const Eigen::MatrixXd& D);

/// Per-step view of an SDE used by the path simulator. For the x rows the
/// increment is drift dt + sqrt(x_i) sum_j sigma_ij dW_j; y rows have no sqrt(x) factor.
class SdeModel {
 public:
  virtual ~SdeModel() = default;
  virtual StateSpaceDims dims() const = 0;
  /// drift and sigma at z (x >= 0); ln x_j is taken at max(x_j, log_eps).
  virtual void evaluate(const Point& z, double log_eps, Eigen::VectorXd& drift, Eigen::MatrixXd& sigma) const = 0;
  /// (A, B) when the model is 1D, x-only, with generator A x d^2 + B d and constant A, B.
  virtual std::optional<std::pair<double, double>> constant_1d() const = 0;
};

/// Fields of the singular SDE for one L.
class SdeCoefficients : public SdeModel {
 public:
  explicit SdeCoefficients(SingularOperatorSpec op);

  const SingularOperatorSpec& spec() const { return *op_; }
  StateSpaceDims dims() const override { return op_->dims; }

  Eigen::VectorXd g(const Point& z) const { return singular_g(*op_, z); }
  Eigen::VectorXd e(const Point& z) const { return singular_e(*op_, z); }
  Eigen::MatrixXd f(const Point& z) const { return singular_f(*op_, z); }
  /// D_ii = 2a_ii + 2x_i at_ii, D_ij = 2 sqrt(x_i x_j) at_ij, D_{i,n+l} = 2 sqrt(x_i) c_il, D_yy = 2d.
  Eigen::MatrixXd D(const Point& z) const;
  Eigen::MatrixXd sigma(const Point& z) const { return dispersion_sqrt(D(z)); }
  /// delta_i = g_i + x_i sum_j f_ij ln x_j, delta_{n+l} = e_l + sum_j f_{n+l,j} ln x_j.
  Eigen::VectorXd drift(const Point& z, double log_eps = 1e-12) const;
  /// alpha_ij = sqrt(x_i x_j) D_ij, alpha_{i,n+l} = sqrt(x_i) D_{i,n+l}, alpha_yy = D_yy.
  Eigen::MatrixXd alpha(const Point& z) const;

  void evaluate(const Point& z, double log_eps, Eigen::VectorXd& drift, Eigen::MatrixXd& sigma) const override;
  std::optional<std::pair<double, double>> constant_1d() const override;

 private:
  std::shared_ptr<const SingularOperatorSpec> op_;
  bool scalar_x_ = false;  // n = 1, m = 0 fast path
  bool has_log_terms_ = false;
};

/// Fields of the standard SDE for one L-hat.
class StandardSdeCoefficients : public SdeModel {
 public:
  explicit StandardSdeCoefficients(StandardOperatorSpec op);

  const StandardOperatorSpec& spec() const { return *op_; }
  StateSpaceDims dims() const override { return op_->dims; }

  /// D-hat_ii = 2(1 + x_i ah_ii), D-hat_ij = 2 sqrt(x_i x_j) ah_ij, D-hat_{i,n+l} = sqrt(x_i) ch_il, D-hat_yy = 2 dh.
  Eigen::MatrixXd D_hat(const Point& z) const;
  Eigen::MatrixXd sigma_hat(const Point& z) const { return dispersion_sqrt(D_hat(z)); }
  /// (bh, eh).
  Eigen::VectorXd drift(const Point& z) const;

  void evaluate(const Point& z, double log_eps, Eigen::VectorXd& drift, Eigen::MatrixXd& sigma) const override;
  std::optional<std::pair<double, double>> constant_1d() const override;

 private:
  std::shared_ptr<const StandardOperatorSpec> op_;
  bool scalar_x_ = false;
};

SdeCoefficients build_sde_coefficients(const SingularOperatorSpec& op);
StandardSdeCoefficients build_standard_sde_coefficients(const StandardOperatorSpec& op);

/// theta solving sigma-hat theta = rhs with rhs_i = sqrt(x_i) sum_j f_ij ln x_j and
/// rhs_{n+l} = sum_j f_{n+l,j} ln x_j + e_l - eh_l.
class GirsanovField {
 public:
  GirsanovField(StandardSdeCoefficients standard, SdeCoefficients singular);

  const StandardSdeCoefficients& standard() const { return standard_; }
  const SdeCoefficients& singular() const { return singular_; }
  /// True when theta vanishes identically (constant b and e = e-hat pattern).
  bool trivially_zero() const { return zero_; }

  /// Requires x_i > 0.
  Eigen::VectorXd theta(const Point& z) const;
  /// Same with ln x_j at max(x_j, log_eps); used along simulated paths.
  void theta_clamped(const Point& z, double log_eps, Eigen::VectorXd& out) const;
  /// sigma-hat(z) theta(z) - rhs(z).
  Eigen::VectorXd residual(const Point& z) const;

 private:
  Eigen::VectorXd rhs(const Point& z, double log_eps) const;

  StandardSdeCoefficients standard_;
  SdeCoefficients singular_;
  bool zero_ = false;
  bool scalar_x_ = false;
};

/// Uses the L-hat partner recorded on the singular spec; kMissingPartner without one.
GirsanovField girsanov_field(const SingularOperatorSpec& op);
Eigen::VectorXd girsanov_theta(const StandardSdeCoefficients& std_coeffs, const SdeCoefficients& sing, const Point& z);

}  // namespace kimura
