#include "kimura/sde_kernel.hpp"

#include "kimura/error.hpp"

#include <cmath>
#include <string>

namespace kimura {

Eigen::MatrixXd dispersion_sqrt(const Eigen::MatrixXd& D) {
  if (D.rows() != D.cols()) fail(ErrorKind::kInvalidMatrix, "dispersion_sqrt needs a square matrix");
  const Eigen::Index d = D.rows();
  if (d == 0) return D;
  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  if (!D.allFinite()) fail(ErrorKind::kNumericFailure, "non-finite diffusion matrix");
  if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) fail(ErrorKind::kInvalidMatrix, "diffusion matrix is not symmetric");
  const double clip = -1e-12 * scale;
  if (d == 1) {
    const double v = D(0, 0);
    if (v < clip) fail(ErrorKind::kEllipticityViolation, "negative eigenvalue " + std::to_string(v));
    return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(v, 0.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (D + D.transpose()));
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::MatrixXd V = es.eigenvectors();
  for (Eigen::Index k = 0; k < d; ++k) {
    if (lam[k] < clip) fail(ErrorKind::kEllipticityViolation, "negative eigenvalue " + std::to_string(lam[k]));
    lam[k] = std::sqrt(std::max(lam[k], 0.0));
    for (Eigen::Index r = 0; r < d; ++r) {
      if (V(r, k) == 0.0) continue;
      if (V(r, k) < 0.0) V.col(k) *= -1.0;
      break;
    }
  }
  Eigen::MatrixXd S = V * lam.asDiagonal() * V.transpose();
  return 0.5 * (S + S.transpose());
}

// ---------------------------------------------------------------------------

SdeCoefficients::SdeCoefficients(SingularOperatorSpec op)
    : op_(std::make_shared<const SingularOperatorSpec>(std::move(op))) {
  op_->check_shapes();
  scalar_x_ = op_->dims.n == 1 && op_->dims.m == 0;
  for (const auto& b : op_->b) has_log_terms_ = has_log_terms_ || !b.is_constant();
}

Eigen::MatrixXd SdeCoefficients::D(const Point& z) const {
  const SingularOperatorSpec& op = *op_;
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = std::max(z.x[i], 0.0);
    out(i, i) = 2.0 * op.a_diag[i](z) + 2.0 * xi * op.a_tilde(i, i)(z);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) out(i, j) = 2.0 * std::sqrt(xi * std::max(z.x[j], 0.0)) * op.a_tilde(i, j)(z);
    for (std::size_t l = 0; l < m; ++l) {
      const double v = 2.0 * std::sqrt(xi) * op.c(i, l)(z);
      out(i, n + l) = v;
      out(n + l, i) = v;
    }
  }
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t k = 0; k < m; ++k) out(n + l, n + k) = 2.0 * op.d(l, k)(z);
  return out;
}

Eigen::VectorXd SdeCoefficients::drift(const Point& z, double log_eps) const {
  const std::size_t n = op_->dims.n;
  const std::size_t m = op_->dims.m;
  Eigen::VectorXd out(n + m);
  out.head(n) = g(z);
  out.tail(m) = e(z);
  if (has_log_terms_) {
    const Eigen::MatrixXd F = f(z);
    Eigen::VectorXd lnx(n);
    for (std::size_t j = 0; j < n; ++j) lnx[j] = std::log(std::max(z.x[j], log_eps));
    const Eigen::VectorXd s = F * lnx;
    for (std::size_t i = 0; i < n; ++i) out[i] += z.x[i] * s[i];
    for (std::size_t l = 0; l < m; ++l) out[n + l] += s[n + l];
  }
  return out;
}

Eigen::MatrixXd SdeCoefficients::alpha(const Point& z) const {
  const std::size_t n = op_->dims.n;
  Eigen::MatrixXd A = D(z);
  const Eigen::Index d = A.rows();
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) {
      double s = 1.0;
      if (static_cast<std::size_t>(r) < n) s *= std::sqrt(std::max(z.x[r], 0.0));
      if (static_cast<std::size_t>(c) < n) s *= std::sqrt(std::max(z.x[c], 0.0));
      A(r, c) *= s;
    }
  return A;
}

void SdeCoefficients::evaluate(const Point& z, double log_eps, Eigen::VectorXd& drift_out, Eigen::MatrixXd& sigma_out) const {
  if (scalar_x_) {
    const SingularOperatorSpec& op = *op_;
    const double x = z.x[0];
    const double a = op.a_diag[0](z);
    const double at = op.a_tilde(0, 0)(z);
    const double b = op.b[0](z);
    double inner = op.a_diag[0].partial(z, 0);
    if (!op.a_tilde(0, 0).is_zero()) inner += 2.0 * at + x * op.a_tilde(0, 0).partial(z, 0) + at * (b - 1.0);
    double dr = b * a + x * inner;
    if (has_log_terms_) {
      const double db = op.b[0].partial(z, 0);
      dr += x * (db + x * at * db) * std::log(std::max(x, log_eps));
    }
    const double D00 = 2.0 * a + 2.0 * std::max(x, 0.0) * at;
    if (D00 < -1e-12) fail(ErrorKind::kEllipticityViolation, "negative diffusion coefficient " + std::to_string(D00));
    drift_out.resize(1);
    sigma_out.resize(1, 1);
    drift_out[0] = dr;
    sigma_out(0, 0) = std::sqrt(std::max(D00, 0.0));
    return;
  }
  drift_out = drift(z, log_eps);
  sigma_out = dispersion_sqrt(D(z));
}

std::optional<std::pair<double, double>> SdeCoefficients::constant_1d() const {
  if (!scalar_x_) return std::nullopt;
  const SingularOperatorSpec& op = *op_;
  if (!op.a_diag[0].is_constant() || !op.a_tilde(0, 0).is_zero() || !op.b[0].is_constant()) return std::nullopt;
  const Point origin = Point::x_only({0.0});
  const double a = op.a_diag[0](origin);
  return std::make_pair(a, a * op.b[0](origin));
}

// ---------------------------------------------------------------------------

StandardSdeCoefficients::StandardSdeCoefficients(StandardOperatorSpec op)
    : op_(std::make_shared<const StandardOperatorSpec>(std::move(op))) {
  op_->check_shapes();
  scalar_x_ = op_->dims.n == 1 && op_->dims.m == 0;
}

Eigen::MatrixXd StandardSdeCoefficients::D_hat(const Point& z) const {
  const StandardOperatorSpec& op = *op_;
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = std::max(z.x[i], 0.0);
    out(i, i) = 2.0 * (1.0 + xi * op.a_hat(i, i)(z));
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) out(i, j) = 2.0 * std::sqrt(xi * std::max(z.x[j], 0.0)) * op.a_hat(i, j)(z);
    for (std::size_t l = 0; l < m; ++l) {
      const double v = std::sqrt(xi) * op.c_hat(i, l)(z);
      out(i, n + l) = v;
      out(n + l, i) = v;
    }
  }
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t k = 0; k < m; ++k) out(n + l, n + k) = 2.0 * op.d_hat(l, k)(z);
  return out;
}

Eigen::VectorXd StandardSdeCoefficients::drift(const Point& z) const {
  const std::size_t n = op_->dims.n;
  const std::size_t m = op_->dims.m;
  Eigen::VectorXd out(n + m);
  out.head(n) = kimura::evaluate(op_->b_hat, z);
  out.tail(m) = kimura::evaluate(op_->e_hat, z);
  return out;
}

void StandardSdeCoefficients::evaluate(const Point& z, double, Eigen::VectorXd& drift_out, Eigen::MatrixXd& sigma_out) const {
  if (scalar_x_) {
    const double D00 = 2.0 * (1.0 + std::max(z.x[0], 0.0) * op_->a_hat(0, 0)(z));
    if (D00 < -1e-12) fail(ErrorKind::kEllipticityViolation, "negative diffusion coefficient " + std::to_string(D00));
    drift_out.resize(1);
    sigma_out.resize(1, 1);
    drift_out[0] = op_->b_hat[0](z);
    sigma_out(0, 0) = std::sqrt(std::max(D00, 0.0));
    return;
  }
  drift_out = drift(z);
  sigma_out = dispersion_sqrt(D_hat(z));
}

std::optional<std::pair<double, double>> StandardSdeCoefficients::constant_1d() const {
  if (!scalar_x_) return std::nullopt;
  if (!op_->a_hat(0, 0).is_zero() || !op_->b_hat[0].is_constant()) return std::nullopt;
  return std::make_pair(1.0, op_->b_hat[0](Point::x_only({0.0})));
}

SdeCoefficients build_sde_coefficients(const SingularOperatorSpec& op) { return SdeCoefficients(op); }
StandardSdeCoefficients build_standard_sde_coefficients(const StandardOperatorSpec& op) {
  return StandardSdeCoefficients(op);
}

// ---------------------------------------------------------------------------

GirsanovField::GirsanovField(StandardSdeCoefficients standard, SdeCoefficients singular)
    : standard_(std::move(standard)), singular_(std::move(singular)) {
  if (!(standard_.dims() == singular_.dims())) fail(ErrorKind::kDimensionMismatch, "Girsanov pair has mismatched dimensions");
  const auto& sing = singular_.spec();
  const auto& stdop = standard_.spec();
  bool zero = true;
  for (const auto& b : sing.b) zero = zero && b.is_constant();
  // e_l - eh_l must vanish too; only decidable here for constant data.
  for (std::size_t l = 0; l < sing.dims.m && zero; ++l) {
    zero = stdop.e_hat[l].is_zero();
    for (std::size_t i = 0; i < sing.dims.n; ++i) zero = zero && sing.c(i, l).is_zero();
    for (std::size_t k = 0; k < sing.dims.m; ++k) zero = zero && sing.d(l, k).is_constant();
  }
  zero_ = zero;
  scalar_x_ = sing.dims.n == 1 && sing.dims.m == 0;
}

Eigen::VectorXd GirsanovField::rhs(const Point& z, double log_eps) const {
  const std::size_t n = singular_.dims().n;
  const std::size_t m = singular_.dims().m;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n + m);
  const Eigen::MatrixXd F = singular_.f(z);
  Eigen::VectorXd lnx(n);
  for (std::size_t j = 0; j < n; ++j) lnx[j] = std::log(std::max(z.x[j], log_eps));
  const Eigen::VectorXd s = F * lnx;
  for (std::size_t i = 0; i < n; ++i) r[i] = std::sqrt(std::max(z.x[i], 0.0)) * s[i];
  if (m > 0) {
    const Eigen::VectorXd e = singular_.e(z);
    for (std::size_t l = 0; l < m; ++l) r[n + l] = s[n + l] + e[l] - standard_.spec().e_hat[l](z);
  }
  return r;
}

void GirsanovField::theta_clamped(const Point& z, double log_eps, Eigen::VectorXd& out) const {
  const std::size_t d = singular_.dims().total();
  if (zero_) {
    out.setZero(d);
    return;
  }
  if (scalar_x_) {
    const auto& op = singular_.spec();
    const double x = std::max(z.x[0], 0.0);
    const double db = op.b[0].partial(z, 0);
    const double f = db + x * op.a_tilde(0, 0)(z) * db;
    const double s = std::sqrt(2.0 * (1.0 + x * standard_.spec().a_hat(0, 0)(z)));
    if (!(s > 0.0)) fail(ErrorKind::kEllipticityViolation, "sigma-hat is singular");
    out.resize(1);
    out[0] = std::sqrt(x) * f * std::log(std::max(x, log_eps)) / s;
    return;
  }
  const Eigen::MatrixXd S = standard_.sigma_hat(z);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible()) fail(ErrorKind::kEllipticityViolation, "sigma-hat is singular");
  out = lu.solve(rhs(z, log_eps));
}

Eigen::VectorXd GirsanovField::theta(const Point& z) const {
  for (Eigen::Index i = 0; i < z.x.size(); ++i)
    if (!(z.x[i] > 0.0)) fail(ErrorKind::kBoundaryEvaluation, "theta requires x_i > 0");
  Eigen::VectorXd out;
  theta_clamped(z, 0.0, out);
  return out;
}

Eigen::VectorXd GirsanovField::residual(const Point& z) const {
  return standard_.sigma_hat(z) * theta(z) - rhs(z, 0.0);
}

GirsanovField girsanov_field(const SingularOperatorSpec& op) {
  if (!op.partner) fail(ErrorKind::kMissingPartner, "singular operator has no standard-side partner for theta");
  return GirsanovField(StandardSdeCoefficients(*op.partner), SdeCoefficients(op));
}

Eigen::VectorXd girsanov_theta(const StandardSdeCoefficients& std_coeffs, const SdeCoefficients& sing, const Point& z) {
  return GirsanovField(std_coeffs, sing).theta(z);
}

}  // namespace kimura
