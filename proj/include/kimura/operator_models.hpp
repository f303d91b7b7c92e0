#pragma once

// Standard (L-hat) and singular (L) Kimura operators: coefficient specs,
// pointwise application, assumption checks, the bilinear form Q and the
// L-hat -> L translation.

#include "kimura/fields.hpp"
#include "kimura/state_geometry.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace kimura {

struct AssumptionConstants {
  double delta = 0.0;
  double K = 0.0;
  double b_bar = 0.0;
};

/// L-hat u = sum_i (x_i u_ii + bh_i u_i) + sum_ij x_i x_j ah_ij u_ij
///         + sum_il x_i ch_il u_{x_i y_l} + sum_kl dh_kl u_{y_k y_l} + sum_l eh_l u_{y_l}.
struct StandardOperatorSpec {
  StateSpaceDims dims;
  FieldMatrix a_hat;  // n x n, symmetric
  FieldVector b_hat;  // n
  FieldMatrix c_hat;  // n x m
  FieldMatrix d_hat;  // m x m, symmetric
  FieldVector e_hat;  // m

  /// a_hat = 0, c_hat = 0, d_hat = I, e_hat = 0, b_hat = b0.
  static StandardOperatorSpec make(const StateSpaceDims& dims, double b0 = 1.0);
  void check_shapes() const;

  nlohmann::json to_json() const;
  static StandardOperatorSpec from_json(const nlohmann::json& j);
};

struct SingularOperatorSpec {
  StateSpaceDims dims;
  FieldVector a_diag;   // n
  FieldMatrix a_tilde;  // n x n, symmetric
  FieldVector b;        // n
  FieldMatrix c;        // n x m
  FieldMatrix d;        // m x m, symmetric
  /// Standard-side partner when this L was derived from an L-hat; needed by
  /// the Girsanov field.
  std::shared_ptr<const StandardOperatorSpec> partner;

  /// a = 1, a_tilde = 0, c = 0, d = I, b = b0.
  static SingularOperatorSpec make(const StateSpaceDims& dims, double b0 = 1.0);
  void check_shapes() const;
  WeightedMeasure measure() const { return {dims, b}; }

  nlohmann::json to_json() const;
  static SingularOperatorSpec from_json(const nlohmann::json& j);
};

// First-order coefficient pieces of L shared with the SDE kernel.
/// g_i = b_i a_ii + x_i (d_i a_ii + sum_j (at_ij + delta_ij at_ii + x_j d_j at_ij + at_ij (b_j - 1)) + sum_l d_{y_l} c_il).
Eigen::VectorXd singular_g(const SingularOperatorSpec& op, const Point& z);
/// e_l = sum_i (x_i d_i c_il + b_i c_il) + sum_k d_{y_k} d_lk.
Eigen::VectorXd singular_e(const SingularOperatorSpec& op, const Point& z);
/// (n+m) x n matrix of the ln x_j multipliers f_{.j}.
Eigen::MatrixXd singular_f(const SingularOperatorSpec& op, const Point& z);

double apply_standard(const StandardOperatorSpec& op, const SmoothFunction& u, const Point& z);
/// Requires every x_i > 0 (the logarithmic drift terms); kBoundaryEvaluation otherwise.
double apply_singular(const SingularOperatorSpec& op, const SmoothFunction& u, const Point& z);

// ---------------------------------------------------------------------------
// Assumption checks

struct ValidationGrid {
  std::vector<Point> points;
  std::size_t directions = 128;
  std::uint64_t direction_seed = 0x5eedULL;
  double tolerance = 1e-10;
  std::optional<AssumptionConstants> required;  // pass thresholds; inferred values only when absent

  /// Tensor lattice of interior midpoints: (0,1)^n x y_box^m, k points per axis.
  static ValidationGrid lattice(const StateSpaceDims& dims, std::size_t k = 8, Interval y_box = {-1.0, 1.0});
};

struct ValidationReport {
  bool passed = false;
  AssumptionConstants inferred;  // empirical delta (min form), K (max form / |b|), b_bar (min b on {x_i=0})
  double min_form_sampled = 0.0;  // min over random unit directions
  double max_form_sampled = 0.0;
  std::size_t points_checked = 0;
  std::vector<std::string> failures;

  nlohmann::json to_json() const;
};

ValidationReport validate_assumptions(const SingularOperatorSpec& op, const ValidationGrid& grid);
ValidationReport validate_assumptions(const StandardOperatorSpec& op, const ValidationGrid& grid);

/// The (n+m) x (n+m) symmetric matrix of the ellipticity quadratic form at z.
Eigen::MatrixXd ellipticity_form(const SingularOperatorSpec& op, const Point& z);
Eigen::MatrixXd ellipticity_form(const StandardOperatorSpec& op, const Point& z);

// ---------------------------------------------------------------------------

/// Q(u, v) under dmu by tensor quadrature over the domain's bounding box
/// (clipped to the supports of u and v when known).
double bilinear_form(const SingularOperatorSpec& op, const SmoothFunction& u, const SmoothFunction& v,
                     const DomainSpec& domain, const QuadratureConfig& quad);

/// -(Lu, v)_{L^2(dmu)} by the same quadrature; equals Q(u, v) for compactly supported u, v.
double weak_pairing(const SingularOperatorSpec& op, const SmoothFunction& u, const SmoothFunction& v,
                    const DomainSpec& domain, const QuadratureConfig& quad);

// ---------------------------------------------------------------------------

struct DeriveConfig {
  double spacing = 1.0 / 64.0;
  std::optional<Box> box;  // default: [0,1] on x axes, [-1,1] on y axes
  double b_bar = 0.0;      // solved b must exceed this on {x_i = 0}
};

/// a = 1, a_tilde = a_hat, c = c_hat / 2, d = d_hat, and b solved pointwise
/// from g_i = bh_i on a lattice (multilinear interpolation, clamped outside
/// the lattice box). When a_hat and c_hat vanish identically b = b_hat.
SingularOperatorSpec derive_singular_from_standard(const StandardOperatorSpec& std_op, const DeriveConfig& config = {});

}  // namespace kimura
