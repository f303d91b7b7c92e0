#pragma once

// Coefficient fields z -> R with derivative access, and smooth test
// functions with gradient / Hessian access.

#include "kimura/state_geometry.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

namespace kimura {

/// Coefficient field. Built-in families (constant, affine, trigonometric in
/// one y coordinate) carry analytic derivatives and are JSON round-trippable;
/// arbitrary closures fall back to centered differences with step
/// h = 1e-5 (1 + |z|) (one-sided second order near x_i = 0).
class ScalarField {
 public:
  enum class Kind { kConstant, kAffine, kTrigY, kFunction };

  using ValueFn = std::function<double(const Point&)>;
  using PartialFn = std::function<double(const Point&, std::size_t)>;

  ScalarField() = default;  // identically zero
  ScalarField(double c) : constant_(c) {}  // NOLINT(google-explicit-constructor)

  static ScalarField constant(double c) { return ScalarField(c); }
  /// c0 + sum_k grad[k] z_k over flat coordinates.
  static ScalarField affine(double c0, std::vector<double> grad);
  /// c0 + amplitude sin(frequency y_l + phase).
  static ScalarField trig_y(double c0, double amplitude, std::size_t y_index, double frequency, double phase = 0.0);
  static ScalarField function(ValueFn value, PartialFn partial = {});

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::kConstant; }
  bool is_zero() const { return kind_ == Kind::kConstant && constant_ == 0.0; }
  bool has_analytic_partials() const { return kind_ != Kind::kFunction || static_cast<bool>(partial_); }

  double operator()(const Point& z) const {
    switch (kind_) {
      case Kind::kConstant: return constant_;
      case Kind::kAffine: return eval_affine(z);
      case Kind::kTrigY: return constant_ + amplitude_ * std::sin(frequency_ * z.y[y_index_] + phase_);
      case Kind::kFunction: return value_(z);
    }
    return 0.0;
  }

  /// s * (this field), staying in the same family when possible.
  ScalarField scaled(double s) const;

  /// d/dz_k at z (flat index).
  double partial(const Point& z, std::size_t k) const;

  nlohmann::json to_json() const;
  static ScalarField from_json(const nlohmann::json& j, const StateSpaceDims& dims);

 private:
  double eval_affine(const Point& z) const;
  double finite_difference(const Point& z, std::size_t k) const;

  Kind kind_ = Kind::kConstant;
  double constant_ = 0.0;
  std::vector<double> grad_;
  double amplitude_ = 0.0;
  double frequency_ = 0.0;
  double phase_ = 0.0;
  std::size_t y_index_ = 0;
  ValueFn value_;
  PartialFn partial_;
};

using FieldVector = std::vector<ScalarField>;

class FieldMatrix {
 public:
  FieldMatrix() = default;
  FieldMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}

  static FieldMatrix zeros(std::size_t rows, std::size_t cols) { return FieldMatrix(rows, cols); }
  static FieldMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  ScalarField& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const ScalarField& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  bool all_zero() const;
  Eigen::MatrixXd evaluate(const Point& z) const;

  nlohmann::json to_json() const;
  static FieldMatrix from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const StateSpaceDims& dims);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<ScalarField> entries_;
};

Eigen::VectorXd evaluate(const FieldVector& v, const Point& z);

/// Twice differentiable test function u. Missing gradient / Hessian closures
/// are replaced by centered differences. `support`, when set, is a closed box
/// outside which u vanishes identically.
struct SmoothFunction {
  std::function<double(const Point&)> value;
  std::function<Eigen::VectorXd(const Point&)> gradient;
  std::function<Eigen::MatrixXd(const Point&)> hessian;
  std::optional<Box> support;

  double operator()(const Point& z) const { return value(z); }
  Eigen::VectorXd grad(const Point& z) const;
  Eigen::MatrixXd hess(const Point& z) const;

  static SmoothFunction constant(double c);
  /// Coordinate k of z.
  static SmoothFunction coordinate(std::size_t k);
  /// Product bump prod_k exp(1 - 1/(1 - s_k^2)), s_k = (z_k - c_k)/w_k, peak value 1,
  /// supported on prod_k [c_k - w_k, c_k + w_k].
  static SmoothFunction bump(const Point& center, const std::vector<double>& half_widths);
};

}  // namespace kimura
