#include "kimura/fields.hpp"

#include "kimura/error.hpp"

#include <cmath>
#include <string>

namespace kimura {

using nlohmann::json;

ScalarField ScalarField::affine(double c0, std::vector<double> grad) {
  ScalarField f(c0);
  f.kind_ = Kind::kAffine;
  f.grad_ = std::move(grad);
  return f;
}

ScalarField ScalarField::trig_y(double c0, double amplitude, std::size_t y_index, double frequency, double phase) {
  ScalarField f(c0);
  f.kind_ = Kind::kTrigY;
  f.amplitude_ = amplitude;
  f.y_index_ = y_index;
  f.frequency_ = frequency;
  f.phase_ = phase;
  return f;
}

ScalarField ScalarField::function(ValueFn value, PartialFn partial) {
  if (!value) fail(ErrorKind::kInvalidArgument, "function field without a value closure");
  ScalarField f;
  f.kind_ = Kind::kFunction;
  f.value_ = std::move(value);
  f.partial_ = std::move(partial);
  return f;
}

ScalarField ScalarField::scaled(double s) const {
  ScalarField out = *this;
  switch (kind_) {
    case Kind::kConstant: out.constant_ *= s; break;
    case Kind::kAffine:
      out.constant_ *= s;
      for (auto& g : out.grad_) g *= s;
      break;
    case Kind::kTrigY:
      out.constant_ *= s;
      out.amplitude_ *= s;
      break;
    case Kind::kFunction: {
      auto v = value_;
      auto p = partial_;
      out.value_ = [v, s](const Point& z) { return s * v(z); };
      if (p) out.partial_ = [p, s](const Point& z, std::size_t k) { return s * p(z, k); };
      break;
    }
  }
  return out;
}

double ScalarField::eval_affine(const Point& z) const {
  double v = constant_;
  const std::size_t n = z.x.size();
  for (std::size_t k = 0; k < grad_.size(); ++k) v += grad_[k] * (k < n ? z.x[k] : z.y[k - n]);
  return v;
}

double ScalarField::partial(const Point& z, std::size_t k) const {
  switch (kind_) {
    case Kind::kConstant: return 0.0;
    case Kind::kAffine: return k < grad_.size() ? grad_[k] : 0.0;
    case Kind::kTrigY:
      if (k != z.x.size() + y_index_) return 0.0;
      return amplitude_ * frequency_ * std::cos(frequency_ * z.y[y_index_] + phase_);
    case Kind::kFunction:
      if (partial_) return partial_(z, k);
      return finite_difference(z, k);
  }
  return 0.0;
}

double ScalarField::finite_difference(const Point& z, std::size_t k) const {
  const double zk = z.coord(k);
  const double h = 1e-5 * (1.0 + std::abs(zk));
  Point p = z;
  if (k < static_cast<std::size_t>(z.x.size()) && zk - h < 0.0) {
    // one-sided, second order
    const double f0 = value_(p);
    p.coord(k) = zk + h;
    const double f1 = value_(p);
    p.coord(k) = zk + 2.0 * h;
    const double f2 = value_(p);
    return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
  }
  p.coord(k) = zk + h;
  const double fp = value_(p);
  p.coord(k) = zk - h;
  const double fm = value_(p);
  return (fp - fm) / (2.0 * h);
}

json ScalarField::to_json() const {
  switch (kind_) {
    case Kind::kConstant: return json{{"kind", "constant"}, {"value", constant_}};
    case Kind::kAffine: return json{{"kind", "affine"}, {"const", constant_}, {"grad", grad_}};
    case Kind::kTrigY:
      return json{{"kind", "trig_y"}, {"const", constant_}, {"amplitude", amplitude_},
                  {"index", y_index_}, {"frequency", frequency_}, {"phase", phase_}};
    case Kind::kFunction: break;
  }
  fail(ErrorKind::kInvalidArgument, "closure fields are not serializable");
}

ScalarField ScalarField::from_json(const json& j, const StateSpaceDims& dims) {
  if (j.is_number()) return ScalarField(j.get<double>());
  if (!j.is_object() || !j.contains("kind")) fail(ErrorKind::kInvalidConfig, "field must be a number or an object with \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return ScalarField(j.at("value").get<double>());
  if (kind == "affine") {
    auto grad = j.at("grad").get<std::vector<double>>();
    if (grad.size() != dims.total()) fail(ErrorKind::kInvalidConfig, "affine grad length must be n+m");
    return affine(j.value("const", 0.0), std::move(grad));
  }
  if (kind == "trig_y") {
    const auto index = j.at("index").get<std::size_t>();
    if (index >= dims.m) fail(ErrorKind::kInvalidConfig, "trig_y index out of range");
    return trig_y(j.value("const", 0.0), j.at("amplitude").get<double>(), index, j.value("frequency", 1.0),
                  j.value("phase", 0.0));
  }
  fail(ErrorKind::kInvalidConfig, "unknown field kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

FieldMatrix FieldMatrix::identity(std::size_t n) {
  FieldMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool FieldMatrix::all_zero() const {
  for (const auto& e : entries_)
    if (!e.is_zero()) return false;
  return true;
}

Eigen::MatrixXd FieldMatrix::evaluate(const Point& z) const {
  Eigen::MatrixXd out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(i, j) = (*this)(i, j)(z);
  return out;
}

json FieldMatrix::to_json() const {
  json rows = json::array();
  for (std::size_t i = 0; i < rows_; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < cols_; ++j) row.push_back((*this)(i, j).to_json());
    rows.push_back(std::move(row));
  }
  return rows;
}

FieldMatrix FieldMatrix::from_json(const json& j, std::size_t rows, std::size_t cols, const StateSpaceDims& dims) {
  FieldMatrix m(rows, cols);
  if (j.is_object() && j.contains("diagonal")) {
    const auto& diag = j.at("diagonal");
    if (rows != cols || !diag.is_array() || diag.size() != rows)
      fail(ErrorKind::kInvalidConfig, "diagonal matrix field has wrong length");
    for (std::size_t i = 0; i < rows; ++i) m(i, i) = ScalarField::from_json(diag[i], dims);
    return m;
  }
  if (!j.is_array() || j.size() != rows) fail(ErrorKind::kInvalidConfig, "matrix field has wrong row count");
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) fail(ErrorKind::kInvalidConfig, "matrix field has wrong column count");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = ScalarField::from_json(j[i][c], dims);
  }
  return m;
}

Eigen::VectorXd evaluate(const FieldVector& v, const Point& z) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i](z);
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd SmoothFunction::grad(const Point& z) const {
  if (gradient) return gradient(z);
  const std::size_t d = z.dims().total();
  Eigen::VectorXd g(d);
  Point p = z;
  for (std::size_t k = 0; k < d; ++k) {
    const double zk = z.coord(k);
    const double h = 1e-5 * (1.0 + std::abs(zk));
    p.coord(k) = zk + h;
    const double fp = value(p);
    p.coord(k) = zk - h;
    const double fm = value(p);
    p.coord(k) = zk;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd SmoothFunction::hess(const Point& z) const {
  if (hessian) return hessian(z);
  const std::size_t d = z.dims().total();
  Eigen::MatrixXd H(d, d);
  Point p = z;
  const double f0 = value(z);
  for (std::size_t a = 0; a < d; ++a) {
    const double ha = 1e-4 * (1.0 + std::abs(z.coord(a)));
    for (std::size_t b = a; b < d; ++b) {
      if (a == b) {
        p.coord(a) = z.coord(a) + ha;
        const double fp = value(p);
        p.coord(a) = z.coord(a) - ha;
        const double fm = value(p);
        p.coord(a) = z.coord(a);
        H(a, a) = (fp - 2.0 * f0 + fm) / (ha * ha);
        continue;
      }
      const double hb = 1e-4 * (1.0 + std::abs(z.coord(b)));
      double acc = 0.0;
      for (int sa : {1, -1})
        for (int sb : {1, -1}) {
          p.coord(a) = z.coord(a) + sa * ha;
          p.coord(b) = z.coord(b) + sb * hb;
          acc += sa * sb * value(p);
        }
      p.coord(a) = z.coord(a);
      p.coord(b) = z.coord(b);
      H(a, b) = H(b, a) = acc / (4.0 * ha * hb);
    }
  }
  return H;
}

SmoothFunction SmoothFunction::constant(double c) {
  SmoothFunction f;
  f.value = [c](const Point&) { return c; };
  f.gradient = [](const Point& z) { return Eigen::VectorXd::Zero(z.dims().total()).eval(); };
  f.hessian = [](const Point& z) {
    const auto d = z.dims().total();
    return Eigen::MatrixXd::Zero(d, d).eval();
  };
  return f;
}

SmoothFunction SmoothFunction::coordinate(std::size_t k) {
  SmoothFunction f;
  f.value = [k](const Point& z) { return z.coord(k); };
  f.gradient = [k](const Point& z) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(z.dims().total());
    g[k] = 1.0;
    return g;
  };
  f.hessian = [](const Point& z) {
    const auto d = z.dims().total();
    return Eigen::MatrixXd::Zero(d, d).eval();
  };
  return f;
}

namespace {

// phi(s) = exp(1 - 1/(1 - s^2)) and its first two derivatives.
struct BumpFactor {
  double v = 0.0, d1 = 0.0, d2 = 0.0;
};

BumpFactor bump_factor(double s) {
  BumpFactor out;
  if (std::abs(s) >= 1.0) return out;
  const double q = 1.0 - s * s;
  out.v = std::exp(1.0 - 1.0 / q);
  const double g = -2.0 * s / (q * q);
  const double dg = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
  out.d1 = out.v * g;
  out.d2 = out.v * (g * g + dg);
  return out;
}

}  // namespace

SmoothFunction SmoothFunction::bump(const Point& center, const std::vector<double>& half_widths) {
  const Eigen::VectorXd c = center.flat();
  const std::size_t d = c.size();
  if (half_widths.size() != d) fail(ErrorKind::kDimensionMismatch, "bump half-width count must equal n+m");
  for (double w : half_widths)
    if (!(w > 0.0)) fail(ErrorKind::kInvalidArgument, "bump half-widths must be positive");
  const std::vector<double> w = half_widths;

  auto factors = [c, w, d](const Point& z) {
    std::vector<BumpFactor> fs(d);
    for (std::size_t k = 0; k < d; ++k) fs[k] = bump_factor((z.coord(k) - c[k]) / w[k]);
    return fs;
  };

  SmoothFunction f;
  f.value = [factors](const Point& z) {
    double v = 1.0;
    for (const auto& bf : factors(z)) v *= bf.v;
    return v;
  };
  f.gradient = [factors, w, d](const Point& z) {
    const auto fs = factors(z);
    Eigen::VectorXd g(d);
    for (std::size_t k = 0; k < d; ++k) {
      double v = fs[k].d1 / w[k];
      for (std::size_t j = 0; j < d; ++j)
        if (j != k) v *= fs[j].v;
      g[k] = v;
    }
    return g;
  };
  f.hessian = [factors, w, d](const Point& z) {
    const auto fs = factors(z);
    Eigen::MatrixXd H(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        double v = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
          if (j == a && j == b) v *= fs[j].d2 / (w[j] * w[j]);
          else if (j == a || j == b) v *= fs[j].d1 / w[j];
          else v *= fs[j].v;
        }
        H(a, b) = v;
      }
    return H;
  };
  Box support;
  for (std::size_t k = 0; k < d; ++k) support.axes.push_back({c[k] - w[k], c[k] + w[k]});
  f.support = support;
  return f;
}

}  // namespace kimura
