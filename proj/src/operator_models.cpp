#include "kimura/operator_models.hpp"

#include "kimura/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kimura {

using nlohmann::json;

namespace {

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) fail(ErrorKind::kDimensionMismatch, std::string(what) + " has the wrong size");
}

void expect_shape(const FieldMatrix& m, std::size_t r, std::size_t c, const char* what) {
  if (m.rows() != r || m.cols() != c) fail(ErrorKind::kDimensionMismatch, std::string(what) + " has the wrong shape");
}

FieldVector vector_from_json(const json& j, const char* key, std::size_t len, const StateSpaceDims& dims,
                             std::optional<double> fallback) {
  if (!j.contains(key)) {
    if (!fallback) fail(ErrorKind::kInvalidConfig, std::string("operator is missing '") + key + "'");
    return FieldVector(len, ScalarField(*fallback));
  }
  const json& v = j.at(key);
  if (!v.is_array()) return FieldVector(len, ScalarField::from_json(v, dims));  // broadcast
  if (v.size() != len) fail(ErrorKind::kInvalidConfig, std::string("'") + key + "' has the wrong length");
  FieldVector out;
  for (const auto& e : v) out.push_back(ScalarField::from_json(e, dims));
  return out;
}

FieldMatrix matrix_from_json(const json& j, const char* key, std::size_t r, std::size_t c, const StateSpaceDims& dims,
                             const FieldMatrix& fallback) {
  if (!j.contains(key)) return fallback;
  return FieldMatrix::from_json(j.at(key), r, c, dims);
}

json vector_to_json(const FieldVector& v) {
  json out = json::array();
  for (const auto& f : v) out.push_back(f.to_json());
  return out;
}

StateSpaceDims dims_from_json(const json& j) {
  StateSpaceDims dims{j.at("dims").value("n", std::size_t{0}), j.at("dims").value("m", std::size_t{0})};
  dims.validate();
  return dims;
}

void require_interior(const Point& z) {
  for (Eigen::Index i = 0; i < z.x.size(); ++i)
    if (!(z.x[i] > 0.0)) fail(ErrorKind::kBoundaryEvaluation, "singular operator evaluated on {x_i = 0}; use limits");
}

}  // namespace

// ---------------------------------------------------------------------------

StandardOperatorSpec StandardOperatorSpec::make(const StateSpaceDims& dims, double b0) {
  dims.validate();
  StandardOperatorSpec op;
  op.dims = dims;
  op.a_hat = FieldMatrix::zeros(dims.n, dims.n);
  op.b_hat = FieldVector(dims.n, ScalarField(b0));
  op.c_hat = FieldMatrix::zeros(dims.n, dims.m);
  op.d_hat = FieldMatrix::identity(dims.m);
  op.e_hat = FieldVector(dims.m, ScalarField(0.0));
  return op;
}

void StandardOperatorSpec::check_shapes() const {
  dims.validate();
  expect_shape(a_hat, dims.n, dims.n, "a_hat");
  expect_size(b_hat.size(), dims.n, "b_hat");
  expect_shape(c_hat, dims.n, dims.m, "c_hat");
  expect_shape(d_hat, dims.m, dims.m, "d_hat");
  expect_size(e_hat.size(), dims.m, "e_hat");
}

json StandardOperatorSpec::to_json() const {
  return json{{"type", "standard"},         {"dims", {{"n", dims.n}, {"m", dims.m}}},
              {"a_hat", a_hat.to_json()},   {"b_hat", vector_to_json(b_hat)},
              {"c_hat", c_hat.to_json()},   {"d_hat", d_hat.to_json()},
              {"e_hat", vector_to_json(e_hat)}};
}

StandardOperatorSpec StandardOperatorSpec::from_json(const json& j) {
  try {
    const StateSpaceDims dims = dims_from_json(j);
    StandardOperatorSpec op = make(dims);
    op.a_hat = matrix_from_json(j, "a_hat", dims.n, dims.n, dims, op.a_hat);
    op.b_hat = vector_from_json(j, "b_hat", dims.n, dims, std::nullopt);
    op.c_hat = matrix_from_json(j, "c_hat", dims.n, dims.m, dims, op.c_hat);
    op.d_hat = matrix_from_json(j, "d_hat", dims.m, dims.m, dims, op.d_hat);
    op.e_hat = vector_from_json(j, "e_hat", dims.m, dims, 0.0);
    return op;
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("standard operator json: ") + e.what());
  }
}

SingularOperatorSpec SingularOperatorSpec::make(const StateSpaceDims& dims, double b0) {
  dims.validate();
  SingularOperatorSpec op;
  op.dims = dims;
  op.a_diag = FieldVector(dims.n, ScalarField(1.0));
  op.a_tilde = FieldMatrix::zeros(dims.n, dims.n);
  op.b = FieldVector(dims.n, ScalarField(b0));
  op.c = FieldMatrix::zeros(dims.n, dims.m);
  op.d = FieldMatrix::identity(dims.m);
  return op;
}

void SingularOperatorSpec::check_shapes() const {
  dims.validate();
  expect_size(a_diag.size(), dims.n, "a_diag");
  expect_shape(a_tilde, dims.n, dims.n, "a_tilde");
  expect_size(b.size(), dims.n, "b");
  expect_shape(c, dims.n, dims.m, "c");
  expect_shape(d, dims.m, dims.m, "d");
}

json SingularOperatorSpec::to_json() const {
  return json{{"type", "singular"},          {"dims", {{"n", dims.n}, {"m", dims.m}}},
              {"a_diag", vector_to_json(a_diag)}, {"a_tilde", a_tilde.to_json()},
              {"b", vector_to_json(b)},      {"c", c.to_json()},
              {"d", d.to_json()}};
}

SingularOperatorSpec SingularOperatorSpec::from_json(const json& j) {
  try {
    const StateSpaceDims dims = dims_from_json(j);
    SingularOperatorSpec op = make(dims);
    op.a_diag = vector_from_json(j, "a_diag", dims.n, dims, 1.0);
    op.a_tilde = matrix_from_json(j, "a_tilde", dims.n, dims.n, dims, op.a_tilde);
    op.b = vector_from_json(j, "b", dims.n, dims, std::nullopt);
    op.c = matrix_from_json(j, "c", dims.n, dims.m, dims, op.c);
    op.d = matrix_from_json(j, "d", dims.m, dims.m, dims, op.d);
    return op;
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("singular operator json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Eigen::VectorXd singular_g(const SingularOperatorSpec& op, const Point& z) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::VectorXd g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = z.x[i];
    double inner = op.a_diag[i].partial(z, i);
    const double at_ii = op.a_tilde(i, i)(z);
    for (std::size_t j = 0; j < n; ++j) {
      const ScalarField& at = op.a_tilde(i, j);
      if (at.is_zero()) continue;
      const double a = at(z);
      inner += a + (i == j ? at_ii : 0.0) + z.x[j] * at.partial(z, j) + a * (op.b[j](z) - 1.0);
    }
    for (std::size_t l = 0; l < m; ++l) inner += op.c(i, l).partial(z, n + l);
    g[i] = op.b[i](z) * op.a_diag[i](z) + xi * inner;
  }
  return g;
}

Eigen::VectorXd singular_e(const SingularOperatorSpec& op, const Point& z) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  for (std::size_t l = 0; l < m; ++l) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const ScalarField& c = op.c(i, l);
      if (c.is_zero()) continue;
      v += z.x[i] * c.partial(z, i) + op.b[i](z) * c(z);
    }
    for (std::size_t k = 0; k < m; ++k) v += op.d(l, k).partial(z, n + k);
    e[l] = v;
  }
  return e;
}

Eigen::MatrixXd singular_f(const SingularOperatorSpec& op, const Point& z) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n + m, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (op.b[j].is_constant()) continue;
    Eigen::VectorXd db(n + m);
    for (std::size_t k = 0; k < n + m; ++k) db[k] = op.b[j].partial(z, k);
    for (std::size_t i = 0; i < n; ++i) {
      double v = db[i];
      for (std::size_t k = 0; k < n; ++k) v += z.x[k] * op.a_tilde(i, k)(z) * db[k];
      for (std::size_t l = 0; l < m; ++l) v += op.c(i, l)(z) * db[n + l];
      f(i, j) = v;
    }
    for (std::size_t l = 0; l < m; ++l) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += z.x[i] * op.c(i, l)(z) * db[i];
      for (std::size_t k = 0; k < m; ++k) v += op.d(l, k)(z) * db[n + k];
      f(n + l, j) = v;
    }
  }
  return f;
}

double apply_standard(const StandardOperatorSpec& op, const SmoothFunction& u, const Point& z) {
  op.check_shapes();
  check_point(op.dims, z);
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  const Eigen::VectorXd du = u.grad(z);
  const Eigen::MatrixXd H = u.hess(z);
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v += z.x[i] * H(i, i) + op.b_hat[i](z) * du[i];
    for (std::size_t j = 0; j < n; ++j) v += z.x[i] * z.x[j] * op.a_hat(i, j)(z) * H(i, j);
    for (std::size_t l = 0; l < m; ++l) v += z.x[i] * op.c_hat(i, l)(z) * H(i, n + l);
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < m; ++l) v += op.d_hat(k, l)(z) * H(n + k, n + l);
    v += op.e_hat[k](z) * du[n + k];
  }
  return v;
}

double apply_singular(const SingularOperatorSpec& op, const SmoothFunction& u, const Point& z) {
  op.check_shapes();
  check_point(op.dims, z);
  require_interior(z);
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  const Eigen::VectorXd du = u.grad(z);
  const Eigen::MatrixXd H = u.hess(z);
  const Eigen::VectorXd g = singular_g(op, z);
  const Eigen::VectorXd e = singular_e(op, z);
  const Eigen::MatrixXd f = singular_f(op, z);
  Eigen::VectorXd lnx(n);
  for (std::size_t j = 0; j < n; ++j) lnx[j] = std::log(z.x[j]);

  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v += z.x[i] * op.a_diag[i](z) * H(i, i);
    for (std::size_t j = 0; j < n; ++j) v += z.x[i] * z.x[j] * op.a_tilde(i, j)(z) * H(i, j);
    for (std::size_t l = 0; l < m; ++l) v += 2.0 * z.x[i] * op.c(i, l)(z) * H(i, n + l);
    v += (g[i] + z.x[i] * f.row(i).dot(lnx)) * du[i];
  }
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = 0; k < m; ++k) v += op.d(l, k)(z) * H(n + l, n + k);
    v += (e[l] + f.row(n + l).dot(lnx)) * du[n + l];
  }
  return v;
}

// ---------------------------------------------------------------------------

ValidationGrid ValidationGrid::lattice(const StateSpaceDims& dims, std::size_t k, Interval y_box) {
  dims.validate();
  if (k == 0) fail(ErrorKind::kInvalidArgument, "validation lattice needs k >= 1");
  ValidationGrid grid;
  const std::size_t d = dims.total();
  std::vector<std::size_t> idx(d, 0);
  for (;;) {
    Point p(Eigen::VectorXd(dims.n), Eigen::VectorXd(dims.m));
    for (std::size_t a = 0; a < d; ++a) {
      const double frac = (static_cast<double>(idx[a]) + 0.5) / static_cast<double>(k);
      p.coord(a) = a < dims.n ? frac : y_box.lo + frac * y_box.length();
    }
    grid.points.push_back(std::move(p));
    std::size_t a = 0;
    while (a < d && ++idx[a] == k) idx[a++] = 0;
    if (a == d) break;
  }
  return grid;
}

json ValidationReport::to_json() const {
  return json{{"passed", passed},
              {"delta", inferred.delta},
              {"K", inferred.K},
              {"b_bar", inferred.b_bar},
              {"min_form_sampled", min_form_sampled},
              {"max_form_sampled", max_form_sampled},
              {"points_checked", points_checked},
              {"failures", failures}};
}

Eigen::MatrixXd ellipticity_form(const SingularOperatorSpec& op, const Point& z) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, i) += op.a_diag[i](z);
    for (std::size_t j = 0; j < n; ++j) A(i, j) += std::sqrt(z.x[i] * z.x[j]) * op.a_tilde(i, j)(z);
    for (std::size_t l = 0; l < m; ++l) {
      const double v = 4.0 * std::sqrt(z.x[i]) * op.c(i, l)(z);
      A(i, n + l) = v;
      A(n + l, i) = v;
    }
  }
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t k = 0; k < m; ++k) A(n + l, n + k) = 4.0 * op.d(l, k)(z);
  return A;
}

Eigen::MatrixXd ellipticity_form(const StandardOperatorSpec& op, const Point& z) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, i) += 1.0;
    for (std::size_t j = 0; j < n; ++j) A(i, j) += std::sqrt(z.x[i] * z.x[j]) * op.a_hat(i, j)(z);
    for (std::size_t l = 0; l < m; ++l) {
      const double v = 4.0 * std::sqrt(z.x[i]) * op.c_hat(i, l)(z);
      A(i, n + l) = v;
      A(n + l, i) = v;
    }
  }
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t k = 0; k < m; ++k) A(n + l, n + k) = 4.0 * op.d_hat(l, k)(z);
  return A;
}

namespace {

// Shared driver: `form` builds the quadratic form, `weights` gives b (or b-hat),
// `flat` checks the flat-region conditions at a point with some x_j >= 1.
template <class Op, class Form, class Flat>
ValidationReport run_validation(const Op& op, const FieldVector& weights, const FieldMatrix& sym_x,
                                const FieldMatrix& sym_y, const ValidationGrid& grid, Form&& form, Flat&& flat) {
  op.check_shapes();
  ValidationReport rep;
  const std::size_t n = op.dims.n;
  const std::size_t d = op.dims.total();
  const double tol = grid.tolerance;
  std::mt19937_64 gen(grid.direction_seed);
  std::normal_distribution<double> normal;

  double min_eig = std::numeric_limits<double>::infinity();
  double max_eig = -std::numeric_limits<double>::infinity();
  double min_sampled = std::numeric_limits<double>::infinity();
  double max_sampled = -std::numeric_limits<double>::infinity();
  double max_b = 0.0;
  double b_bar = std::numeric_limits<double>::infinity();
  bool sym_reported = false;
  bool flat_reported = false;

  auto note = [&](bool& once, const std::string& msg) {
    if (!once) rep.failures.push_back(msg);
    once = true;
  };

  for (const Point& z : grid.points) {
    check_point(op.dims, z);
    ++rep.points_checked;
    for (std::size_t i = 0; i < sym_x.rows(); ++i)
      for (std::size_t j = i + 1; j < sym_x.cols(); ++j)
        if (std::abs(sym_x(i, j)(z) - sym_x(j, i)(z)) > tol) note(sym_reported, "symmetry violation in the x-block");
    for (std::size_t i = 0; i < sym_y.rows(); ++i)
      for (std::size_t j = i + 1; j < sym_y.cols(); ++j)
        if (std::abs(sym_y(i, j)(z) - sym_y(j, i)(z)) > tol) note(sym_reported, "symmetry violation in the y-block");

    Eigen::MatrixXd A = form(z);
    const Eigen::MatrixXd As = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(As, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues()[0]);
    max_eig = std::max(max_eig, es.eigenvalues()[d - 1]);
    for (std::size_t s = 0; s < grid.directions; ++s) {
      Eigen::VectorXd v(d);
      for (std::size_t k = 0; k < d; ++k) v[k] = normal(gen);
      v.normalize();
      const double q = v.dot(As * v);
      min_sampled = std::min(min_sampled, q);
      max_sampled = std::max(max_sampled, q);
    }

    for (std::size_t i = 0; i < n; ++i) {
      max_b = std::max(max_b, std::abs(weights[i](z)));
      Point edge = z;
      edge.x[i] = 0.0;
      b_bar = std::min(b_bar, weights[i](edge));
    }

    bool outside = false;
    for (std::size_t i = 0; i < n; ++i) outside = outside || z.x[i] >= 1.0;
    if (outside) {
      const std::string msg = flat(z);
      if (!msg.empty()) note(flat_reported, msg);
    }
  }

  if (rep.points_checked == 0) {
    rep.failures.push_back("empty validation grid");
    return rep;
  }
  rep.inferred.delta = min_eig;
  rep.inferred.K = std::max(max_eig, max_b);
  rep.inferred.b_bar = n > 0 ? b_bar : 0.0;
  rep.min_form_sampled = min_sampled;
  rep.max_form_sampled = max_sampled;

  if (!(min_eig > 0.0)) rep.failures.push_back("ellipticity lost: smallest eigenvalue " + std::to_string(min_eig));
  if (n > 0 && !(b_bar > 0.0)) rep.failures.push_back("b <= 0 on the degenerate boundary: " + std::to_string(b_bar));
  if (grid.required) {
    const AssumptionConstants& req = *grid.required;
    if (min_eig < req.delta - tol)
      rep.failures.push_back("empirical delta " + std::to_string(min_eig) + " below required " + std::to_string(req.delta));
    if (req.K > 0.0 && rep.inferred.K > req.K + tol)
      rep.failures.push_back("empirical K " + std::to_string(rep.inferred.K) + " above required " + std::to_string(req.K));
    if (n > 0 && b_bar < req.b_bar - tol)
      rep.failures.push_back("empirical b_bar " + std::to_string(b_bar) + " below required " + std::to_string(req.b_bar));
  }
  rep.passed = rep.failures.empty();
  return rep;
}

}  // namespace

ValidationReport validate_assumptions(const SingularOperatorSpec& op, const ValidationGrid& grid) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  const double tol = grid.tolerance;
  auto flat = [&](const Point& z) -> std::string {
    for (std::size_t i = 0; i < n; ++i) {
      if (z.x[i] >= 1.0 && std::abs(z.x[i] * op.a_diag[i](z) - 1.0) > tol) return "flat region: x_j a_jj != 1";
      if (std::abs(op.b[i](z) - 1.0) > tol) return "flat region: b_i != 1";
      for (std::size_t j = 0; j < n; ++j)
        if (std::abs(op.a_tilde(i, j)(z)) > tol) return "flat region: a_tilde != 0";
      for (std::size_t l = 0; l < m; ++l)
        if (std::abs(op.c(i, l)(z)) > tol) return "flat region: c != 0";
    }
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t k = 0; k < m; ++k)
        if (std::abs(op.d(l, k)(z) - (l == k ? 1.0 : 0.0)) > tol) return "flat region: d != I";
    return {};
  };
  return run_validation(op, op.b, op.a_tilde, op.d, grid, [&](const Point& z) { return ellipticity_form(op, z); }, flat);
}

ValidationReport validate_assumptions(const StandardOperatorSpec& op, const ValidationGrid& grid) {
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  const double tol = grid.tolerance;
  auto flat = [&](const Point& z) -> std::string {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && std::abs(op.a_hat(i, j)(z)) > tol) return "flat region: a_hat off-diagonal != 0";
      for (std::size_t l = 0; l < m; ++l)
        if (std::abs(op.c_hat(i, l)(z)) > tol) return "flat region: c_hat != 0";
    }
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t k = 0; k < m; ++k)
        if (std::abs(op.d_hat(l, k)(z) - (l == k ? 1.0 : 0.0)) > tol) return "flat region: d_hat != I";
    return {};
  };
  return run_validation(op, op.b_hat, op.a_hat, op.d_hat, grid,
                        [&](const Point& z) { return ellipticity_form(op, z); }, flat);
}

// ---------------------------------------------------------------------------

namespace {

Box integration_box(const DomainSpec& domain, const SmoothFunction& u, const SmoothFunction& v) {
  Box box = domain.bounding_box();
  for (const SmoothFunction* w : {&u, &v}) {
    if (!w->support) continue;
    for (std::size_t k = 0; k < box.size(); ++k) {
      box.axes[k].lo = std::max(box.axes[k].lo, w->support->axes[k].lo);
      box.axes[k].hi = std::min(box.axes[k].hi, w->support->axes[k].hi);
    }
  }
  for (auto& iv : box.axes) iv.hi = std::max(iv.hi, iv.lo);
  return box;
}

}  // namespace

double bilinear_form(const SingularOperatorSpec& op, const SmoothFunction& u, const SmoothFunction& v,
                     const DomainSpec& domain, const QuadratureConfig& quad) {
  op.check_shapes();
  const std::size_t n = op.dims.n;
  const std::size_t m = op.dims.m;
  const Box box = integration_box(domain, u, v);
  return mu_box_integral(op.measure(), box, quad, [&](const Point& z) -> double {
    if (!domain.contains(z)) return 0.0;
    const Eigen::VectorXd du = u.grad(z);
    const Eigen::VectorXd dv = v.grad(z);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += z.x[i] * op.a_diag[i](z) * du[i] * dv[i];
      for (std::size_t j = 0; j < n; ++j) s += z.x[i] * z.x[j] * op.a_tilde(i, j)(z) * du[i] * dv[j];
      for (std::size_t l = 0; l < m; ++l) s += z.x[i] * op.c(i, l)(z) * (du[i] * dv[n + l] + du[n + l] * dv[i]);
    }
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t k = 0; k < m; ++k) s += op.d(l, k)(z) * du[n + l] * dv[n + k];
    return s;
  });
}

double weak_pairing(const SingularOperatorSpec& op, const SmoothFunction& u, const SmoothFunction& v,
                    const DomainSpec& domain, const QuadratureConfig& quad) {
  const Box box = integration_box(domain, u, v);
  return -mu_box_integral(op.measure(), box, quad, [&](const Point& z) -> double {
    if (!domain.contains(z)) return 0.0;
    const double vz = v(z);
    if (vz == 0.0) return 0.0;
    return apply_singular(op, u, z) * vz;
  });
}

// ---------------------------------------------------------------------------

namespace {

// Values on a tensor lattice with multilinear interpolation, clamped to the box.
struct LatticeField {
  Box box;
  std::vector<std::size_t> counts;
  std::vector<double> values;  // node-major, `stride` entries per node
  std::size_t stride = 1;

  std::size_t node_index(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t a = counts.size(); a-- > 0;) flat = flat * counts[a] + idx[a];
    return flat;
  }

  double interpolate(const Point& z, std::size_t component) const {
    const std::size_t d = counts.size();
    std::vector<std::size_t> base(d);
    std::vector<double> frac(d);
    for (std::size_t a = 0; a < d; ++a) {
      const Interval iv = box.axes[a];
      const double steps = static_cast<double>(counts[a] - 1);
      double pos = counts[a] > 1 ? (z.coord(a) - iv.lo) / iv.length() * steps : 0.0;
      pos = std::clamp(pos, 0.0, steps);
      std::size_t i0 = static_cast<std::size_t>(std::floor(pos));
      if (i0 + 1 >= counts[a]) i0 = counts[a] > 1 ? counts[a] - 2 : 0;
      base[a] = i0;
      frac[a] = counts[a] > 1 ? pos - static_cast<double>(i0) : 0.0;
    }
    double out = 0.0;
    std::vector<std::size_t> idx(d);
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      double w = 1.0;
      for (std::size_t a = 0; a < d; ++a) {
        const bool up = (corner >> a) & 1U;
        if (up && counts[a] == 1) {
          w = 0.0;
          break;
        }
        idx[a] = base[a] + (up ? 1 : 0);
        w *= up ? frac[a] : 1.0 - frac[a];
      }
      if (w != 0.0) out += w * values[node_index(idx) * stride + component];
    }
    return out;
  }
};

}  // namespace

SingularOperatorSpec derive_singular_from_standard(const StandardOperatorSpec& std_op, const DeriveConfig& config) {
  std_op.check_shapes();
  const StateSpaceDims dims = std_op.dims;
  const std::size_t n = dims.n;
  const std::size_t m = dims.m;

  SingularOperatorSpec op = SingularOperatorSpec::make(dims);
  op.a_tilde = std_op.a_hat;
  op.c = FieldMatrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < m; ++l) op.c(i, l) = std_op.c_hat(i, l).scaled(0.5);
  op.d = std_op.d_hat;
  op.partner = std::make_shared<StandardOperatorSpec>(std_op);

  if (std_op.a_hat.all_zero() && std_op.c_hat.all_zero()) {
    op.b = std_op.b_hat;
    return op;
  }
  if (!(config.spacing > 0.0)) fail(ErrorKind::kInvalidArgument, "derive lattice spacing must be positive");

  auto lattice = std::make_shared<LatticeField>();
  if (config.box) {
    if (config.box->size() != dims.total()) fail(ErrorKind::kDimensionMismatch, "derive box must have n+m axes");
    lattice->box = *config.box;
  } else {
    for (std::size_t k = 0; k < dims.total(); ++k) lattice->box.axes.push_back(k < n ? Interval{0.0, 1.0} : Interval{-1.0, 1.0});
  }
  std::size_t total_nodes = 1;
  for (const auto& iv : lattice->box.axes) {
    const auto c = static_cast<std::size_t>(std::llround(iv.length() / config.spacing)) + 1;
    lattice->counts.push_back(std::max<std::size_t>(c, 2));
    total_nodes *= lattice->counts.back();
  }
  lattice->stride = n;
  lattice->values.assign(total_nodes * n, 0.0);

  const std::size_t d = dims.total();
  Point z{Eigen::VectorXd(n), Eigen::VectorXd(m)};
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t node = 0; node < total_nodes; ++node) {
    std::size_t rem = node;
    for (std::size_t a = 0; a < d; ++a) {
      idx[a] = rem % lattice->counts[a];
      rem /= lattice->counts[a];
      const Interval iv = lattice->box.axes[a];
      z.coord(a) = iv.lo + iv.length() * static_cast<double>(idx[a]) / static_cast<double>(lattice->counts[a] - 1);
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      double inner = 0.0;
      const double at_ii = std_op.a_hat(i, i)(z);
      for (std::size_t j = 0; j < n; ++j) {
        const ScalarField& at = std_op.a_hat(i, j);
        const double a = at(z);
        M(i, j) += z.x[i] * a;
        inner += a + (i == j ? at_ii : 0.0) + z.x[j] * at.partial(z, j) - a;
      }
      for (std::size_t l = 0; l < m; ++l) inner += op.c(i, l).partial(z, n + l);
      rhs[i] = std_op.b_hat[i](z) - z.x[i] * inner;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12)
      fail(ErrorKind::kNonDerivable, "I + diag(x) a_hat is singular at a lattice node");
    const Eigen::VectorXd b = lu.solve(rhs);
    for (std::size_t i = 0; i < n; ++i) {
      if (z.x[i] == 0.0 && !(b[i] > config.b_bar))
        fail(ErrorKind::kValidationFailure, "solved b_" + std::to_string(i) + " = " + std::to_string(b[i]) +
                                                " violates the lower bound on {x_i = 0}");
      lattice->values[node * n + i] = b[i];
    }
  }

  op.b.clear();
  for (std::size_t i = 0; i < n; ++i)
    op.b.push_back(ScalarField::function([lattice, i](const Point& p) { return lattice->interpolate(p, i); }));
  return op;
}

}  // namespace kimura
