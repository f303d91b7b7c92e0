#include "kimura/error.hpp"
#include "kimura/operator_models.hpp"

#include <cmath>

#include <doctest.h>

using namespace kimura;

namespace {

const StateSpaceDims k1d{1, 0};

SmoothFunction square_x() {
  SmoothFunction u;
  u.value = [](const Point& z) { return z.x[0] * z.x[0]; };
  u.gradient = [](const Point& z) { return Eigen::VectorXd::Constant(1, 2.0 * z.x[0]); };
  u.hessian = [](const Point&) { return Eigen::MatrixXd::Constant(1, 1, 2.0); };
  return u;
}

}  // namespace

TEST_CASE("standard operator on polynomials") {
  const StandardOperatorSpec op = StandardOperatorSpec::make(k1d, 0.7);
  CHECK(apply_standard(op, SmoothFunction::coordinate(0), Point::x_only({0.4})) == doctest::Approx(0.7));
  const double x = 0.4;
  CHECK(apply_standard(op, square_x(), Point::x_only({x})) == doctest::Approx(2.0 * x + 2.0 * 0.7 * x));
  const StandardOperatorSpec lap = StandardOperatorSpec::make({0, 1});
  SmoothFunction y2;
  y2.value = [](const Point& z) { return z.y[0] * z.y[0]; };
  CHECK(apply_standard(lap, y2, Point::y_only({0.3})) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("standard operator matches finite differences for closures") {
  SmoothFunction u;
  u.value = [](const Point& z) { return std::sin(z.x[0]) * std::exp(z.x[0]); };
  const StandardOperatorSpec op = StandardOperatorSpec::make(k1d, 1.3);
  const double x = 0.8;
  const double du = std::exp(x) * (std::sin(x) + std::cos(x));
  const double d2u = 2.0 * std::exp(x) * std::cos(x);
  CHECK(apply_standard(op, u, Point::x_only({x})) == doctest::Approx(x * d2u + 1.3 * du).epsilon(1e-6));
}

TEST_CASE("singular operator carries the logarithmic drift") {
  SingularOperatorSpec op = SingularOperatorSpec::make(k1d);
  const double eps = 0.2;
  op.b[0] = ScalarField::affine(1.0, {eps});
  for (double x : {0.05, 0.5, 2.0}) {
    const double expected = (1.0 + eps * x) + x * eps * std::log(x);
    CHECK(apply_singular(op, SmoothFunction::coordinate(0), Point::x_only({x})) == doctest::Approx(expected));
  }
  CHECK(apply_singular(op, SmoothFunction::constant(3.0), Point::x_only({0.3})) == 0.0);
  CHECK_THROWS_AS(apply_singular(op, SmoothFunction::coordinate(0), Point::x_only({0.0})), KimuraError);
}

TEST_CASE("assumption checks") {
  const ValidationGrid grid = ValidationGrid::lattice(k1d, 8);
  const ValidationReport ok = validate_assumptions(SingularOperatorSpec::make(k1d, 0.5), grid);
  CHECK(ok.passed);
  CHECK(ok.inferred.delta == doctest::Approx(1.0));

  StandardOperatorSpec asym = StandardOperatorSpec::make({0, 2});
  asym.d_hat(0, 1) = ScalarField(0.3);
  CHECK_FALSE(validate_assumptions(asym, ValidationGrid::lattice({0, 2}, 4)).passed);

  const StateSpaceDims d2{2, 0};
  SingularOperatorSpec close = SingularOperatorSpec::make(d2);
  close.a_tilde(0, 1) = ScalarField(-0.99);
  close.a_tilde(1, 0) = ScalarField(-0.99);
  ValidationGrid g2 = ValidationGrid::lattice(d2, 8);
  const ValidationReport loose = validate_assumptions(close, g2);
  // smallest eigenvalue 1 - 0.99 x at the lattice corner x1 = x2 = 15/16
  CHECK(loose.inferred.delta == doctest::Approx(1.0 - 0.99 * 0.9375));
  g2.required = AssumptionConstants{0.1, 100.0, 0.0};
  CHECK_FALSE(validate_assumptions(close, g2).passed);
}

TEST_CASE("bilinear form equals the weak pairing for a bump") {
  const SingularOperatorSpec op = SingularOperatorSpec::make(k1d, 1.0);
  const SmoothFunction u = SmoothFunction::bump(Point::x_only({1.0}), {0.5});
  const DomainSpec dom = DomainSpec::box(k1d, Box{{{0.0, 2.0}}});
  const QuadratureConfig quad{2048};
  const double q = bilinear_form(op, u, u, dom, quad);
  // int x (u')^2 dx by an independent midpoint rule
  double ref = 0.0;
  const std::size_t n = 200000;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 0.5 + (i + 0.5) / n;
    const double g = u.grad(Point::x_only({x}))[0];
    ref += x * g * g / n;
  }
  CHECK(q == doctest::Approx(ref).epsilon(1e-4));
  CHECK(weak_pairing(op, u, u, dom, quad) == doctest::Approx(q).epsilon(1e-3));
}

TEST_CASE("derived singular operator") {
  SUBCASE("vanishing a-hat keeps b-hat") {
    StandardOperatorSpec s = StandardOperatorSpec::make(k1d);
    s.b_hat[0] = ScalarField::affine(1.0, {0.2});
    const SingularOperatorSpec l = derive_singular_from_standard(s);
    CHECK(l.b[0](Point::x_only({0.7})) == doctest::Approx(1.14));
    CHECK(l.partner != nullptr);
  }
  SUBCASE("constant a-hat matches b-hat on the boundary") {
    StandardOperatorSpec s = StandardOperatorSpec::make(k1d, 0.8);
    s.a_hat(0, 0) = ScalarField(0.5);
    const SingularOperatorSpec l = derive_singular_from_standard(s);
    CHECK(l.b[0](Point::x_only({0.0})) == doctest::Approx(0.8).epsilon(1e-6));
    // g reproduces b-hat at lattice points
    CHECK(singular_g(l, Point::x_only({0.5}))[0] == doctest::Approx(0.8).epsilon(1e-3));
  }
}

TEST_CASE("operator json round trip") {
  StandardOperatorSpec s = StandardOperatorSpec::make({1, 1}, 0.6);
  s.c_hat(0, 0) = ScalarField(0.25);
  s.e_hat[0] = ScalarField::trig_y(0.1, 0.2, 0, 3.0);
  const StandardOperatorSpec back = StandardOperatorSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  const SingularOperatorSpec l = SingularOperatorSpec::make({2, 0}, 1.5);
  CHECK(SingularOperatorSpec::from_json(l.to_json()).to_json() == l.to_json());
}
