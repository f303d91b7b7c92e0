#include "kimura/error.hpp"
#include "kimura/state_geometry.hpp"

#include <cmath>

#include <doctest.h>

using namespace kimura;

namespace {

Point xy(double x, double y) { return Point(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, y)); }

}  // namespace

TEST_CASE("rho on the degenerate axis") {
  CHECK(rho(Point::x_only({0.0}), Point::x_only({0.04})) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(rho(Point::x_only({0.3}), Point::x_only({0.3})) == 0.0);
  CHECK(rho(Point::x_only({2.0}), Point::x_only({3.0})) == 1.0);
  CHECK(rho(Point::x_only({0.25}), Point::x_only({1.0})) == doctest::Approx(0.5));
  // additive through 1
  CHECK(degenerate_coordinate_distance(0.25, 4.0) == doctest::Approx(3.5));
  CHECK(degenerate_coordinate_distance(4.0, 0.25) == doctest::Approx(3.5));
}

TEST_CASE("rho is a max over coordinates and symmetric") {
  const Point a = xy(0.09, 0.5);
  const Point b = xy(0.16, -0.1);
  CHECK(rho(a, b) == doctest::Approx(0.6));
  CHECK(rho(a, b) == rho(b, a));
  CHECK(rho(a, b) > 0.0);
}

TEST_CASE("degenerate coordinate ball") {
  const Interval iv = degenerate_coordinate_ball(0.25, 0.1);
  CHECK(iv.lo == doctest::Approx(0.16));
  CHECK(iv.hi == doctest::Approx(0.36));
  const Interval at0 = degenerate_coordinate_ball(0.0, 0.3);
  CHECK(at0.lo == 0.0);
  CHECK(at0.hi == doctest::Approx(0.09));
  const Interval far = degenerate_coordinate_ball(3.0, 0.5);
  CHECK(far.lo == doctest::Approx(2.5));
  CHECK(far.hi == doctest::Approx(3.5));
}

TEST_CASE("mu density") {
  const StateSpaceDims d1{1, 0};
  CHECK(mu_density(WeightedMeasure::constant(d1, 1.0), Point::x_only({0.7})) == 1.0);
  CHECK(mu_density(WeightedMeasure::constant(d1, 2.0), Point::x_only({0.5})) == doctest::Approx(0.5));
  WeightedMeasure two{{2, 0}, {ScalarField(0.5), ScalarField(3.0)}};
  CHECK(mu_density(two, Point::x_only({0.25, 2.0})) == doctest::Approx(8.0));
  CHECK_THROWS_AS(mu_density(WeightedMeasure::constant(d1, 0.5), Point::x_only({0.0})), KimuraError);
}

TEST_CASE("mu of balls") {
  const QuadratureConfig quad{256};
  const StateSpaceDims d1{1, 0};
  CHECK(mu_ball(WeightedMeasure::constant(d1, 1.0), {Point::x_only({2.0}), 0.5}, quad) == doctest::Approx(1.0));
  for (double b0 : {0.5, 0.75, 2.0}) {
    const double r = 0.05;
    const double exact = std::pow(r, 2.0 * b0) / b0;
    CHECK(mu_ball(WeightedMeasure::constant(d1, b0), {Point::x_only({0.0}), r}, quad) ==
          doctest::Approx(exact).epsilon(1e-3));
  }
  const StateSpaceDims y1{0, 1};
  CHECK(mu_ball(WeightedMeasure::constant(y1, 1.0), {Point::y_only({0.0}), 1.0}, quad) == doctest::Approx(2.0));
}

TEST_CASE("mu ball quadrature converges at second order") {
  const StateSpaceDims dims{1, 1};
  const WeightedMeasure mu{dims, {ScalarField::affine(1.0, {0.5, 0.0})}};
  const Box box{{{0.3, 0.9}, {-0.5, 0.5}}};
  // int_0.3^0.9 x^{0.5x} dx with y-length 1, fine reference
  const double ref = mu_box(mu, box, {4096});
  const double e1 = std::abs(mu_box(mu, box, {16}) - ref);
  const double e2 = std::abs(mu_box(mu, box, {32}) - ref);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("ball comparator") {
  const StateSpaceDims d1{1, 0};
  const double r = 0.1;
  CHECK(mu_ball_comparator(WeightedMeasure::constant(d1, 1.0), {Point::x_only({0.3}), r}) == doctest::Approx(r));
  CHECK(mu_ball_comparator(WeightedMeasure::constant(d1, 0.75), {Point::x_only({0.0}), r}) ==
        doctest::Approx(0.031622776601683791));
  const StateSpaceDims d2{1, 1};
  CHECK(mu_ball_comparator(WeightedMeasure::constant(d2, 2.0), {xy(1.0, 0.0), r}, 0.5) ==
        doctest::Approx(r * r));
}

TEST_CASE("cylinder sets") {
  const Point z = Point::x_only({0.5});
  const HarnackCylinders h = cylinder_sets(1.0, z, 0.2, 0.9, 0.9);
  CHECK(h.alpha == doctest::Approx(8.0 / (3.0 * 0.81)));
  CHECK(h.beta == doctest::Approx(4.0 - 0.81));
  CHECK(h.gamma == doctest::Approx(0.81));
  CHECK(h.minus.t_hi < h.plus.t_lo);
  CHECK(h.minus.t_lo == doctest::Approx(1.0 - h.alpha * 0.04));
  CHECK(h.plus.t_hi == doctest::Approx(1.0 + 0.81 * 0.04));
  CHECK(h.minus.radius == h.plus.radius);
  // alpha <= beta
  CHECK_THROWS_AS(cylinder_sets(1.0, z, 0.2, 0.9, std::sqrt(0.5)), KimuraError);
  CHECK_THROWS_AS(cylinder_sets(1.0, z, 0.2, 0.99, std::sqrt(0.9)), KimuraError);
  CHECK_THROWS_AS(cylinder_sets(1.0, z, 0.2, 0.5, 0.9), KimuraError);
}

TEST_CASE("domain membership keeps the degenerate boundary") {
  const StateSpaceDims d1{1, 0};
  const DomainSpec box = DomainSpec::box(d1, Box{{{0.0, 4.0}}});
  CHECK(box.contains(Point::x_only({0.0})));
  CHECK(box.contains(Point::x_only({3.999})));
  CHECK_FALSE(box.contains(Point::x_only({4.0})));
  CHECK(box.interior_boundary_distance(Point::x_only({3.0})) == doctest::Approx(1.0));
  const DomainSpec inner = DomainSpec::box(d1, Box{{{0.5, 4.0}}});
  CHECK_FALSE(inner.contains(Point::x_only({0.5})));
  const DomainSpec full = DomainSpec::full(d1, Box{{{0.0, 1.0}}});
  CHECK(full.contains(Point::x_only({100.0})));
  CHECK(std::isinf(full.interior_boundary_distance(Point::x_only({1.0}))));
}

TEST_CASE("domain json round trip") {
  const StateSpaceDims dims{1, 1};
  const DomainSpec d = DomainSpec::box(dims, Box{{{0.0, 2.0}, {-1.0, 1.0}}});
  const DomainSpec back = DomainSpec::from_json(d.to_json());
  CHECK(back.to_json() == d.to_json());
  CHECK(back.contains(xy(1.0, 0.5)));
  CHECK_FALSE(back.contains(xy(1.0, 1.5)));
}

TEST_CASE("points are checked") {
  CHECK_THROWS_AS(check_point({1, 0}, Point::x_only({-0.1})), KimuraError);
  CHECK_THROWS_AS(check_point({2, 0}, Point::x_only({0.1})), KimuraError);
  CHECK_NOTHROW(check_point({1, 1}, xy(0.0, -3.0)));
}
