#include "kimura/error.hpp"
#include "kimura/path_simulator.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include <doctest.h>

using namespace kimura;

namespace {

const StateSpaceDims k1d{1, 0};

DomainSpec full1d() { return DomainSpec::full(k1d, Box{{{0.0, 1.0}}}); }

PathConfig small_config(std::size_t paths, double horizon, double dt = 1e-2) {
  PathConfig c;
  c.dt = dt;
  c.n_paths = paths;
  c.horizon = horizon;
  c.seed = 2024;
  c.threads = 1;
  c.scheme = Scheme::kEulerImplicitSqrt;
  return c;
}

}  // namespace

TEST_CASE("scheme names") {
  for (Scheme s : {Scheme::kEulerProjected, Scheme::kEulerImplicitSqrt, Scheme::kExact1dGamma})
    CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("rk4"), KimuraError);
}

TEST_CASE("path config") {
  PathConfig c;
  c.dt = 0.3;
  c.horizon = 1.0;
  CHECK(c.n_steps() == 4);
  CHECK(c.step() == doctest::Approx(0.25));
  c.dt = 0.1;
  CHECK(c.n_steps() == 10);
  const PathConfig back = PathConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  c.dt = -1.0;
  CHECK_THROWS_AS(c.validate(), KimuraError);
}

TEST_CASE("zero coefficients leave the state unchanged") {
  StandardOperatorSpec op = StandardOperatorSpec::make({0, 1});
  op.d_hat(0, 0) = ScalarField(0.0);
  const StandardSdeCoefficients c(op);
  const Point z = Point::y_only({0.4});
  const Point next = step_standard(c, z, 0.1, Eigen::VectorXd::Constant(1, 1.7), PathConfig{});
  CHECK(next.y[0] == 0.4);
}

TEST_CASE("mean of X(T) for b0 = 1 from the origin") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 1.0));
  PathConfig c = small_config(20000, 1.0);
  c.record_stride = c.n_steps();
  const PathBundle b = simulate_bundle(sde, Point::x_only({0.0}), full1d(), c);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t p = 0; p < b.n_paths(); ++p) {
    const double x = b.coord(p, b.n_records() - 1, 0);
    CHECK(x >= 0.0);
    sum += x;
    sq += x * x;
  }
  const double n = static_cast<double>(b.n_paths());
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("free coordinate variance is 2T") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make({0, 1}));
  PathConfig c = small_config(20000, 0.5);
  const PathBundle b = simulate_bundle(sde, Point::y_only({0.0}), DomainSpec::full({0, 1}, Box{{{-1.0, 1.0}}}), c);
  double sq = 0.0;
  for (std::size_t p = 0; p < b.n_paths(); ++p) sq += std::pow(b.coord(p, b.n_records() - 1, 0), 2);
  CHECK(sq / b.n_paths() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("exact gamma scheme matches the mean") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 0.5));
  PathConfig c = small_config(20000, 1.0, 0.5);
  c.scheme = Scheme::kExact1dGamma;
  const PathBundle b = simulate_bundle(sde, Point::x_only({0.3}), full1d(), c);
  double sum = 0.0;
  for (std::size_t p = 0; p < b.n_paths(); ++p) sum += b.coord(p, 2, 0);
  CHECK(sum / b.n_paths() == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("bundles do not depend on the thread count") {
  StandardOperatorSpec op = StandardOperatorSpec::make({1, 1});
  op.b_hat[0] = ScalarField::affine(0.5, {0.3, 0.0});
  op.c_hat(0, 0) = ScalarField(0.2);
  const StandardSdeCoefficients sde(op);
  const Point z0(Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Zero(1));
  const DomainSpec dom = DomainSpec::box(op.dims, Box{{{0.0, 1.5}, {-1.0, 1.0}}});
  PathConfig c = small_config(300, 1.0);
  const PathBundle one = simulate_bundle(sde, z0, dom, c);
  c.threads = 4;
  const PathBundle four = simulate_bundle(sde, z0, dom, c);
  CHECK(one.states == four.states);
  CHECK(one.tau == four.tau);
  CHECK(one.exited == four.exited);
  std::ostringstream a;
  std::ostringstream b;
  one.write_binary(a);
  four.write_binary(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("exit freezes the path") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 1.0));
  const PathConfig c = small_config(500, 2.0);
  const PathBundle b = simulate_bundle(sde, Point::x_only({0.5}), DomainSpec::box(k1d, Box{{{0.0, 1.0}}}), c);
  std::size_t exits = 0;
  for (std::size_t p = 0; p < b.n_paths(); ++p) {
    if (!b.exited[p]) continue;
    ++exits;
    CHECK(b.tau[p] > 0.0);
    const std::size_t r = b.record_index(b.tau[p]);
    CHECK(b.coord(p, r, 0) >= 1.0);
    CHECK(b.coord(p, b.n_records() - 1, 0) == b.coord(p, r, 0));
    CHECK_FALSE(b.alive(p, r));
  }
  CHECK(exits > 250);
}

TEST_CASE("invalid starts and options") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 1.0));
  const PathConfig c = small_config(10, 0.1);
  try {
    simulate_bundle(sde, Point::x_only({2.0}), DomainSpec::box(k1d, Box{{{0.0, 1.0}}}), c);
    FAIL("expected invalid-start");
  } catch (const KimuraError& e) {
    CHECK(e.kind() == ErrorKind::kInvalidStart);
  }
  StandardOperatorSpec s = StandardOperatorSpec::make(k1d);
  s.b_hat[0] = ScalarField::affine(1.0, {0.2});
  const GirsanovField theta = girsanov_field(derive_singular_from_standard(s));
  PathConfig exact = c;
  exact.scheme = Scheme::kExact1dGamma;
  CHECK_THROWS_AS(simulate_bundle(theta.singular(), Point::x_only({0.5}), full1d(), exact, &theta), KimuraError);
}

TEST_CASE("vanishing theta gives zero log weights") {
  const GirsanovField theta = girsanov_field(derive_singular_from_standard(StandardOperatorSpec::make(k1d, 0.5)));
  const PathBundle b = simulate_bundle(theta.singular(), Point::x_only({0.5}), full1d(), small_config(50, 0.5), &theta);
  REQUIRE(b.weighted());
  for (double w : b.log_weight) CHECK(w == 0.0);
}

TEST_CASE("running integrals use the trapezoid rule") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 1.0));
  const PathBundle b = simulate_bundle(sde, Point::x_only({0.5}), full1d(), small_config(20, 1.0),
                                       nullptr, {[](double, const Point&) { return 1.0; },
                                                 [](double t, const Point&) { return t; }});
  for (std::size_t p = 0; p < b.n_paths(); ++p) {
    CHECK(b.integral(p, 0, b.n_records() - 1) == doctest::Approx(1.0));
    CHECK(b.integral(p, 1, b.n_records() - 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("export formats") {
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 1.0));
  PathConfig c = small_config(3, 0.1, 0.05);
  const PathBundle b = simulate_bundle(sde, Point::x_only({0.5}), full1d(), c);
  std::ostringstream csv;
  b.write_csv(csv);
  const std::string text = csv.str();
  CHECK(text.rfind("path,step,t,x0,exited,log_weight\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 3);

  std::ostringstream bin;
  b.write_binary(bin);
  const std::string bytes = bin.str();
  REQUIRE(bytes.size() > 32);
  CHECK(bytes.substr(0, 4) == "KIMB");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  CHECK(version == 1);
  std::uint64_t n_paths = 0;
  std::memcpy(&n_paths, bytes.data() + 16, 8);
  CHECK(n_paths == 3);

  const Trajectory t = b.trajectory(1);
  CHECK(t.times.size() == 3);
  CHECK(t.states[0].x[0] == 0.5);
}
