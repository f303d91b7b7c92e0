#include "kimura/density_lab.hpp"
#include "kimura/error.hpp"
#include "kimura/oracle_suite.hpp"

#include <cmath>
#include <sstream>

#include <doctest.h>

using namespace kimura;

namespace {

const StateSpaceDims k1d{1, 0};

PathBundle bundle(double b0, double x0, double horizon, std::size_t paths, const DomainSpec& dom,
                  Scheme scheme = Scheme::kEulerImplicitSqrt, double dt = 1e-2) {
  PathConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.n_paths = paths;
  c.seed = 3;
  c.threads = 1;
  c.scheme = scheme;
  return simulate_bundle(StandardSdeCoefficients(StandardOperatorSpec::make(k1d, b0)), Point::x_only({x0}), dom, c);
}

DomainSpec full1d() { return DomainSpec::full(k1d, Box{{{0.0, 1.0}}}); }

GridSpec grid(double hi, std::size_t cells, CellChart chart = CellChart::kLinear) {
  GridSpec g;
  g.box.axes = {{0.0, hi}};
  g.cells = {cells};
  g.chart = chart;
  return g;
}

}  // namespace

TEST_CASE("time zero puts all mass in the start cell") {
  const PathBundle b = bundle(1.0, 0.55, 0.2, 100, full1d());
  const DensityEstimate d = estimate_density(b, 0.0, grid(1.0, 10), WeightedMeasure::constant(k1d, 1.0));
  for (std::size_t c = 0; c < d.n_cells(); ++c) CHECK(d.counts[c] == (c == 5 ? 100.0 : 0.0));
  CHECK(check_mass(d) == doctest::Approx(1.0));
}

TEST_CASE("mass on the full space and on bounded domains") {
  const WeightedMeasure mu = WeightedMeasure::constant(k1d, 0.5);
  const PathBundle b = bundle(0.5, 0.2, 1.0, 2000, full1d());
  const DensityEstimate d = estimate_density(b, 1.0, grid(2.0, 32, CellChart::kSqrt), mu);
  CHECK(check_mass(d) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.tail_mass > 0.0);
  const PathBundle bb = bundle(0.5, 0.2, 1.0, 2000, DomainSpec::box(k1d, Box{{{0.0, 1.0}}}));
  const DensityEstimate db = estimate_density(bb, 1.0, grid(1.0, 32), mu);
  CHECK(check_mass(db) >= 0.0);
  CHECK(check_mass(db) < 1.0);
  CHECK(lq_statistic(d, 1.0) == doctest::Approx(d.grid_mass()));
  CHECK(holder_moment(bb, 1.0, 0.0) == doctest::Approx(db.survival_mass));
}

TEST_CASE("histogram against the gamma law") {
  // exact transitions, so only histogram noise remains
  const PathBundle b = bundle(0.5, 0.0, 1.0, 100000, full1d(), Scheme::kExact1dGamma, 1.0);
  const WeightedMeasure mu = WeightedMeasure::constant(k1d, 0.5);
  const DensityEstimate d = estimate_density(b, 1.0, grid(6.0, 64), mu);
  const Besq1dModel besq{0.5, 0.0};
  const double l1 = l1_distance(d, mu, [&](const Point& z) { return besq_density_mu(besq, 1.0, z.x[0]); },
                                1.0 - besq_transition_cdf(besq, 1.0, 6.0));
  CHECK(l1 < 0.05);
  std::ostringstream os;
  d.write_csv(os);
  CHECK(os.str().rfind("x0,mu_cell,density\n", 0) == 0);
}

TEST_CASE("kernel estimates") {
  const PathBundle b = bundle(1.0, 0.5, 0.5, 20000, full1d());
  const WeightedMeasure mu = WeightedMeasure::constant(k1d, 1.0);
  const KernelEstimate k = kernel_density(b, 0.5, Point::x_only({0.6}), mu);
  const Besq1dModel besq{1.0, 0.5};
  CHECK(std::abs(k.estimate.value - besq_density_mu(besq, 0.5, 0.6)) < 0.1);
  CHECK(k.in_window > 100);
  CHECK_FALSE(k.estimate.untrusted);
  PathConfig c;
  c.dt = 1e-2;
  c.n_paths = 500;
  c.seed = 4;
  c.threads = 1;
  const StandardSdeCoefficients sde(StandardOperatorSpec::make(k1d, 1.0));
  const auto [pq, qp] = check_symmetry(sde, mu, Point::x_only({0.4}), Point::x_only({0.4}), 0.3, full1d(), c);
  CHECK(pq.value == qp.value);
}

TEST_CASE("power law fit") {
  std::vector<std::pair<double, double>> s;
  for (double t : {0.1, 0.2, 0.4, 0.8}) s.emplace_back(t, 3.0 * std::pow(t, -0.75));
  const ScalingReport r = fit_power_law(s);
  CHECK(r.exponent_fit == doctest::Approx(-0.75));
  CHECK(r.intercept == doctest::Approx(std::log(3.0)));
  CHECK(r.r2 == doctest::Approx(1.0));
}

TEST_CASE("upper bound constants") {
  const WeightedMeasure mu = WeightedMeasure::constant(k1d, 1.0);
  std::vector<UpperBoundReport> reps;
  for (double t : {0.25, 0.5}) {
    const PathBundle b = bundle(1.0, 0.5, t, 5000, full1d());
    reps.push_back(upper_bound_check(estimate_density(b, t, grid(3.0, 24), mu), mu));
    CHECK(reps.back().max_ratio > 0.0);
    CHECK(std::isfinite(reps.back().max_ratio));
  }
  CHECK(upper_bound_spread(reps) >= 1.0);
}
