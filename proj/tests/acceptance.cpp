// Acceptance checks 1-11. One PASS/FAIL line per criterion; exit status 0 only
// when every selected criterion passes.
//
//   acceptance [--criterion N] [--cli PATH]

#include "kimura/density_lab.hpp"
#include "kimura/error.hpp"
#include "kimura/feynman_kac.hpp"
#include "kimura/harnack_probe.hpp"
#include "kimura/operator_models.hpp"
#include "kimura/oracle_suite.hpp"
#include "kimura/path_simulator.hpp"
#include "kimura/sde_kernel.hpp"
#include "kimura/state_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

using namespace kimura;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string num(double a) { return fmt("%.4g", a); }

const StateSpaceDims k1d{1, 0};

Box unit_box(const StateSpaceDims& dims, double hi = 1.0) {
  Box b;
  for (std::size_t k = 0; k < dims.total(); ++k) b.axes.push_back(k < dims.n ? Interval{0.0, hi} : Interval{-hi, hi});
  return b;
}

DomainSpec full_space(const StateSpaceDims& dims) { return DomainSpec::full(dims, unit_box(dims)); }

DomainSpec interval_domain(double hi) { return DomainSpec::box(k1d, Box{{{0.0, hi}}}); }

StandardOperatorSpec affine_b_hat_1d(double c0, double slope) {
  StandardOperatorSpec op = StandardOperatorSpec::make(k1d, 1.0);
  op.b_hat[0] = ScalarField::affine(c0, {slope});
  return op;
}

// ---------------------------------------------------------------------------
// 1. Oracle density match

Outcome criterion1() {
  const StandardSdeCoefficients sde = build_standard_sde_coefficients(StandardOperatorSpec::make(k1d, 0.5));
  const Besq1dModel besq{0.5, 0.0};
  const WeightedMeasure mu = WeightedMeasure::constant(k1d, 0.5);
  const double upper = 6.0;
  GridSpec grid;
  grid.box.axes = {{0.0, upper}};
  grid.cells = {64};
  grid.chart = CellChart::kLinear;

  auto run = [&](Scheme scheme, double& l1, Estimate& mean) {
    PathConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 1.0;
    cfg.n_paths = 100000;
    cfg.seed = 7;
    cfg.threads = 1;
    cfg.scheme = scheme;
    cfg.record_stride = cfg.n_steps();
    const PathBundle b = simulate_bundle(sde, Point::x_only({0.0}), full_space(k1d), cfg);
    const DensityEstimate est = estimate_density(b, 1.0, grid, mu);
    l1 = l1_distance(est, mu, [&](const Point& z) { return besq_density_mu(besq, 1.0, z.x[0]); },
                     1.0 - besq_transition_cdf(besq, 1.0, upper));
    mean = estimate_semigroup(b, [](const Point& z) { return z.x[0]; }, 1.0);
  };

  double l1 = 0.0;
  Estimate mean;
  run(Scheme::kEulerImplicitSqrt, l1, mean);
  double l1_proj = 0.0;
  Estimate mean_proj;
  run(Scheme::kEulerProjected, l1_proj, mean_proj);

  const double dev = std::abs(mean.value - 0.5);
  Outcome o;
  o.pass = l1 <= 0.05 && dev <= 3.0 * mean.std_error;
  o.detail = "euler-implicit-sqrt: L1=" + num(l1) + " (<= 0.05), |mean-0.5|=" + num(dev) +
             " (<= 3se=" + num(3.0 * mean.std_error) + "); euler-projected for reference: L1=" + num(l1_proj) +
             ", |mean-0.5|=" + num(std::abs(mean_proj.value - 0.5)) + " vs 3se=" + num(3.0 * mean_proj.std_error);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Mass conservation on the full space, both SDE variants

StandardOperatorSpec mixed_standard() {
  const StateSpaceDims dims{1, 1};
  StandardOperatorSpec op = StandardOperatorSpec::make(dims, 1.0);
  op.b_hat[0] = ScalarField::affine(1.0, {0.2, 0.0});
  op.c_hat(0, 0) = ScalarField(0.3);
  op.e_hat[0] = ScalarField(0.1);
  return op;
}

Outcome criterion2() {
  const StandardOperatorSpec std_op = mixed_standard();
  const SingularOperatorSpec sing_op = derive_singular_from_standard(std_op);
  const StandardSdeCoefficients std_sde(std_op);
  const SdeCoefficients sing_sde(sing_op);
  const Point z0(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Zero(1));
  const DomainSpec full = full_space(std_op.dims);
  PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_paths = 20000;
  cfg.seed = 11;
  cfg.threads = 1;
  cfg.scheme = Scheme::kEulerImplicitSqrt;
  cfg.horizon = 1.0;
  cfg.record_stride = 250;
  Outcome o{true, ""};
  const SdeModel* models[] = {&std_sde, &sing_sde};
  const char* names[] = {"standard", "singular"};
  for (int v = 0; v < 2; ++v) {
    const PathBundle b = simulate_bundle(*models[v], z0, full, cfg);
    for (double t : {0.25, 0.5, 1.0}) {
      const Estimate e = estimate_semigroup(b, [](const Point&) { return 1.0; }, t);
      const bool ok = std::abs(e.value - 1.0) <= 3.0 * e.std_error;
      o.pass = o.pass && ok;
      o.detail += std::string(names[v]) + " t=" + num(t) + ": " + fmt("%.17g", e.value) + "; ";
    }
  }
  o.detail += "tolerance 3 stderr";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Girsanov consistency

Outcome criterion3() {
  const StandardOperatorSpec std_op = affine_b_hat_1d(1.0, 0.2);
  const SingularOperatorSpec sing_op = derive_singular_from_standard(std_op);
  const GirsanovField theta = girsanov_field(sing_op);
  const StandardSdeCoefficients std_sde(std_op);
  const Point z0 = Point::x_only({0.5});
  const DomainSpec full = full_space(k1d);
  PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_paths = 100000;
  cfg.threads = 1;
  cfg.scheme = Scheme::kEulerImplicitSqrt;
  cfg.horizon = 1.0;
  cfg.record_stride = 10;
  cfg.seed = 21;
  const PathBundle weighted = simulate_bundle(theta.singular(), z0, full, cfg, &theta);
  cfg.seed = 22;
  const PathBundle standard = simulate_bundle(std_sde, z0, full, cfg);

  const GirsanovComparison cmp =
      girsanov_compare(weighted, standard, [](const Point& z) { return std::exp(-z.x[0]); }, 1.0);
  const bool ok_cmp = std::abs(cmp.difference) <= 3.0 * cmp.combined_stderr;

  std::size_t bad = 0;
  double worst = 0.0;
  for (std::size_t r = 1; r < weighted.n_records(); ++r) {
    const Estimate m = estimate_semigroup(weighted, [](const Point&) { return 1.0; }, weighted.times[r]);
    const double z = std::abs(m.value - 1.0) / m.std_error;
    worst = std::max(worst, z);
    if (std::abs(m.value - 1.0) > 3.0 * m.std_error) ++bad;
  }
  Outcome o;
  o.pass = ok_cmp && bad == 0;
  o.detail = "|E_hat[e^-Z] - E[M e^-Z]|=" + num(std::abs(cmp.difference)) + " (<= 3se=" +
             num(3.0 * cmp.combined_stderr) + "); E[M(t)] off by > 3se at " + std::to_string(bad) + " of " +
             std::to_string(weighted.n_records() - 1) + " grid times (max |z|=" + num(worst) + ")";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Martingale problem residual

Outcome criterion4() {
  const StandardOperatorSpec std_op = affine_b_hat_1d(1.0, 0.2);
  const SdeCoefficients sde(derive_singular_from_standard(std_op));
  const Point z0 = Point::x_only({0.6});
  const DomainSpec omega = interval_domain(3.0);
  // bumps whose discretization bias is resolvable above the Monte Carlo noise
  const std::vector<SmoothFunction> bumps{SmoothFunction::bump(Point::x_only({0.35}), {0.3}),
                                          SmoothFunction::bump(Point::x_only({1.2}), {0.8}),
                                          SmoothFunction::bump(Point::x_only({0.3}), {0.25})};
  std::vector<double> times;
  for (int k = 1; k <= 5; ++k) times.push_back(0.2 * k);
  const double dt_coarse = 0.025;
  const double dt_fine = dt_coarse / 2.0;

  auto residual = [&](const SmoothFunction& phi, double dt, double& max_abs, double& se) {
    PathConfig cfg;
    cfg.dt = dt;
    cfg.n_paths = 400000;
    cfg.seed = 31;
    cfg.threads = 1;
    cfg.scheme = Scheme::kEulerImplicitSqrt;
    cfg.record_stride = static_cast<std::size_t>(std::lround(0.2 / dt));
    const std::vector<Estimate> est = martingale_residual(sde, phi, z0, omega, times, cfg);
    max_abs = 0.0;
    se = 0.0;
    for (const Estimate& e : est) {
      if (std::abs(e.value) > max_abs) {
        max_abs = std::abs(e.value);
        se = e.std_error;
      }
    }
  };

  Outcome o{true, ""};
  for (std::size_t i = 0; i < bumps.size(); ++i) {
    double r1 = 0.0, s1 = 0.0, r2 = 0.0, s2 = 0.0;
    residual(bumps[i], dt_coarse, r1, s1);
    residual(bumps[i], dt_fine, r2, s2);
    const double reduction = r2 > 0.0 ? r1 / r2 : std::numeric_limits<double>::infinity();
    // first-order constant from the halving pair
    const double C = std::max(0.0, r1 - r2) / (dt_coarse - dt_fine);
    const bool ok = reduction >= 1.5 && r1 <= 3.0 * s1 + C * dt_coarse && r2 <= 3.0 * s2 + C * dt_fine;
    o.pass = o.pass && ok;
    o.detail += "bump " + std::to_string(i + 1) + ": max|E M|=" + num(r1) + " @dt=" + num(dt_coarse) + ", " + num(r2) +
                " @dt=" + num(dt_fine) + " (3se=" + num(3.0 * s2) + "), reduction " + num(reduction) +
                " (>= 1.5), C=" + num(C) + "; ";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5. Ball-measure sandwich

Outcome criterion5() {
  const StateSpaceDims dims{1, 1};
  std::vector<std::pair<std::string, WeightedMeasure>> weights{
      {"b=0.5", WeightedMeasure::constant(dims, 0.5)},
      {"b=2", WeightedMeasure::constant(dims, 2.0)},
      {"b=1+0.2x", WeightedMeasure{dims, {ScalarField::affine(1.0, {0.2, 0.0})}}}};
  std::mt19937_64 gen(5);
  // x0 in [0, 1] (a quarter on the boundary, a quarter within 1e-3 of it), r in [0.0025, 0.25]
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> uy(-1.0, 1.0);
  std::uniform_real_distribution<double> ue(std::log10(0.0025), std::log10(0.25));
  std::vector<MetricBall> balls;
  for (int i = 0; i < 20; ++i) {
    double x = ux(gen);
    if (i % 4 == 0) x = 0.0;
    if (i % 4 == 1) x *= 1e-3;
    const double y = uy(gen);
    const double r = std::pow(10.0, ue(gen));
    balls.push_back({Point(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, y)), r});
  }
  const QuadratureConfig quad{128};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  Outcome o{true, ""};
  for (const auto& [name, mu] : weights) {
    double wlo = std::numeric_limits<double>::infinity();
    double whi = 0.0;
    for (const MetricBall& ball : balls) {
      const double q = mu_ball(mu, ball, quad) / mu_ball_comparator(mu, ball);
      wlo = std::min(wlo, q);
      whi = std::max(whi, q);
    }
    lo = std::min(lo, wlo);
    hi = std::max(hi, whi);
    o.detail += name + ": ratios in [" + num(wlo) + ", " + num(whi) + "] (C=" + num(std::max(whi, 1.0 / wlo)) + "); ";
  }
  const double C = std::max(hi, 1.0 / lo);
  o.pass = C <= 10.0;
  o.detail += "C=" + num(C) + " (<= 10)";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Brownian closed forms

Outcome criterion6() {
  double worst = 0.0;
  for (std::size_t n : {1, 2, 3}) {
    for (double t : {0.5, 1.0, 2.0}) {
      for (double q : {1.5, 2.0, 3.0}) {
        const double a = lq_closed_form(q, t, n);
        worst = std::max(worst, std::abs(a - lq_by_quadrature(q, t, n)) / a);
      }
      for (double alpha : {0.5, 1.0, 2.0}) {
        const double a = brownian_alpha_moment(alpha, t, n);
        worst = std::max(worst, std::abs(a - alpha_moment_by_quadrature(alpha, t, n)) / a);
      }
    }
  }
  return {worst <= 1e-8, "max relative deviation " + fmt("%.3g", worst) + " (<= 1e-8) over n in {1,2,3}"};
}

// ---------------------------------------------------------------------------
// 7. Domination and monotonicity on common random numbers

Outcome criterion7() {
  const StandardSdeCoefficients sde = build_standard_sde_coefficients(affine_b_hat_1d(0.5, 0.3));
  const WeightedMeasure mu{k1d, {ScalarField::affine(0.5, {0.3})}};
  const Point z0 = Point::x_only({0.8});
  PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_paths = 20000;
  cfg.seed = 71;
  cfg.threads = 1;
  cfg.scheme = Scheme::kEulerImplicitSqrt;
  cfg.horizon = 1.0;
  cfg.record_stride = 250;
  const PathBundle small = simulate_bundle(sde, z0, interval_domain(1.5), cfg);
  const PathBundle large = simulate_bundle(sde, z0, interval_domain(3.0), cfg);
  GridSpec grid;
  grid.box.axes = {{0.0, 3.0}};
  grid.cells = {60};
  std::size_t density_violations = 0;
  std::size_t cells = 0;
  for (double t : {0.25, 0.5, 1.0}) {
    const DensityEstimate a = estimate_density(small, t, grid, mu);
    const DensityEstimate b = estimate_density(large, t, grid, mu);
    for (std::size_t c = 0; c < a.n_cells(); ++c, ++cells)
      if (a.values[c] > b.values[c]) ++density_violations;
  }
  const std::vector<PointFunction> fs{[](const Point&) { return 0.0; },
                                      [](const Point& z) { return std::min(z.x[0], 1.0); },
                                      [](const Point& z) { return z.x[0]; },
                                      [](const Point& z) { return z.x[0] + 0.1 * z.x[0] * z.x[0]; },
                                      [](const Point& z) { return 1.0 + z.x[0] * z.x[0]; }};
  std::size_t monotone_violations = 0;
  std::size_t comparisons = 0;
  for (double t : {0.25, 0.5, 1.0}) {
    for (const PathBundle* b : {&small, &large}) {
      for (std::size_t i = 1; i < fs.size(); ++i, ++comparisons)
        if (estimate_semigroup(*b, fs[i - 1], t).value > estimate_semigroup(*b, fs[i], t).value)
          ++monotone_violations;
    }
  }
  return {density_violations == 0 && monotone_violations == 0,
          "domination violations " + std::to_string(density_violations) + " of " + std::to_string(cells) +
              " cells; monotonicity violations " + std::to_string(monotone_violations) + " of " +
              std::to_string(comparisons) + " comparisons (both must be 0)"};
}

// ---------------------------------------------------------------------------
// 8. Harnack probes

Outcome criterion8() {
  Outcome o{true, ""};
  const Point z = Point::x_only({1.0});
  const double c = 0.9;
  const double d = 0.9;
  const double R = 1.0;
  const double s = 1.0;
  const std::vector<double> rhos{0.1 * c * R, 0.2 * c * R, 0.4 * c * R};

  SolutionEstimator constant = [](double, const Point&) {
    Estimate e;
    e.value = 1.0;
    e.n_paths = 1;
    return e;
  };
  const std::vector<HarnackReport> flat = scale_invariant_scan(constant, s, z, R, c, d, rhos, LatticeSpec{});
  bool flat_ok = true;
  for (const auto& r : flat) flat_ok = flat_ok && !r.unbounded && r.ratio == 1.0;
  o.pass = flat_ok;
  o.detail = std::string("constant solution ratio ") + (flat_ok ? "== 1" : "!= 1") + "; ";

  // u(t, x) = x + b0 (t - t1) on (0, 4), data from u itself
  const double b0 = 0.5;
  const double t1 = 0.0;
  const StandardSdeCoefficients sde = build_standard_sde_coefficients(StandardOperatorSpec::make(k1d, b0));
  BoundaryData g{[b0, t1](double t, const Point& p) { return p.x[0] + b0 * (t - t1); }, true};
  PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_paths = 4000;
  cfg.seed = 81;
  cfg.threads = 1;
  cfg.scheme = Scheme::kEulerImplicitSqrt;
  cfg.record_stride = 5;
  DirichletSolutionEstimator u(sde, g, t1, s + 0.5, interval_domain(4.0), cfg);
  SolutionEstimator ue = [&u](double t, const Point& p) { return u(t, p); };

  const LatticeSpec base{16, 16};
  const LatticeSpec fine{32, 32};
  const std::vector<HarnackReport> coarse_scan = scale_invariant_scan(ue, s, z, R, c, d, rhos, base);
  const std::vector<HarnackReport> fine_scan = scale_invariant_scan(ue, s, z, R, c, d, rhos, fine);
  bool finite = true;
  double max_quotient = 1.0;
  double max_change = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    finite = finite && !coarse_scan[i].unbounded && !fine_scan[i].unbounded;
    for (std::size_t j = 0; j < rhos.size(); ++j)
      max_quotient = std::max(max_quotient, coarse_scan[i].ratio / coarse_scan[j].ratio);
    max_change = std::max(max_change, std::abs(fine_scan[i].ratio / coarse_scan[i].ratio - 1.0));
    o.detail += "rho=" + num(rhos[i]) + ": ratio " + num(coarse_scan[i].ratio) + " -> " + num(fine_scan[i].ratio) + "; ";
  }
  o.pass = o.pass && finite && max_quotient <= 3.0 && max_change <= 0.10;
  o.detail += std::string(finite ? "all finite" : "unbounded ratio") + ", max pairwise quotient " + num(max_quotient) +
              " (<= 3), max refinement change " + num(100.0 * max_change) + "% (<= 10%)";
  return o;
}

// ---------------------------------------------------------------------------
// 9. Chain geometry

Outcome criterion9() {
  std::size_t failures = 0;
  std::size_t checks = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++failures;
  };
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ur(0.1, 10.0);
  std::uniform_real_distribution<double> uf(0.001, 0.999);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = ur(gen);
    double alpha_sum = 0.0;
    double gamma_sum = 0.0;
    for (std::size_t k = 1; k <= 40; ++k) {
      const ChainGeometry g = chain_geometry(r, k);
      const double q4 = std::ldexp(1.0, -2 * static_cast<int>(k));
      const double q2 = std::ldexp(1.0, -static_cast<int>(k));
      alpha_sum += 3.0 * q4 * r * r;
      gamma_sum += q2 * r;
      expect(g.alpha_k == (1.0 - q4) * r * r);
      expect(g.beta_k == 2.0 / 3.0 * g.alpha_k);
      expect(g.gamma_k == (1.0 - q2) * r);
      // telescoping sums of the per-step increments, to rounding
      expect(std::abs(g.alpha_k - alpha_sum) <= 8.0 * k * 0x1.0p-52 * r * r);
      expect(std::abs(g.gamma_k - gamma_sum) <= 8.0 * k * 0x1.0p-52 * r);
    }
    const double rho = uf(gen) * r;
    const std::size_t k0 = chain_count(rho, r);
    const ChainGeometry g = chain_geometry(r, k0);
    expect(g.gamma_k >= rho && g.alpha_k >= rho * rho);
    expect(static_cast<double>(k0) <= chain_count_bound(rho, r));
    if (k0 > 1) {
      const ChainGeometry prev = chain_geometry(r, k0 - 1);
      expect(!(prev.gamma_k >= rho && prev.alpha_k >= rho * rho));
    }
  }
  return {failures == 0, std::to_string(failures) + " failures in " + std::to_string(checks) +
                             " identity / bound checks (k <= 40, 100 random (rho, r))"};
}

// ---------------------------------------------------------------------------
// 10. Grid solver against Monte Carlo

Outcome criterion10() {
  Outcome o{true, ""};
  const double L = 4.0;
  const double t1 = 0.0;
  const std::vector<std::pair<double, double>> probes{{0.25, 0.2}, {0.25, 1.0}, {0.25, 2.5}, {0.5, 0.05}, {0.5, 0.6},
                                                      {0.5, 1.8},  {0.5, 3.2},  {1.0, 0.3},  {1.0, 1.5},  {1.0, 2.8}};
  for (double b0 : {0.5, 1.0}) {
    // u = x^2 + 2(1+b)xt + (1+b)b t^2 solves u_t = x u_xx + b u_x
    auto exact = [b0](double t, double x) { return x * x + 2.0 * (1.0 + b0) * x * t + (1.0 + b0) * b0 * t * t; };
    Grid1dSolver solver{L, b0, 200, 1e-3, true};
    Grid1dSolver finer{L, b0, 400, 5e-4, true};
    auto f = [&](double x) { return exact(0.0, x); };
    auto bnd = [&](double t) { return exact(t, L); };
    const GridSolution grid = solve_parabolic_1d(solver, f, 1.0, {}, bnd);
    const GridSolution grid_fine = solve_parabolic_1d(finer, f, 1.0, {}, bnd);

    const StandardSdeCoefficients sde = build_standard_sde_coefficients(StandardOperatorSpec::make(k1d, b0));
    BoundaryData g{[&](double t, const Point& p) { return exact(t - t1, p.x[0]); }, true};
    std::size_t bad = 0;
    double worst = 0.0;
    for (const auto& [t, x] : probes) {
      PathConfig cfg;
      cfg.dt = 1e-3;
      cfg.n_paths = 20000;
      cfg.seed = 101;
      cfg.threads = 1;
      cfg.scheme = Scheme::kEulerImplicitSqrt;
      cfg.record_stride = 1000;
      const Estimate mc = estimate_dirichlet(sde, g, t, Point::x_only({x}), t1, interval_domain(L), cfg);
      const double ug = grid.at(t, x);
      const double grid_error = std::abs(ug - grid_fine.at(t, x));
      const double tol = 3.0 * mc.std_error + grid_error;
      const double dev = std::abs(mc.value - ug);
      worst = std::max(worst, dev / tol);
      if (dev > tol) ++bad;
    }
    o.pass = o.pass && bad == 0;
    o.detail += "b=" + num(b0) + ": " + std::to_string(bad) + " of " + std::to_string(probes.size()) +
                " probes outside 3se + grid error (worst deviation/tolerance " + num(worst) + "); ";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 11. CLI determinism across thread counts

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion11(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli binary given"};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("kimura_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const json cfg = {{"command", "fk"},
                    {"seed", 1234},
                    {"model", {{"type", "standard"}, {"dims", {{"n", 1}, {"m", 1}}}, {"b_hat", {0.7}}}},
                    {"domain", {{"shape", "box"}, {"box", {{0.0, 2.0}, {-1.0, 1.0}}}}},
                    {"start", {{"x", {0.4}}, {"y", {0.1}}}},
                    {"sim", {{"dt", 0.002}, {"n_paths", 4000}, {"horizon", 0.5}, {"scheme", "euler-implicit-sqrt"}}},
                    {"params", {{"kind", "semigroup"}, {"f", {{"kind", "affine"}, {"const", 0.0}, {"grad", {1.0, 0.0}}}}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  std::vector<std::string> outputs;
  int status_all = 0;
  for (const char* threads : {"1", "3", "7"}) {
    const fs::path out = dir / (std::string("t") + threads);
    const std::string cmd = "\"" + cli + "\" fk --config \"" + (dir / "config.json").string() + "\" --threads " +
                            threads + " --out \"" + out.string() + "\" > \"" + (dir / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    status_all |= status;
    outputs.push_back(slurp(out / "results.json"));
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[1] == outputs[2];
  Outcome o{status_all == 0 && same, ""};
  o.detail = "threads 1/3/7: exit statuses " + std::string(status_all == 0 ? "all 0" : "nonzero: " + slurp(dir / "log.txt")) +
             ", results.json " + (same ? "byte-identical" : "differs") + " (" + std::to_string(outputs[0].size()) +
             " bytes)";
  if (o.pass) fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  std::string cli;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--cli", cli, "path to the kimura_lab binary (criterion 11)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle density match", criterion1},
      {"mass conservation", criterion2},
      {"Girsanov consistency", criterion3},
      {"martingale problem residual", criterion4},
      {"ball-measure sandwich", criterion5},
      {"Brownian closed forms", criterion6},
      {"domination and monotonicity", criterion7},
      {"Harnack probes", criterion8},
      {"chain geometry", criterion9},
      {"grid solver vs Monte Carlo", criterion10},
      {"CLI determinism", [&cli] { return criterion11(cli); }}};

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << (i + 1) << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
