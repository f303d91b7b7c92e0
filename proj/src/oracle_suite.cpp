#include "kimura/oracle_suite.hpp"

#include "kimura/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace kimura {

namespace {

constexpr double kSeriesTol = 1e-12;

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// sum_j exp(term(j)) for a unimodal sequence of log terms, started at j0 and
// truncated once terms fall below kSeriesTol relative to the running sum.
template <class LogTerm>
double unimodal_series(long long j0, LogTerm&& log_term) {
  Kahan k;
  const double first = std::exp(log_term(j0));
  k.add(first);
  double prev = first;
  for (long long j = j0 + 1;; ++j) {
    const double v = std::exp(log_term(j));
    k.add(v);
    if ((v <= prev && v <= kSeriesTol * k.sum) || v == 0.0) break;
    prev = v;
  }
  prev = first;
  for (long long j = j0 - 1; j >= 0; --j) {
    const double v = std::exp(log_term(j));
    k.add(v);
    if ((v <= prev && v <= kSeriesTol * k.sum) || v == 0.0) break;
    prev = v;
  }
  return k.sum;
}

double log_poisson(long long j, double lambda) {
  if (lambda == 0.0) return j == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(j) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(j) + 1.0);
}

void check_t(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::kInvalidArgument, "t must be positive");
}

}  // namespace

void Besq1dModel::validate() const {
  if (!(b0 > 0.0) || !std::isfinite(b0)) fail(ErrorKind::kInvalidWeight, "b0 must be positive");
  if (!(x0 >= 0.0) || !std::isfinite(x0)) fail(ErrorKind::kInvalidArgument, "x0 must be nonnegative");
}

double besq_density_mu(const Besq1dModel& model, double t, double x) {
  model.validate();
  check_t(t);
  if (x < 0.0) return 0.0;
  const double lambda = model.x0 / t;
  const double b = model.b0;
  const double lx = x > 0.0 ? std::log(x) : 0.0;
  auto term = [&](long long j) {
    const double jj = static_cast<double>(j);
    if (x == 0.0 && j > 0) return -std::numeric_limits<double>::infinity();
    return log_poisson(j, lambda) + jj * lx - x / t - std::lgamma(b + jj) - (b + jj) * std::log(t);
  };
  if (x == 0.0 || lambda == 0.0) return std::exp(term(0));
  const auto j0 = static_cast<long long>(std::floor(std::sqrt(lambda * x / t)));
  return unimodal_series(j0, term);
}

double besq_transition_density(const Besq1dModel& model, double t, double x) {
  if (x < 0.0) return 0.0;
  const double pm = besq_density_mu(model, t, x);
  if (x == 0.0) {
    if (model.b0 < 1.0) return std::numeric_limits<double>::infinity();
    return model.b0 == 1.0 ? pm : 0.0;
  }
  return pm * std::pow(x, model.b0 - 1.0);
}

double besq_transition_cdf(const Besq1dModel& model, double t, double x) {
  model.validate();
  check_t(t);
  if (x <= 0.0) return 0.0;
  const double lambda = model.x0 / t;
  auto term = [&](long long j) {
    const double p = boost::math::gamma_p(model.b0 + static_cast<double>(j), x / t);
    return p > 0.0 ? log_poisson(j, lambda) + std::log(p) : -std::numeric_limits<double>::infinity();
  };
  if (lambda == 0.0) return std::exp(term(0));
  return std::min(1.0, unimodal_series(static_cast<long long>(std::floor(lambda)), term));
}

double besq_mean(const Besq1dModel& model, double t) { return model.x0 + model.b0 * t; }
double besq_variance(const Besq1dModel& model, double t) { return 2.0 * model.x0 * t + model.b0 * t * t; }

// ---------------------------------------------------------------------------

double gaussian_reference(double t, const Eigen::VectorXd& z0, const Eigen::VectorXd& z) {
  check_t(t);
  if (z0.size() != z.size()) fail(ErrorKind::kDimensionMismatch, "z0 and z differ in length");
  const double d = static_cast<double>(z.size());
  return std::pow(2.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-(z - z0).squaredNorm() / (2.0 * t));
}

double lq_closed_form(double q, double t, std::size_t n) {
  check_t(t);
  if (!(q > 0.0)) fail(ErrorKind::kInvalidArgument, "q must be positive");
  const double nn = static_cast<double>(n);
  return std::pow(2.0 * std::numbers::pi, nn * (1.0 - q) / 2.0) * std::pow(q, -nn / 2.0) *
         std::pow(t, (1.0 - q) * nn / 2.0);
}

double brownian_alpha_constant(double alpha, std::size_t n) {
  if (!(alpha >= 0.0)) fail(ErrorKind::kInvalidArgument, "alpha must be nonnegative");
  const double nn = static_cast<double>(n);
  return std::pow(2.0, alpha / 2.0) * std::exp(std::lgamma((nn + alpha) / 2.0) - std::lgamma(nn / 2.0));
}

double brownian_alpha_moment(double alpha, double t, std::size_t n) {
  check_t(t);
  return brownian_alpha_constant(alpha, n) * std::pow(t, alpha / 2.0);
}

namespace {

double sphere_area(std::size_t n) {
  const double nn = static_cast<double>(n);
  return 2.0 * std::pow(std::numbers::pi, nn / 2.0) / std::tgamma(nn / 2.0);
}

template <class F>
double half_line(F&& f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

// r^p exp(log_rest) without inf * 0 in the far tail.
double radial_term(double p, double r, double log_rest) {
  if (!(r > 0.0)) return p == 0.0 ? std::exp(log_rest) : 0.0;
  return std::exp(p * std::log(r) + log_rest);
}

}  // namespace

double lq_by_quadrature(double q, double t, std::size_t n) {
  check_t(t);
  if (n == 0) fail(ErrorKind::kInvalidArgument, "n must be positive");
  const double nn = static_cast<double>(n);
  const double c = std::pow(2.0 * std::numbers::pi * t, -0.5 * nn);
  const double radial = half_line([&](double r) {
    return radial_term(nn - 1.0, r, q * std::log(c) - q * r * r / (2.0 * t));
  });
  return sphere_area(n) * radial;
}

double alpha_moment_by_quadrature(double alpha, double t, std::size_t n) {
  check_t(t);
  if (n == 0) fail(ErrorKind::kInvalidArgument, "n must be positive");
  const double nn = static_cast<double>(n);
  const double c = std::pow(2.0 * std::numbers::pi * t, -0.5 * nn);
  const double radial =
      half_line([&](double r) { return radial_term(nn - 1.0 + alpha, r, std::log(c) - r * r / (2.0 * t)); });
  return sphere_area(n) * radial;
}

// ---------------------------------------------------------------------------

void Grid1dSolver::validate() const {
  if (!(L > 0.0)) fail(ErrorKind::kInvalidConfig, "L must be positive");
  if (!(b0 > 0.0)) fail(ErrorKind::kInvalidWeight, "b0 must be positive");
  if (cells < 2) fail(ErrorKind::kInvalidConfig, "need at least two cells");
  if (!(dt > 0.0)) fail(ErrorKind::kInvalidConfig, "dt must be positive");
}

namespace {

struct Layout {
  std::vector<double> edges;
  std::vector<double> centers;
  std::vector<double> mass;
  std::vector<double> face_resistance;  // between centers j and j+1; last entry: center N-1 to sqrt L
};

// 2 int_a^b s^{1-2b} ds, the reciprocal conductance of x^b u_x in the s chart.
double resistance(double a, double c, double b) {
  if (std::abs(b - 1.0) < 1e-14) return 2.0 * std::log(c / a);
  const double p = 2.0 - 2.0 * b;
  return 2.0 * (std::pow(c, p) - std::pow(a, p)) / p;
}

Layout layout(const Grid1dSolver& g) {
  Layout l;
  const std::size_t N = g.cells;
  const double S = std::sqrt(g.L);
  const double h = S / static_cast<double>(N);
  l.edges.resize(N + 1);
  for (std::size_t j = 0; j <= N; ++j) l.edges[j] = h * static_cast<double>(j);
  l.edges[N] = S;
  l.centers.resize(N);
  l.mass.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    l.centers[j] = 0.5 * (l.edges[j] + l.edges[j + 1]);
    l.mass[j] = (std::pow(l.edges[j + 1], 2.0 * g.b0) - std::pow(l.edges[j], 2.0 * g.b0)) / g.b0;
  }
  l.face_resistance.resize(N);
  for (std::size_t j = 0; j + 1 < N; ++j) l.face_resistance[j] = resistance(l.centers[j], l.centers[j + 1], g.b0);
  l.face_resistance[N - 1] = resistance(l.centers[N - 1], S, g.b0);
  return l;
}

// (A u)_j = F_{j+1/2} - F_{j-1/2} with zero flux at s = 0 and u(L) = 0.
void apply_A(const Layout& l, const std::vector<double>& u, std::vector<double>& out) {
  const std::size_t N = u.size();
  out.assign(N, 0.0);
  for (std::size_t j = 0; j + 1 < N; ++j) {
    const double F = (u[j + 1] - u[j]) / l.face_resistance[j];
    out[j] += F;
    out[j + 1] -= F;
  }
  out[N - 1] -= u[N - 1] / l.face_resistance[N - 1];
}

// Solves (M - w k A) v = rhs.
void implicit_solve(const Layout& l, double wk, const std::vector<double>& rhs, std::vector<double>& v) {
  const std::size_t N = rhs.size();
  std::vector<double> lo(N, 0.0), di(N, 0.0), up(N, 0.0);
  for (std::size_t j = 0; j < N; ++j) di[j] = l.mass[j];
  for (std::size_t j = 0; j + 1 < N; ++j) {
    const double c = wk / l.face_resistance[j];
    di[j] += c;
    di[j + 1] += c;
    up[j] = -c;
    lo[j + 1] = -c;
  }
  di[N - 1] += wk / l.face_resistance[N - 1];
  // Thomas algorithm
  std::vector<double> cp(N), dp(N);
  cp[0] = up[0] / di[0];
  dp[0] = rhs[0] / di[0];
  for (std::size_t j = 1; j < N; ++j) {
    const double m = di[j] - lo[j] * cp[j - 1];
    cp[j] = up[j] / m;
    dp[j] = (rhs[j] - lo[j] * dp[j - 1]) / m;
  }
  v.resize(N);
  v[N - 1] = dp[N - 1];
  for (std::size_t j = N - 1; j-- > 0;) v[j] = dp[j] - cp[j] * v[j + 1];
}

}  // namespace

std::vector<double> grid_initial(const Grid1dSolver& solver, const std::function<double(double)>& f) {
  solver.validate();
  const Layout l = layout(solver);
  std::vector<double> u(l.centers.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = f(l.centers[j] * l.centers[j]);
  return u;
}

std::vector<double> grid_dirac_at_zero(const Grid1dSolver& solver) {
  solver.validate();
  const Layout l = layout(solver);
  std::vector<double> u(l.centers.size(), 0.0);
  u[0] = 1.0 / l.mass[0];
  return u;
}

GridSolution solve_parabolic_1d(const Grid1dSolver& solver, const std::vector<double>& initial, double T,
                                const SourceFn& source, const BoundaryFn& boundary) {
  solver.validate();
  check_t(T);
  const Layout l = layout(solver);
  const std::size_t N = solver.cells;
  if (initial.size() != N) fail(ErrorKind::kDimensionMismatch, "initial data has the wrong number of cells");
  const auto steps = static_cast<std::size_t>(std::ceil(T / solver.dt - 1e-9));
  const double k = T / static_cast<double>(steps);
  const bool homogeneous = !source && !boundary;

  GridSolution sol;
  sol.L = solver.L;
  sol.b0 = solver.b0;
  sol.s_edges = l.edges;
  sol.s_centers = l.centers;
  sol.mass = l.mass;
  sol.times.reserve(steps + 1);
  sol.values.reserve(steps + 1);
  auto gb = [&](double t) { return boundary ? boundary(t) : 0.0; };
  // forcing: boundary inflow plus mu-weighted source
  auto forcing = [&](double t, std::vector<double>& out) {
    out.assign(N, 0.0);
    out[N - 1] += gb(t) / l.face_resistance[N - 1];
    if (source)
      for (std::size_t j = 0; j < N; ++j) out[j] += l.mass[j] * source(t, l.centers[j] * l.centers[j]);
  };

  std::vector<double> u = initial;
  sol.times.push_back(0.0);
  sol.values.push_back(u);
  sol.boundary.push_back(gb(0.0));
  std::vector<double> Au, f0, f1, rhs(N), next;
  double energy = sol.mu_l2_norm_sq(0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = k * static_cast<double>(n);
    const double t1 = k * static_cast<double>(n + 1);
    forcing(t1, f1);
    if (solver.rannacher && n < 2) {
      for (std::size_t j = 0; j < N; ++j) rhs[j] = l.mass[j] * u[j] + k * f1[j];
      implicit_solve(l, k, rhs, next);
    } else {
      apply_A(l, u, Au);
      forcing(t0, f0);
      for (std::size_t j = 0; j < N; ++j) rhs[j] = l.mass[j] * u[j] + 0.5 * k * (Au[j] + f0[j] + f1[j]);
      implicit_solve(l, 0.5 * k, rhs, next);
    }
    u.swap(next);
    for (double v : u)
      if (!std::isfinite(v)) fail(ErrorKind::kNumericFailure, "grid solution became non-finite");
    sol.times.push_back(t1);
    sol.values.push_back(u);
    sol.boundary.push_back(gb(t1));
    if (homogeneous) {
      const double e = sol.mu_l2_norm_sq(sol.values.size() - 1);
      if (e > energy * (1.0 + 1e-10) + 1e-300)
        fail(ErrorKind::kUnstableConfiguration, "discrete L2(mu) norm grew at step " + std::to_string(n + 1));
      energy = e;
    }
  }
  return sol;
}

GridSolution solve_parabolic_1d(const Grid1dSolver& solver, const std::function<double(double)>& f, double T,
                                const SourceFn& source, const BoundaryFn& boundary) {
  return solve_parabolic_1d(solver, grid_initial(solver, f), T, source, boundary);
}

double GridSolution::mu_l2_norm_sq(std::size_t k) const {
  double s = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) s += mass[j] * values[k][j] * values[k][j];
  return s;
}

double GridSolution::mu_mass(std::size_t k) const {
  double s = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) s += mass[j] * values[k][j];
  return s;
}

double GridSolution::at(double t, double x) const {
  if (times.empty()) fail(ErrorKind::kInvalidArgument, "empty grid solution");
  if (t < -1e-12 || t > times.back() + 1e-9) fail(ErrorKind::kInvalidArgument, "t outside the solved range");
  if (x < 0.0 || x > L * (1.0 + 1e-12)) fail(ErrorKind::kInvalidArgument, "x outside [0, L]");
  const double s = std::sqrt(std::max(x, 0.0));
  auto space = [&](std::size_t k) {
    const std::vector<double>& u = values[k];
    const std::size_t N = u.size();
    if (s <= s_centers.front()) return u.front();
    if (s >= s_centers.back()) {
      const double S = s_edges.back();
      const double w = (s - s_centers.back()) / (S - s_centers.back());
      return (1.0 - w) * u.back() + w * boundary[k];
    }
    const auto it = std::upper_bound(s_centers.begin(), s_centers.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - s_centers.begin()) - 1;
    const double w = (s - s_centers[j]) / (s_centers[j + 1] - s_centers[j]);
    (void)N;
    return (1.0 - w) * u[j] + w * u[j + 1];
  };
  const double step = times.size() > 1 ? times[1] - times[0] : 1.0;
  const double pos = std::clamp(t / step, 0.0, static_cast<double>(times.size() - 1));
  const auto k0 = static_cast<std::size_t>(std::floor(pos));
  if (k0 + 1 >= times.size()) return space(times.size() - 1);
  const double w = pos - static_cast<double>(k0);
  return w == 0.0 ? space(k0) : (1.0 - w) * space(k0) + w * space(k0 + 1);
}

}  // namespace kimura
