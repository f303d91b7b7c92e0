#pragma once

// Independent references: squared-Bessel densities for the 1D constant
// coefficient model, Brownian closed forms, and a 1D Crank-Nicolson finite
// volume solver in the sqrt(x) chart.

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace kimura {

/// Generator x d^2 + b0 d on [0, inf): a squared Bessel process of dimension
/// 2 b0 run at half speed.
struct Besq1dModel {
  double b0 = 1.0;
  double x0 = 0.0;
  void validate() const;
};

/// Lebesgue density of X(t) at x: sum_j Pois(j; x0/t) Gamma(x; b0 + j, scale t).
double besq_transition_density(const Besq1dModel& model, double t, double x);
/// Density with respect to mu = x^{b0 - 1} dx.
double besq_density_mu(const Besq1dModel& model, double t, double x);
/// P(X(t) <= x).
double besq_transition_cdf(const Besq1dModel& model, double t, double x);
double besq_mean(const Besq1dModel& model, double t);
double besq_variance(const Besq1dModel& model, double t);

/// One exact transition over dt: N ~ Poisson(x / dt), X' ~ Gamma(b0 + N, scale dt).
template <class URBG>
double besq_exact_step(double x, double b0, double dt, URBG& gen) {
  long long n = 0;
  if (x > 0.0) n = std::poisson_distribution<long long>(x / dt)(gen);
  const double shape = b0 + static_cast<double>(n);
  return shape > 0.0 ? std::gamma_distribution<double>(shape, dt)(gen) : 0.0;
}

// ---------------------------------------------------------------------------
// Brownian closed forms (heat kernel with covariance t I)

double gaussian_reference(double t, const Eigen::VectorXd& z0, const Eigen::VectorXd& z);
/// int p(t, z)^q dz over R^n = (2 pi)^{n(1-q)/2} q^{-n/2} t^{(1-q)n/2}.
double lq_closed_form(double q, double t, std::size_t n);
/// E|B(t)|^alpha = C t^{alpha/2} with C = 2^{alpha/2} Gamma((n+alpha)/2) / Gamma(n/2).
double brownian_alpha_moment(double alpha, double t, std::size_t n);
double brownian_alpha_constant(double alpha, std::size_t n);
/// The same two quantities by radial quadrature of the kernel.
double lq_by_quadrature(double q, double t, std::size_t n);
double alpha_moment_by_quadrature(double alpha, double t, std::size_t n);

// ---------------------------------------------------------------------------
// 1D grid solver for u_t = x u_xx + b0 u_x + g on (0, L), Dirichlet at L.

struct Grid1dSolver {
  double L = 4.0;
  double b0 = 0.5;
  std::size_t cells = 200;  // uniform in s = sqrt(x)
  double dt = 1e-3;
  bool rannacher = true;  // two backward-Euler steps before Crank-Nicolson
  void validate() const;
};

struct GridSolution {
  double L = 0.0;
  double b0 = 0.0;
  std::vector<double> s_edges;
  std::vector<double> s_centers;
  std::vector<double> mass;  // mu(cell)
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [time][cell]
  std::vector<double> boundary;            // u(t, L) per time

  /// Piecewise linear in s between centers (and to the boundary value at sqrt L),
  /// linear in t between steps.
  double at(double t, double x) const;
  /// sum_j mu(cell_j) u_j^2 at time index k.
  double mu_l2_norm_sq(std::size_t k) const;
  /// sum_j mu(cell_j) u_j at time index k.
  double mu_mass(std::size_t k) const;
};

using SourceFn = std::function<double(double, double)>;  // (t, x)
using BoundaryFn = std::function<double(double)>;        // t -> u(t, L)

/// Cell values from point data at the cell centers.
std::vector<double> grid_initial(const Grid1dSolver& solver, const std::function<double(double)>& f);
/// Unit-mass approximation of a point mass at 0: e_0 / mu(cell_0).
std::vector<double> grid_dirac_at_zero(const Grid1dSolver& solver);

/// Empty source / boundary mean zero. With both empty the discrete L^2(dmu)
/// norm must not grow; kUnstableConfiguration otherwise.
GridSolution solve_parabolic_1d(const Grid1dSolver& solver, const std::vector<double>& initial, double T,
                                const SourceFn& source = {}, const BoundaryFn& boundary = {});
GridSolution solve_parabolic_1d(const Grid1dSolver& solver, const std::function<double(double)>& f, double T,
                                const SourceFn& source = {}, const BoundaryFn& boundary = {});

}  // namespace kimura
