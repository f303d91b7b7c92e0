#pragma once

// State space S_{n,m} = R^n_+ x R^m, the intrinsic metric, the weighted
// measure dmu = prod x_i^{b_i - 1} dz, metric balls, parabolic cylinders and
// subdomains with their degenerate / non-degenerate boundary split.

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kimura {

class ScalarField;

struct StateSpaceDims {
  std::size_t n = 0;  // degenerate coordinates x
  std::size_t m = 0;  // free coordinates y

  std::size_t total() const { return n + m; }
  void validate() const;
  bool operator==(const StateSpaceDims&) const = default;
};

/// z = (x, y). Coordinates are also addressed through a flat index k in
/// [0, n+m): k < n is x_k, otherwise y_{k-n}.
struct Point {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  Point() = default;
  Point(Eigen::VectorXd xs, Eigen::VectorXd ys) : x(std::move(xs)), y(std::move(ys)) {}

  static Point from_flat(const StateSpaceDims& dims, const Eigen::VectorXd& flat);
  static Point x_only(std::initializer_list<double> xs);
  static Point y_only(std::initializer_list<double> ys);

  StateSpaceDims dims() const { return {static_cast<std::size_t>(x.size()), static_cast<std::size_t>(y.size())}; }
  double coord(std::size_t k) const { return k < static_cast<std::size_t>(x.size()) ? x[k] : y[k - x.size()]; }
  double& coord(std::size_t k) { return k < static_cast<std::size_t>(x.size()) ? x[k] : y[k - x.size()]; }
  Eigen::VectorXd flat() const;
};

/// Throws kDimensionMismatch / kInvalidArgument unless p lives in the closure of S_{n,m}.
void check_point(const StateSpaceDims& dims, const Point& p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Per-coordinate intervals in flat order (x first, then y).
struct Box {
  std::vector<Interval> axes;

  std::size_t size() const { return axes.size(); }
  bool contains_closed(const Point& p) const;
};

// ---------------------------------------------------------------------------
// Intrinsic metric

/// Per-coordinate distance used by rho for a degenerate coordinate:
/// |sqrt a - sqrt b| on [0,1], |a - b| on [1,inf), additive through 1 otherwise.
double degenerate_coordinate_distance(double a, double b);

/// Canonical comparator metric: max of the per-coordinate distances.
/// Satisfies the triangle inequality up to a factor of at most 2.
double rho(const Point& z0, const Point& z);

/// {w >= 0 : degenerate_coordinate_distance(a, w) < r} as an open interval
/// (lo clamped at 0, in which case 0 belongs to the set).
Interval degenerate_coordinate_ball(double a, double r);

// ---------------------------------------------------------------------------
// Measure

struct WeightedMeasure {
  StateSpaceDims dims;
  std::vector<ScalarField> b;  // length n

  static WeightedMeasure constant(const StateSpaceDims& dims, double b0);
};

/// prod_i x_i^{b_i(z) - 1}. Throws kSingularEvaluation when some x_i = 0 and b_i(z) < 1.
double mu_density(const WeightedMeasure& measure, const Point& z);

struct QuadratureConfig {
  std::size_t cells_per_axis = 64;
};

enum class BallMetric { kIntrinsic, kEuclidean };

struct MetricBall {
  Point center;
  double radius = 0.0;
  BallMetric metric = BallMetric::kIntrinsic;

  bool contains(const Point& z) const;
  /// Smallest coordinate box (clipped to x >= 0) containing the ball.
  Box bounding_box() const;
};

/// Tensor-product midpoint rule for int_box h dmu, where h returns a number or
/// a bool (an indicator). Degenerate coordinates are integrated in u = sqrt(x)
/// so that x^{b-1} singularities with b < 1 stay integrable.
template <class Integrand>
double mu_box_integral(const WeightedMeasure& measure, const Box& box, const QuadratureConfig& quad,
                       Integrand&& h);

double mu_box(const WeightedMeasure& measure, const Box& box, const QuadratureConfig& quad);
double mu_ball(const WeightedMeasure& measure, const MetricBall& ball, const QuadratureConfig& quad);

/// r^{m+n} prod_{i in I(z0)} (sqrt(x0_i) v r)^{2 b_i(z0) - 1}, I(z0) = {i : x0_i <= r0}.
double mu_ball_comparator(const WeightedMeasure& measure, const MetricBall& ball, double r0 = 0.25);

// ---------------------------------------------------------------------------
// Cylinders

/// (t_end - r^2, t_end) x B_r(center).
struct ParabolicCylinder {
  double t_end = 0.0;
  Point center;
  double radius = 0.0;
};

/// (t_lo, t_hi) x B_radius(center); the shape shared by Q_r, Q^-_rho, Q^+_rho.
struct CylinderSet {
  double t_lo = 0.0;
  double t_hi = 0.0;
  Point center;
  double radius = 0.0;

  static CylinderSet from(const ParabolicCylinder& q) { return {q.t_end - q.radius * q.radius, q.t_end, q.center, q.radius}; }
  bool contains(double t, const Point& z) const { return t > t_lo && t < t_hi && rho(center, z) < radius; }
};

struct HarnackCylinders {
  CylinderSet minus;
  CylinderSet plus;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Q^-_rho = (s - alpha rho^2, s - beta rho^2) x B_rho(z) and
/// Q^+_rho = (s, s + gamma rho^2) x B_rho(z) with alpha = 8/(3c^2),
/// beta = 4 - d^2, gamma = d^2. Requires c in (sqrt(2/3), 1),
/// d^2 < max{1, 4 - 8/(3c^2)} and alpha > beta.
HarnackCylinders cylinder_sets(double s, const Point& z, double rho_radius, double c, double d);

// ---------------------------------------------------------------------------
// Domains

struct Halfspace {
  Eigen::VectorXd normal;  // flat coordinates
  double offset = 0.0;     // {z : normal . z < offset}
};

/// Open Omega in S_{n,m}. Membership is tested on Omega-underbar =
/// Omega u d0Omega: points on {x_i = 0} that are limits of Omega belong to
/// it, points on the non-degenerate boundary d1Omega do not.
class DomainSpec {
 public:
  enum class Shape { kFull, kBox, kBall, kHalfspaces };

  static DomainSpec full(const StateSpaceDims& dims, Box bounding_box);
  static DomainSpec box(const StateSpaceDims& dims, Box box);
  static DomainSpec ball(const MetricBall& ball);
  static DomainSpec halfspaces(const StateSpaceDims& dims, std::vector<Halfspace> planes, Box bounding_box);

  const StateSpaceDims& dims() const { return dims_; }
  Shape shape() const { return shape_; }
  const Box& bounding_box() const { return box_; }

  /// z in Omega-underbar (the set paths live in before tau_Omega).
  bool contains(const Point& z) const;
  /// Signed distance to d1Omega, positive inside; +inf for the full space.
  double interior_boundary_distance(const Point& z) const;

  nlohmann::json to_json() const;
  static DomainSpec from_json(const nlohmann::json& j);

 private:
  StateSpaceDims dims_;
  Shape shape_ = Shape::kFull;
  Box box_;
  MetricBall ball_;
  std::vector<Halfspace> planes_;
};

// ---------------------------------------------------------------------------

namespace detail {
void quadrature_axes(const WeightedMeasure& measure, const Box& box, const QuadratureConfig& quad,
                     std::vector<std::vector<double>>& nodes, std::vector<std::vector<double>>& weights);
double mu_density_unchecked(const WeightedMeasure& measure, const Point& z);
}  // namespace detail

template <class Integrand>
double mu_box_integral(const WeightedMeasure& measure, const Box& box, const QuadratureConfig& quad,
                       Integrand&& h) {
  std::vector<std::vector<double>> nodes;
  std::vector<std::vector<double>> weights;
  detail::quadrature_axes(measure, box, quad, nodes, weights);
  const std::size_t d = box.size();
  if (d == 0) return 0.0;
  const StateSpaceDims& dims = measure.dims;
  Point z(Eigen::VectorXd::Zero(dims.n), Eigen::VectorXd::Zero(dims.m));
  std::vector<std::size_t> idx(d, 0);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      z.coord(k) = nodes[k][idx[k]];
      w *= weights[k][idx[k]];
    }
    if (w > 0.0) {
      const double v = static_cast<double>(h(z));
      if (v != 0.0) total += w * v * detail::mu_density_unchecked(measure, z);
    }
    std::size_t k = 0;
    while (k < d && ++idx[k] == nodes[k].size()) idx[k++] = 0;
    if (k == d) break;
  }
  return total;
}

}  // namespace kimura

// WeightedMeasure holds ScalarFields; complete the type for includers of this header.
#include "kimura/fields.hpp"
