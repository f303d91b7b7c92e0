#include "kimura/state_geometry.hpp"

#include "kimura/error.hpp"
#include "kimura/fields.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kimura {

using nlohmann::json;

void StateSpaceDims::validate() const {
  if (n + m < 1) fail(ErrorKind::kInvalidArgument, "state space needs n + m >= 1");
}

Point Point::from_flat(const StateSpaceDims& dims, const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != dims.total()) fail(ErrorKind::kDimensionMismatch, "flat vector length");
  return Point(flat.head(dims.n), flat.tail(dims.m));
}

Point Point::x_only(std::initializer_list<double> xs) {
  Eigen::VectorXd x(xs.size());
  std::size_t i = 0;
  for (double v : xs) x[i++] = v;
  return Point(x, Eigen::VectorXd());
}

Point Point::y_only(std::initializer_list<double> ys) {
  Eigen::VectorXd y(ys.size());
  std::size_t i = 0;
  for (double v : ys) y[i++] = v;
  return Point(Eigen::VectorXd(), y);
}

Eigen::VectorXd Point::flat() const {
  Eigen::VectorXd out(x.size() + y.size());
  out << x, y;
  return out;
}

void check_point(const StateSpaceDims& dims, const Point& p) {
  if (!(p.dims() == dims)) fail(ErrorKind::kDimensionMismatch, "point dimensions do not match the state space");
  for (Eigen::Index i = 0; i < p.x.size(); ++i)
    if (!(p.x[i] >= 0.0) || !std::isfinite(p.x[i])) fail(ErrorKind::kInvalidArgument, "x coordinates must be finite and >= 0");
  for (Eigen::Index l = 0; l < p.y.size(); ++l)
    if (!std::isfinite(p.y[l])) fail(ErrorKind::kInvalidArgument, "y coordinates must be finite");
}

bool Box::contains_closed(const Point& p) const {
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const double v = p.coord(k);
    if (v < axes[k].lo || v > axes[k].hi) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double degenerate_coordinate_distance(double a, double b) {
  if (a <= 1.0 && b <= 1.0) return std::abs(std::sqrt(a) - std::sqrt(b));
  if (a >= 1.0 && b >= 1.0) return std::abs(a - b);
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  return (1.0 - std::sqrt(lo)) + (hi - 1.0);
}

double rho(const Point& z0, const Point& z) {
  if (!(z0.dims() == z.dims())) fail(ErrorKind::kDimensionMismatch, "rho: points have different dimensions");
  double d = 0.0;
  for (Eigen::Index i = 0; i < z.x.size(); ++i) d = std::max(d, degenerate_coordinate_distance(z0.x[i], z.x[i]));
  for (Eigen::Index l = 0; l < z.y.size(); ++l) d = std::max(d, std::abs(z0.y[l] - z.y[l]));
  return d;
}

Interval degenerate_coordinate_ball(double a, double r) {
  Interval out;
  if (a <= 1.0) {
    const double sa = std::sqrt(a);
    out.lo = sa > r ? (sa - r) * (sa - r) : 0.0;
    out.hi = sa + r <= 1.0 ? (sa + r) * (sa + r) : 1.0 + (r - (1.0 - sa));
  } else {
    out.hi = a + r;
    if (a - r >= 1.0) {
      out.lo = a - r;
    } else {
      const double rest = r - (a - 1.0);
      out.lo = rest < 1.0 ? (1.0 - rest) * (1.0 - rest) : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

WeightedMeasure WeightedMeasure::constant(const StateSpaceDims& dims, double b0) {
  dims.validate();
  return {dims, std::vector<ScalarField>(dims.n, ScalarField(b0))};
}

double mu_density(const WeightedMeasure& measure, const Point& z) {
  check_point(measure.dims, z);
  double v = 1.0;
  for (std::size_t i = 0; i < measure.dims.n; ++i) {
    const double b = measure.b[i](z);
    const double x = z.x[i];
    if (x == 0.0) {
      if (b < 1.0) fail(ErrorKind::kSingularEvaluation, "mu density at x_" + std::to_string(i) + " = 0 with b < 1");
      if (b > 1.0) v = 0.0;
      continue;
    }
    v *= std::pow(x, b - 1.0);
  }
  return v;
}

namespace detail {

double mu_density_unchecked(const WeightedMeasure& measure, const Point& z) {
  double v = 1.0;
  for (std::size_t i = 0; i < measure.dims.n; ++i) {
    const double b = measure.b[i](z);
    if (b != 1.0) v *= std::pow(z.x[i], b - 1.0);
  }
  return v;
}

void quadrature_axes(const WeightedMeasure& measure, const Box& box, const QuadratureConfig& quad,
                     std::vector<std::vector<double>>& nodes, std::vector<std::vector<double>>& weights) {
  const StateSpaceDims& dims = measure.dims;
  if (box.size() != dims.total()) fail(ErrorKind::kDimensionMismatch, "quadrature box does not match the measure");
  if (measure.b.size() != dims.n) fail(ErrorKind::kDimensionMismatch, "measure needs one weight per x coordinate");
  if (quad.cells_per_axis == 0) fail(ErrorKind::kInvalidArgument, "quadrature resolution must be positive");
  const std::size_t N = quad.cells_per_axis;
  nodes.assign(box.size(), {});
  weights.assign(box.size(), {});

  Point mid(Eigen::VectorXd::Zero(dims.n), Eigen::VectorXd::Zero(dims.m));
  for (std::size_t k = 0; k < box.size(); ++k) mid.coord(k) = 0.5 * (box.axes[k].lo + box.axes[k].hi);

  for (std::size_t k = 0; k < box.size(); ++k) {
    const Interval iv = box.axes[k];
    if (!(iv.hi >= iv.lo)) fail(ErrorKind::kInvalidArgument, "quadrature box axis with hi < lo");
    nodes[k].resize(N);
    weights[k].resize(N);
    if (k < dims.n) {
      if (iv.lo < 0.0) fail(ErrorKind::kInvalidArgument, "x axis of a quadrature box must lie in [0, inf)");
      if (iv.lo == 0.0) {
        Point edge = mid;
        edge.x[k] = 0.0;
        if (!(measure.b[k](edge) > 0.0)) fail(ErrorKind::kInvalidWeight, "weight b_i <= 0 on {x_i = 0} is not integrable");
      }
      const double u0 = std::sqrt(iv.lo);
      const double du = (std::sqrt(iv.hi) - u0) / static_cast<double>(N);
      for (std::size_t j = 0; j < N; ++j) {
        const double u = u0 + (static_cast<double>(j) + 0.5) * du;
        nodes[k][j] = u * u;
        weights[k][j] = 2.0 * u * du;
      }
    } else {
      const double h = iv.length() / static_cast<double>(N);
      for (std::size_t j = 0; j < N; ++j) {
        nodes[k][j] = iv.lo + (static_cast<double>(j) + 0.5) * h;
        weights[k][j] = h;
      }
    }
  }
}

}  // namespace detail

bool MetricBall::contains(const Point& z) const {
  if (metric == BallMetric::kIntrinsic) return rho(center, z) < radius;
  return (center.flat() - z.flat()).norm() < radius;
}

Box MetricBall::bounding_box() const {
  Box box;
  const std::size_t n = center.x.size();
  const std::size_t d = n + center.y.size();
  for (std::size_t k = 0; k < d; ++k) {
    const double c = center.coord(k);
    if (k < n) {
      box.axes.push_back(metric == BallMetric::kIntrinsic ? degenerate_coordinate_ball(c, radius)
                                                          : Interval{std::max(0.0, c - radius), c + radius});
    } else {
      box.axes.push_back({c - radius, c + radius});
    }
  }
  return box;
}

double mu_box(const WeightedMeasure& measure, const Box& box, const QuadratureConfig& quad) {
  return mu_box_integral(measure, box, quad, [](const Point&) { return true; });
}

double mu_ball(const WeightedMeasure& measure, const MetricBall& ball, const QuadratureConfig& quad) {
  check_point(measure.dims, ball.center);
  if (!(ball.radius > 0.0)) fail(ErrorKind::kInvalidArgument, "ball radius must be positive");
  const Box box = ball.bounding_box();
  // The max-form intrinsic ball is exactly its coordinate box.
  if (ball.metric == BallMetric::kIntrinsic) return mu_box(measure, box, quad);
  return mu_box_integral(measure, box, quad, [&](const Point& z) { return ball.contains(z); });
}

double mu_ball_comparator(const WeightedMeasure& measure, const MetricBall& ball, double r0) {
  check_point(measure.dims, ball.center);
  if (!(ball.radius > 0.0)) fail(ErrorKind::kInvalidArgument, "ball radius must be positive");
  const double r = ball.radius;
  double v = std::pow(r, static_cast<double>(measure.dims.total()));
  for (std::size_t i = 0; i < measure.dims.n; ++i) {
    const double x0 = ball.center.x[i];
    if (x0 > r0) continue;
    v *= std::pow(std::max(std::sqrt(x0), r), 2.0 * measure.b[i](ball.center) - 1.0);
  }
  return v;
}

// ---------------------------------------------------------------------------

HarnackCylinders cylinder_sets(double s, const Point& z, double rho_radius, double c, double d) {
  if (!(rho_radius > 0.0)) fail(ErrorKind::kInvalidArgument, "cylinder radius must be positive");
  if (!(c > std::sqrt(2.0 / 3.0) && c < 1.0))
    fail(ErrorKind::kInvalidHarnackParameters, "c must lie in (sqrt(2/3), 1)");
  const double d2 = d * d;
  const double alpha = 8.0 / (3.0 * c * c);
  const double beta = 4.0 - d2;
  if (!(d2 > 0.0 && d2 < std::max(1.0, 4.0 - alpha)))
    fail(ErrorKind::kInvalidHarnackParameters, "d^2 must lie in (0, max{1, 4 - 8/(3c^2)})");
  if (!(alpha > beta))
    fail(ErrorKind::kInvalidHarnackParameters,
         "alpha = " + std::to_string(alpha) + " must exceed beta = " + std::to_string(beta));
  const double r2 = rho_radius * rho_radius;
  HarnackCylinders out;
  out.alpha = alpha;
  out.beta = beta;
  out.gamma = d2;
  out.minus = {s - alpha * r2, s - beta * r2, z, rho_radius};
  out.plus = {s, s + d2 * r2, z, rho_radius};
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_box(const StateSpaceDims& dims, const Box& box) {
  if (box.size() != dims.total()) fail(ErrorKind::kDimensionMismatch, "domain box must have n+m axes");
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (!(box.axes[k].hi > box.axes[k].lo)) fail(ErrorKind::kInvalidArgument, "domain box axis with hi <= lo");
    if (k < dims.n && box.axes[k].lo < 0.0) fail(ErrorKind::kInvalidArgument, "domain box x axis below 0");
  }
}

// Omega-underbar membership of a coordinate box: the face x_i = 0 belongs to
// the degenerate boundary, every other face to d1Omega.
bool box_contains(const StateSpaceDims& dims, const Box& box, const Point& z) {
  for (std::size_t k = 0; k < box.size(); ++k) {
    const double v = z.coord(k);
    const Interval iv = box.axes[k];
    const bool lo_ok = (k < dims.n && iv.lo == 0.0) ? v >= 0.0 : v > iv.lo;
    if (!lo_ok || !(v < iv.hi)) return false;
  }
  return true;
}

double box_distance(const StateSpaceDims& dims, const Box& box, const Point& z) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < box.size(); ++k) {
    const double v = z.coord(k);
    const Interval iv = box.axes[k];
    if (!(k < dims.n && iv.lo == 0.0)) d = std::min(d, v - iv.lo);
    d = std::min(d, iv.hi - v);
  }
  return d;
}

json box_to_json(const Box& box) {
  json out = json::array();
  for (const auto& iv : box.axes) out.push_back({iv.lo, iv.hi});
  return out;
}

Box box_from_json(const json& j) {
  Box box;
  for (const auto& axis : j) {
    if (!axis.is_array() || axis.size() != 2) fail(ErrorKind::kInvalidConfig, "box axes must be [lo, hi] pairs");
    box.axes.push_back({axis[0].get<double>(), axis[1].get<double>()});
  }
  return box;
}

json point_to_json(const Point& p) {
  return json{{"x", std::vector<double>(p.x.data(), p.x.data() + p.x.size())},
              {"y", std::vector<double>(p.y.data(), p.y.data() + p.y.size())}};
}

Point point_from_json(const json& j, const StateSpaceDims& dims) {
  const auto xs = j.value("x", std::vector<double>{});
  const auto ys = j.value("y", std::vector<double>{});
  if (xs.size() != dims.n || ys.size() != dims.m) fail(ErrorKind::kInvalidConfig, "point has wrong dimensions");
  return Point(Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size()),
               Eigen::Map<const Eigen::VectorXd>(ys.data(), ys.size()));
}

}  // namespace

DomainSpec DomainSpec::full(const StateSpaceDims& dims, Box bounding_box) {
  dims.validate();
  check_box(dims, bounding_box);
  DomainSpec d;
  d.dims_ = dims;
  d.shape_ = Shape::kFull;
  d.box_ = std::move(bounding_box);
  return d;
}

DomainSpec DomainSpec::box(const StateSpaceDims& dims, Box box) {
  dims.validate();
  check_box(dims, box);
  DomainSpec d;
  d.dims_ = dims;
  d.shape_ = Shape::kBox;
  d.box_ = std::move(box);
  return d;
}

DomainSpec DomainSpec::ball(const MetricBall& ball) {
  const StateSpaceDims dims = ball.center.dims();
  dims.validate();
  check_point(dims, ball.center);
  if (!(ball.radius > 0.0)) fail(ErrorKind::kInvalidArgument, "ball radius must be positive");
  DomainSpec d;
  d.dims_ = dims;
  d.shape_ = Shape::kBall;
  d.ball_ = ball;
  d.box_ = ball.bounding_box();
  return d;
}

DomainSpec DomainSpec::halfspaces(const StateSpaceDims& dims, std::vector<Halfspace> planes, Box bounding_box) {
  dims.validate();
  check_box(dims, bounding_box);
  for (const auto& h : planes)
    if (static_cast<std::size_t>(h.normal.size()) != dims.total() || !(h.normal.norm() > 0.0))
      fail(ErrorKind::kInvalidArgument, "halfspace normal must be a nonzero vector of length n+m");
  DomainSpec d;
  d.dims_ = dims;
  d.shape_ = Shape::kHalfspaces;
  d.box_ = std::move(bounding_box);
  d.planes_ = std::move(planes);
  return d;
}

bool DomainSpec::contains(const Point& z) const {
  for (Eigen::Index i = 0; i < z.x.size(); ++i)
    if (z.x[i] < 0.0) return false;
  switch (shape_) {
    case Shape::kFull: return true;
    case Shape::kBox: return box_contains(dims_, box_, z);
    case Shape::kBall: return ball_.contains(z);
    case Shape::kHalfspaces: {
      if (!box_contains(dims_, box_, z)) return false;
      const Eigen::VectorXd f = z.flat();
      for (const auto& h : planes_)
        if (!(h.normal.dot(f) < h.offset)) return false;
      return true;
    }
  }
  return false;
}

double DomainSpec::interior_boundary_distance(const Point& z) const {
  switch (shape_) {
    case Shape::kFull: return std::numeric_limits<double>::infinity();
    case Shape::kBox: return box_distance(dims_, box_, z);
    case Shape::kBall:
      if (ball_.metric == BallMetric::kIntrinsic) return ball_.radius - rho(ball_.center, z);
      return ball_.radius - (ball_.center.flat() - z.flat()).norm();
    case Shape::kHalfspaces: {
      double d = box_distance(dims_, box_, z);
      const Eigen::VectorXd f = z.flat();
      for (const auto& h : planes_) d = std::min(d, (h.offset - h.normal.dot(f)) / h.normal.norm());
      return d;
    }
  }
  return 0.0;
}

json DomainSpec::to_json() const {
  json j;
  j["dims"] = {{"n", dims_.n}, {"m", dims_.m}};
  j["box"] = box_to_json(box_);
  switch (shape_) {
    case Shape::kFull: j["shape"] = "full"; break;
    case Shape::kBox: j["shape"] = "box"; break;
    case Shape::kBall:
      j["shape"] = "ball";
      j["center"] = point_to_json(ball_.center);
      j["radius"] = ball_.radius;
      j["metric"] = ball_.metric == BallMetric::kIntrinsic ? "intrinsic" : "euclidean";
      break;
    case Shape::kHalfspaces: {
      j["shape"] = "halfspace-intersection";
      json hs = json::array();
      for (const auto& h : planes_)
        hs.push_back({{"normal", std::vector<double>(h.normal.data(), h.normal.data() + h.normal.size())},
                      {"offset", h.offset}});
      j["halfspaces"] = hs;
      break;
    }
  }
  return j;
}

DomainSpec DomainSpec::from_json(const json& j) {
  try {
    StateSpaceDims dims{j.at("dims").value("n", std::size_t{0}), j.at("dims").value("m", std::size_t{0})};
    const std::string shape = j.value("shape", std::string("box"));
    if (shape == "ball") {
      MetricBall ball;
      ball.center = point_from_json(j.at("center"), dims);
      ball.radius = j.at("radius").get<double>();
      const std::string metric = j.value("metric", std::string("intrinsic"));
      if (metric != "intrinsic" && metric != "euclidean") fail(ErrorKind::kInvalidConfig, "unknown ball metric '" + metric + "'");
      ball.metric = metric == "intrinsic" ? BallMetric::kIntrinsic : BallMetric::kEuclidean;
      return DomainSpec::ball(ball);
    }
    const Box box = box_from_json(j.at("box"));
    if (shape == "full") return DomainSpec::full(dims, box);
    if (shape == "box") return DomainSpec::box(dims, box);
    if (shape == "halfspace-intersection") {
      std::vector<Halfspace> planes;
      for (const auto& h : j.at("halfspaces")) {
        const auto nrm = h.at("normal").get<std::vector<double>>();
        planes.push_back({Eigen::Map<const Eigen::VectorXd>(nrm.data(), nrm.size()), h.at("offset").get<double>()});
      }
      return DomainSpec::halfspaces(dims, std::move(planes), box);
    }
    fail(ErrorKind::kInvalidConfig, "unknown domain shape '" + shape + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("domain json: ") + e.what());
  }
}

}  // namespace kimura
