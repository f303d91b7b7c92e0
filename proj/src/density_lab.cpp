#include "kimura/density_lab.hpp"

#include "kimura/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace kimura {

using nlohmann::json;

namespace {

double path_weight(const PathBundle& b, std::size_t p, std::size_t r) {
  return b.weighted() ? std::exp(b.weight_log(p, r)) : 1.0;
}

std::vector<double> axis_edges(const Interval& iv, std::size_t cells, bool sqrt_chart) {
  std::vector<double> e(cells + 1);
  if (sqrt_chart) {
    const double a = std::sqrt(iv.lo);
    const double b = std::sqrt(iv.hi);
    for (std::size_t i = 0; i <= cells; ++i) {
      const double u = a + (b - a) * static_cast<double>(i) / static_cast<double>(cells);
      e[i] = u * u;
    }
  } else {
    for (std::size_t i = 0; i <= cells; ++i)
      e[i] = iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / static_cast<double>(cells);
  }
  e.front() = iv.lo;
  e.back() = iv.hi;
  return e;
}

// Cell index along one axis, or npos outside [lo, hi].
std::size_t locate(const std::vector<double>& edges, double v) {
  if (v < edges.front() || v > edges.back()) return static_cast<std::size_t>(-1);
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const auto i = static_cast<std::size_t>(it - edges.begin());
  return std::min(i, edges.size() - 1) - 1;
}

}  // namespace

std::vector<std::size_t> DensityEstimate::unravel(std::size_t cell) const {
  std::vector<std::size_t> idx(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::size_t n = edges[k].size() - 1;
    idx[k] = cell % n;
    cell /= n;
  }
  return idx;
}

Box DensityEstimate::cell_box(std::size_t cell) const {
  const auto idx = unravel(cell);
  Box b;
  for (std::size_t k = 0; k < edges.size(); ++k) b.axes.push_back({edges[k][idx[k]], edges[k][idx[k] + 1]});
  return b;
}

Point DensityEstimate::cell_center(std::size_t cell) const {
  const Box b = cell_box(cell);
  Point z(Eigen::VectorXd::Zero(dims.n), Eigen::VectorXd::Zero(dims.m));
  for (std::size_t k = 0; k < b.size(); ++k) z.coord(k) = 0.5 * (b.axes[k].lo + b.axes[k].hi);
  return z;
}

double DensityEstimate::grid_mass() const {
  double s = 0.0;
  for (std::size_t c = 0; c < values.size(); ++c) s += values[c] * mu_cell[c];
  return s;
}

void DensityEstimate::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < dims.n; ++i) os << "x" << i << ',';
  for (std::size_t l = 0; l < dims.m; ++l) os << "y" << l << ',';
  os << "mu_cell,density\n";
  char buf[64];
  for (std::size_t c = 0; c < values.size(); ++c) {
    const Point z = cell_center(c);
    for (std::size_t k = 0; k < dims.total(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,", z.coord(k));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", mu_cell[c], values[c]);
    os << buf;
  }
}

json DensityEstimate::summary() const {
  json cells = json::array();
  for (const auto& e : edges) cells.push_back(e.size() - 1);
  return json{{"t", t},
              {"n_paths", n_paths},
              {"cells", cells},
              {"survival_mass", survival_mass},
              {"grid_mass", grid_mass()},
              {"tail_mass", tail_mass},
              {"degenerate", degenerate}};
}

DensityEstimate estimate_density(const PathBundle& bundle, double t, const GridSpec& grid,
                                 const WeightedMeasure& measure) {
  const StateSpaceDims& dims = bundle.dims;
  if (grid.box.size() != dims.total()) fail(ErrorKind::kDimensionMismatch, "grid box has the wrong dimension");
  if (!grid.cells.empty() && grid.cells.size() != dims.total())
    fail(ErrorKind::kDimensionMismatch, "cells per axis has the wrong length");
  const std::size_t r = bundle.record_index(t);

  DensityEstimate est;
  est.t = bundle.times[r];
  est.z0 = bundle.start;
  est.dims = dims;
  est.n_paths = bundle.n_paths();
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims.total(); ++k) {
    const std::size_t n = grid.cells.empty() ? 64 : grid.cells[k];
    if (n == 0) fail(ErrorKind::kInvalidConfig, "zero cells on an axis");
    const Interval& iv = grid.box.axes[k];
    if (!(iv.hi > iv.lo)) fail(ErrorKind::kInvalidConfig, "empty grid interval");
    if (k < dims.n && iv.lo < 0.0) fail(ErrorKind::kInvalidConfig, "grid leaves x >= 0");
    est.edges.push_back(axis_edges(iv, n, k < dims.n && grid.chart == CellChart::kSqrt));
    total *= n;
  }
  est.counts.assign(total, 0.0);
  est.values.assign(total, 0.0);
  est.mu_cell.assign(total, 0.0);

  double alive = 0.0;
  double outside = 0.0;
  for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
    if (!bundle.alive(p, r)) continue;
    const double w = path_weight(bundle, p, r);
    alive += w;
    std::size_t cell = 0;
    std::size_t stride = 1;
    bool in = true;
    for (std::size_t k = 0; k < dims.total() && in; ++k) {
      const std::size_t i = locate(est.edges[k], bundle.coord(p, r, k));
      if (i == static_cast<std::size_t>(-1)) {
        in = false;
        break;
      }
      cell += i * stride;
      stride *= est.edges[k].size() - 1;
    }
    if (in)
      est.counts[cell] += w;
    else
      outside += w;
  }
  const double N = static_cast<double>(bundle.n_paths());
  est.survival_mass = alive / N;
  est.tail_mass = outside / N;
  est.degenerate = alive == 0.0;
  for (std::size_t c = 0; c < total; ++c) {
    est.mu_cell[c] = mu_box(measure, est.cell_box(c), grid.cell_quadrature);
    if (est.counts[c] > 0.0) {
      if (!(est.mu_cell[c] > 0.0)) fail(ErrorKind::kNumericFailure, "occupied cell with zero measure");
      est.values[c] = est.counts[c] / (N * est.mu_cell[c]);
    }
  }
  return est;
}

double check_mass(const DensityEstimate& est) { return est.grid_mass() + est.tail_mass; }

double l1_distance(const DensityEstimate& est, const WeightedMeasure& measure,
                   const std::function<double(const Point&)>& p_ref_mu, double ref_tail_mass,
                   const QuadratureConfig& quad) {
  double total = 0.0;
  for (std::size_t c = 0; c < est.n_cells(); ++c) {
    const double v = est.values[c];
    total += mu_box_integral(measure, est.cell_box(c), quad, [&](const Point& z) { return std::abs(v - p_ref_mu(z)); });
  }
  return total + std::abs(est.tail_mass - ref_tail_mass);
}

// ---------------------------------------------------------------------------

KernelEstimate kernel_density(const PathBundle& bundle, double t, const Point& z, const WeightedMeasure& measure,
                              double bandwidth_scale) {
  const StateSpaceDims& dims = bundle.dims;
  check_point(dims, z);
  const std::size_t r = bundle.record_index(t);
  const std::size_t d = dims.total();
  auto chart = [&](std::size_t k, double v) { return k < dims.n ? std::sqrt(std::max(v, 0.0)) : v; };

  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  std::size_t n_alive = 0;
  for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
    if (!bundle.alive(p, r)) continue;
    ++n_alive;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = chart(k, bundle.coord(p, r, k));
      mean[k] += v;
      sq[k] += v * v;
    }
  }
  KernelEstimate ke;
  ke.bandwidth.assign(d, 0.0);
  const double dd = static_cast<double>(d);
  const double na = static_cast<double>(std::max<std::size_t>(n_alive, 1));
  const double factor = 2.214 * std::pow(4.0 / (dd + 2.0), 1.0 / (dd + 4.0)) * std::pow(na, -1.0 / (dd + 4.0));
  bool usable = n_alive > 1;
  for (std::size_t k = 0; k < d; ++k) {
    const double m = mean[k] / na;
    const double var = std::max(sq[k] / na - m * m, 0.0);
    ke.bandwidth[k] = bandwidth_scale * factor * std::sqrt(var);
    if (!(ke.bandwidth[k] > 1e-12)) usable = false;
  }

  // chart Jacobian: dx = 2u du, and the mu density at z
  double jac = 1.0;
  for (std::size_t i = 0; i < dims.n; ++i) jac *= 2.0 * std::sqrt(std::max(z.x[i], 0.0));
  const double mu_z = mu_density(measure, z);
  const double denom = jac * mu_z;

  std::vector<double> c(bundle.n_paths(), 0.0);
  std::vector<double> w(bundle.n_paths(), 1.0);
  if (usable && denom > 0.0 && std::isfinite(denom)) {
    for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
      w[p] = path_weight(bundle, p, r);
      if (!bundle.alive(p, r)) continue;
      double k_val = 1.0;
      for (std::size_t k = 0; k < d && k_val > 0.0; ++k) {
        const double u = (chart(k, z.coord(k)) - chart(k, bundle.coord(p, r, k))) / ke.bandwidth[k];
        k_val *= std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) / ke.bandwidth[k] : 0.0;
      }
      if (k_val > 0.0) {
        ++ke.in_window;
        c[p] = w[p] * k_val / denom;
      }
    }
  }
  ke.estimate = summarize(c, bundle.weighted() ? &w : nullptr);
  ke.estimate.seed = bundle.config.seed;
  ke.estimate.untrusted = !usable || ke.in_window < 100 || ke.estimate.untrusted;
  return ke;
}

std::pair<Estimate, Estimate> check_symmetry(const SdeModel& model, const WeightedMeasure& measure, const Point& z0,
                                             const Point& z1, double t, const DomainSpec& domain, PathConfig config) {
  if (!(t > 0.0)) fail(ErrorKind::kInvalidArgument, "t must be positive");
  config.horizon = t;
  config.record_stride = config.n_steps();
  const PathBundle b0 = simulate_bundle(model, z0, domain, config);
  const PathBundle b1 = simulate_bundle(model, z1, domain, config);
  return {kernel_density(b0, b0.times.back(), z1, measure).estimate,
          kernel_density(b1, b1.times.back(), z0, measure).estimate};
}

double lq_statistic(const DensityEstimate& est, double q) {
  if (!(q >= 1.0)) fail(ErrorKind::kInvalidArgument, "q must be >= 1");
  double s = 0.0;
  for (std::size_t c = 0; c < est.n_cells(); ++c)
    if (est.values[c] > 0.0) s += std::pow(est.values[c], q) * est.mu_cell[c];
  return std::pow(s, 1.0 / q);
}

double holder_moment(const PathBundle& bundle, double t, double alpha) {
  if (!(alpha >= 0.0)) fail(ErrorKind::kInvalidArgument, "alpha must be nonnegative");
  const std::size_t r = bundle.record_index(t);
  double s = 0.0;
  for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
    if (!bundle.alive(p, r)) continue;
    s += path_weight(bundle, p, r) * std::pow(rho(bundle.start, bundle.state(p, r)), alpha);
  }
  return s / static_cast<double>(bundle.n_paths());
}

json ScalingReport::to_json() const {
  json s = json::array();
  for (const auto& [t, v] : series) s.push_back({t, v});
  return json{{"exponent_fit", exponent_fit}, {"intercept", intercept}, {"r2", r2}, {"series", s}};
}

ScalingReport fit_power_law(const std::vector<std::pair<double, double>>& series) {
  ScalingReport rep;
  rep.series = series;
  std::vector<double> X, Y;
  for (const auto& [t, v] : series)
    if (t > 0.0 && v > 0.0) {
      X.push_back(std::log(t));
      Y.push_back(std::log(v));
    }
  if (X.size() < 2) fail(ErrorKind::kInvalidArgument, "need two positive points for a power-law fit");
  const double n = static_cast<double>(X.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
    syy += (Y[i] - my) * (Y[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::kInvalidArgument, "power-law fit needs distinct times");
  rep.exponent_fit = sxy / sxx;
  rep.intercept = my - rep.exponent_fit * mx;
  const double ss_res = std::max(syy - rep.exponent_fit * sxy, 0.0);
  rep.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return rep;
}

json UpperBoundReport::to_json() const {
  return json{{"t", t}, {"max_ratio", max_ratio}, {"cells_used", cells_used}, {"cells_skipped", cells_skipped}};
}

UpperBoundReport upper_bound_check(const DensityEstimate& est, const WeightedMeasure& measure,
                                   const QuadratureConfig& quad) {
  UpperBoundReport rep;
  rep.t = est.t;
  if (!(est.t > 0.0)) fail(ErrorKind::kInvalidArgument, "upper bound check needs t > 0");
  const double r = std::sqrt(est.t);
  const double mu0 = mu_ball(measure, MetricBall{est.z0, r, BallMetric::kIntrinsic}, quad);
  for (std::size_t c = 0; c < est.n_cells(); ++c) {
    if (!(est.values[c] > 0.0)) continue;
    const Point z = est.cell_center(c);
    const double mu1 = mu_ball(measure, MetricBall{z, r, BallMetric::kIntrinsic}, quad);
    if (!(mu0 > 0.0) || !(mu1 > 0.0) || !std::isfinite(mu0 * mu1)) {
      ++rep.cells_skipped;
      continue;
    }
    const double rh = rho(est.z0, z);
    const double bound = std::exp(-rh * rh / (8.0 * est.t)) / std::sqrt(mu0 * mu1);
    if (!(bound > 0.0)) {
      ++rep.cells_skipped;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, est.values[c] / bound);
    ++rep.cells_used;
  }
  return rep;
}

double upper_bound_spread(const std::vector<UpperBoundReport>& reports) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& r : reports) {
    lo = std::min(lo, r.max_ratio);
    hi = std::max(hi, r.max_ratio);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace kimura
