#pragma once

// Transition densities with respect to mu from path bundles: histograms,
// kernel point estimates, L^q norms, Hoelder moments, power-law fits and the
// Gaussian-type upper bound ratio.

#include "kimura/feynman_kac.hpp"

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kimura {

enum class CellChart {
  kLinear,  // uniform cells in x
  kSqrt,    // uniform cells in sqrt(x) on degenerate axes
};

struct GridSpec {
  Box box;
  std::vector<std::size_t> cells;  // per axis; empty means 64 everywhere
  CellChart chart = CellChart::kLinear;
  QuadratureConfig cell_quadrature{8};  // for mu(cell)
};

struct DensityEstimate {
  double t = 0.0;
  Point z0;
  StateSpaceDims dims;
  std::vector<std::vector<double>> edges;  // per axis
  std::vector<double> values;              // density w.r.t. mu, axis 0 fastest
  std::vector<double> mu_cell;
  std::vector<double> counts;        // weighted counts
  double survival_mass = 0.0;        // alive (weighted) fraction
  double tail_mass = 0.0;            // alive fraction outside the grid box
  std::size_t n_paths = 0;
  bool degenerate = false;           // no alive path

  std::size_t n_cells() const { return values.size(); }
  std::vector<std::size_t> unravel(std::size_t cell) const;
  Box cell_box(std::size_t cell) const;
  Point cell_center(std::size_t cell) const;
  /// sum values * mu(cell).
  double grid_mass() const;

  /// Columns: cell center coordinates, mu_cell, density.
  void write_csv(std::ostream& os) const;
  nlohmann::json summary() const;
};

/// Histogram density w.r.t. mu at record time t (weighted bundles use exp(log w)).
DensityEstimate estimate_density(const PathBundle& bundle, double t, const GridSpec& grid,
                                 const WeightedMeasure& measure);

/// int p dmu including the alive mass outside the grid (the survival mass).
double check_mass(const DensityEstimate& est);

/// int |p - p_ref| dmu over the grid plus |tail - ref_tail|, where p_ref is
/// a density w.r.t. mu, integrated cellwise by the measure quadrature.
double l1_distance(const DensityEstimate& est, const WeightedMeasure& measure,
                   const std::function<double(const Point&)>& p_ref_mu, double ref_tail_mass,
                   const QuadratureConfig& quad = {16});

/// Product Epanechnikov kernel estimate of the mu-density at z from bundle
/// paths alive at t, in the (sqrt x, y) chart with Silverman-type bandwidth.
struct KernelEstimate {
  Estimate estimate;
  std::vector<double> bandwidth;  // chart units
  std::size_t in_window = 0;      // paths inside the kernel support
};
KernelEstimate kernel_density(const PathBundle& bundle, double t, const Point& z, const WeightedMeasure& measure,
                              double bandwidth_scale = 1.0);

/// Kernel estimates of p(t, z0, z1) and p(t, z1, z0) from two bundles.
std::pair<Estimate, Estimate> check_symmetry(const SdeModel& model, const WeightedMeasure& measure, const Point& z0,
                                             const Point& z1, double t, const DomainSpec& domain, PathConfig config);

/// ||p||_{L^q(dmu)} over the grid.
double lq_statistic(const DensityEstimate& est, double q);

/// E[w rho(z0, Z(t))^alpha 1_alive] directly over paths.
double holder_moment(const PathBundle& bundle, double t, double alpha);

struct ScalingReport {
  double exponent_fit = 0.0;  // slope of ln(statistic) against ln(t)
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> series;

  nlohmann::json to_json() const;
};

/// Least squares of ln(statistic) on ln(t) over positive pairs.
ScalingReport fit_power_law(const std::vector<std::pair<double, double>>& series);

struct UpperBoundReport {
  double t = 0.0;
  double max_ratio = 0.0;  // empirical constant
  std::size_t cells_used = 0;
  std::size_t cells_skipped = 0;
  nlohmann::json to_json() const;
};

/// max over cells of p / [exp(-rho^2/(8t)) / sqrt(mu(B_sqrt t(z0)) mu(B_sqrt t(z)))].
UpperBoundReport upper_bound_check(const DensityEstimate& est, const WeightedMeasure& measure,
                                   const QuadratureConfig& quad = {32});

/// max / min of the empirical constants (stable when <= factor).
double upper_bound_spread(const std::vector<UpperBoundReport>& reports);

}  // namespace kimura
