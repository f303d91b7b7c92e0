#pragma once

// Empirical Harnack ratios of nonnegative solutions over parabolic cylinders,
// scale scans over the offset cylinders, and the closed-form chain geometry.

#include "kimura/feynman_kac.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

#include <json.hpp>

namespace kimura {

using SolutionEstimator = std::function<Estimate(double, const Point&)>;

/// Sample points at fractions i/N, i = 1..N-1, of each time interval and of
/// each coordinate interval of the ball (sqrt chart on x axes). Doubling N
/// keeps every earlier point.
struct LatticeSpec {
  std::size_t time_divisions = 4;
  std::size_t space_divisions = 4;
  nlohmann::json to_json() const;
};

struct HarnackReport {
  CylinderSet sup_set;
  CylinderSet inf_set;
  double sup_value = 0.0;
  double sup_stderr = 0.0;
  double inf_value = 0.0;
  double inf_stderr = 0.0;
  double ratio = 0.0;         // +inf when unbounded
  double ratio_stderr = 0.0;  // first-order propagation
  bool unbounded = false;     // inf <= 3 stderr
  LatticeSpec lattice;
  std::size_t points_evaluated = 0;
  std::string solution_fingerprint;

  nlohmann::json to_json() const;
};

/// Lattice points of a cylinder set, time-major.
std::vector<std::pair<double, Point>> cylinder_lattice(const CylinderSet& set, const LatticeSpec& lattice);

/// max of u over sup_set against min over inf_set.
HarnackReport cylinder_ratio(const SolutionEstimator& u, const CylinderSet& sup_set, const CylinderSet& inf_set,
                             const LatticeSpec& lattice);

/// sup over (t0 - 3r^2, t0 - 2r^2) x B_r(z0), inf over (t0 - r^2, t0) x B_r(z0).
HarnackReport harnack_ratio(const SolutionEstimator& u, double t0, const Point& z0, double r,
                            const LatticeSpec& lattice);

/// Q^-_rho against Q^+_rho from cylinder_sets(s, z, rho, c, d) for each rho in (0, cR).
std::vector<HarnackReport> scale_invariant_scan(const SolutionEstimator& u, double s, const Point& z, double R,
                                                double c, double d, const std::vector<double>& rhos,
                                                const LatticeSpec& lattice);

/// Largest finite ratio of a scan (+inf if any is unbounded).
double max_ratio(const std::vector<HarnackReport>& reports);

/// Columns: rho (cylinder radius), ratio, sup, inf, unbounded.
void write_scan_csv(std::ostream& os, const std::vector<HarnackReport>& reports);

struct ChainGeometry {
  std::size_t k = 0;
  double r = 0.0;
  double alpha_k = 0.0;  // (1 - 4^{-k}) r^2
  double beta_k = 0.0;   // (2/3)(1 - 4^{-k}) r^2
  double gamma_k = 0.0;  // (1 - 2^{-k}) r
};

ChainGeometry chain_geometry(double r, std::size_t k);
/// Smallest k with gamma_k >= rho and alpha_k >= rho^2 (0 < rho < r).
std::size_t chain_count(double rho, double r);
/// log2(r / (r - rho)) + 1, an upper bound for chain_count.
double chain_count_bound(double rho, double r);

}  // namespace kimura
