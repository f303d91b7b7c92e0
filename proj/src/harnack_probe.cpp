#include "kimura/harnack_probe.hpp"

#include "kimura/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace kimura {

using nlohmann::json;

json LatticeSpec::to_json() const {
  return json{{"time_divisions", time_divisions}, {"space_divisions", space_divisions}};
}

namespace {

json cylinder_json(const CylinderSet& c) {
  return json{{"t_lo", c.t_lo},
              {"t_hi", c.t_hi},
              {"radius", c.radius},
              {"center", json{{"x", std::vector<double>(c.center.x.data(), c.center.x.data() + c.center.x.size())},
                              {"y", std::vector<double>(c.center.y.data(), c.center.y.data() + c.center.y.size())}}}};
}

}  // namespace

json HarnackReport::to_json() const {
  return json{{"sup_set", cylinder_json(sup_set)},
              {"inf_set", cylinder_json(inf_set)},
              {"sup_value", sup_value},
              {"sup_stderr", sup_stderr},
              {"inf_value", inf_value},
              {"inf_stderr", inf_stderr},
              {"ratio", unbounded ? json(nullptr) : json(ratio)},
              {"ratio_stderr", unbounded ? json(nullptr) : json(ratio_stderr)},
              {"unbounded", unbounded},
              {"lattice", lattice.to_json()},
              {"points_evaluated", points_evaluated},
              {"solution_fingerprint", solution_fingerprint}};
}

std::vector<std::pair<double, Point>> cylinder_lattice(const CylinderSet& set, const LatticeSpec& lattice) {
  if (lattice.time_divisions < 2 || lattice.space_divisions < 2)
    fail(ErrorKind::kInvalidArgument, "lattice needs at least two divisions per axis");
  if (!(set.t_hi > set.t_lo) || !(set.radius > 0.0)) fail(ErrorKind::kInvalidArgument, "empty cylinder");
  const StateSpaceDims dims = set.center.dims();
  const std::size_t d = dims.total();
  const std::size_t ns = lattice.space_divisions;
  // per-axis coordinates
  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 1; i < ns; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(ns);
      if (k < dims.n) {
        const Interval iv = degenerate_coordinate_ball(set.center.x[k], set.radius);
        const double a = std::sqrt(iv.lo);
        const double b = std::sqrt(iv.hi);
        const double u = a + f * (b - a);
        axes[k].push_back(u * u);
      } else {
        const double c = set.center.coord(k);
        axes[k].push_back(c - set.radius + 2.0 * set.radius * f);
      }
    }
  }
  std::vector<std::pair<double, Point>> out;
  for (std::size_t it = 1; it < lattice.time_divisions; ++it) {
    const double t =
        set.t_lo + (set.t_hi - set.t_lo) * static_cast<double>(it) / static_cast<double>(lattice.time_divisions);
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
      Point z = set.center;
      for (std::size_t k = 0; k < d; ++k) z.coord(k) = axes[k][idx[k]];
      out.emplace_back(t, z);
      std::size_t k = 0;
      while (k < d && ++idx[k] == axes[k].size()) idx[k++] = 0;
      if (k == d) break;
    }
    if (d == 0) break;
  }
  return out;
}

HarnackReport cylinder_ratio(const SolutionEstimator& u, const CylinderSet& sup_set, const CylinderSet& inf_set,
                             const LatticeSpec& lattice) {
  HarnackReport rep;
  rep.sup_set = sup_set;
  rep.inf_set = inf_set;
  rep.lattice = lattice;
  rep.sup_value = -std::numeric_limits<double>::infinity();
  rep.inf_value = std::numeric_limits<double>::infinity();
  std::string hashes;
  for (const auto& [t, z] : cylinder_lattice(sup_set, lattice)) {
    const Estimate e = u(t, z);
    ++rep.points_evaluated;
    if (e.value < -3.0 * e.std_error - 1e-12)
      fail(ErrorKind::kInvalidArgument, "solution is negative on the sup cylinder");
    if (e.value > rep.sup_value) {
      rep.sup_value = e.value;
      rep.sup_stderr = e.std_error;
    }
    if (hashes.empty()) hashes = e.config_hash;
  }
  for (const auto& [t, z] : cylinder_lattice(inf_set, lattice)) {
    const Estimate e = u(t, z);
    ++rep.points_evaluated;
    if (e.value < rep.inf_value) {
      rep.inf_value = e.value;
      rep.inf_stderr = e.std_error;
    }
  }
  rep.solution_fingerprint = fnv1a_hex(hashes);
  rep.unbounded = !(rep.inf_value > 3.0 * rep.inf_stderr) || !(rep.inf_value > 0.0);
  if (rep.unbounded) {
    rep.ratio = std::numeric_limits<double>::infinity();
    rep.ratio_stderr = std::numeric_limits<double>::infinity();
  } else {
    rep.ratio = rep.sup_value / rep.inf_value;
    const double rs = rep.sup_value != 0.0 ? rep.sup_stderr / rep.sup_value : 0.0;
    const double ri = rep.inf_stderr / rep.inf_value;
    rep.ratio_stderr = rep.ratio * std::hypot(rs, ri);
  }
  return rep;
}

HarnackReport harnack_ratio(const SolutionEstimator& u, double t0, const Point& z0, double r,
                            const LatticeSpec& lattice) {
  if (!(r > 0.0)) fail(ErrorKind::kInvalidArgument, "r must be positive");
  const double r2 = r * r;
  const CylinderSet sup_set{t0 - 3.0 * r2, t0 - 2.0 * r2, z0, r};
  const CylinderSet inf_set{t0 - r2, t0, z0, r};
  return cylinder_ratio(u, sup_set, inf_set, lattice);
}

std::vector<HarnackReport> scale_invariant_scan(const SolutionEstimator& u, double s, const Point& z, double R,
                                                double c, double d, const std::vector<double>& rhos,
                                                const LatticeSpec& lattice) {
  if (!(R > 0.0)) fail(ErrorKind::kInvalidArgument, "R must be positive");
  std::vector<HarnackReport> out;
  for (double r : rhos) {
    if (!(r > 0.0 && r < c * R)) fail(ErrorKind::kInvalidArgument, "rho must lie in (0, cR)");
    const HarnackCylinders cyl = cylinder_sets(s, z, r, c, d);
    out.push_back(cylinder_ratio(u, cyl.minus, cyl.plus, lattice));
  }
  return out;
}

double max_ratio(const std::vector<HarnackReport>& reports) {
  double m = 0.0;
  for (const auto& r : reports) m = std::max(m, r.ratio);
  return m;
}

void write_scan_csv(std::ostream& os, const std::vector<HarnackReport>& reports) {
  os << "rho,ratio,sup,inf,unbounded\n";
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", r.sup_set.radius, r.ratio, r.sup_value,
                  r.inf_value, r.unbounded ? 1 : 0);
    os << buf;
  }
}

// ---------------------------------------------------------------------------

ChainGeometry chain_geometry(double r, std::size_t k) {
  if (!(r > 0.0)) fail(ErrorKind::kInvalidArgument, "r must be positive");
  if (k < 1) fail(ErrorKind::kInvalidArgument, "k must be >= 1");
  ChainGeometry g;
  g.k = k;
  g.r = r;
  const double q4 = std::ldexp(1.0, -2 * static_cast<int>(std::min<std::size_t>(k, 600)));
  const double q2 = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(k, 1100)));
  g.alpha_k = (1.0 - q4) * r * r;
  g.beta_k = 2.0 / 3.0 * g.alpha_k;
  g.gamma_k = (1.0 - q2) * r;
  return g;
}

std::size_t chain_count(double rho, double r) {
  if (!(rho > 0.0 && rho < r)) fail(ErrorKind::kInvalidArgument, "need 0 < rho < r");
  for (std::size_t k = 1;; ++k) {
    const ChainGeometry g = chain_geometry(r, k);
    if (g.gamma_k >= rho && g.alpha_k >= rho * rho) return k;
    if (k > 2000) fail(ErrorKind::kNumericFailure, "chain count did not terminate");
  }
}

double chain_count_bound(double rho, double r) {
  if (!(rho > 0.0 && rho < r)) fail(ErrorKind::kInvalidArgument, "need 0 < rho < r");
  return std::log2(r / (r - rho)) + 1.0;
}

}  // namespace kimura
