#pragma once

// Time-discrete simulation of the standard and singular Kimura SDEs with
// grid-based exit detection, optional Girsanov weights and running integrals.

#include "kimura/sde_kernel.hpp"
#include "kimura/state_geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace kimura {

enum class Scheme { kEulerProjected, kEulerImplicitSqrt, kExact1dGamma };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct PathConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::kEulerProjected;
  double log_clamp_eps = 1e-12;
  std::uint64_t seed = 0;
  std::size_t n_paths = 1000;
  double horizon = 1.0;
  /// Keep every record_stride-th step (the final step is always kept).
  std::size_t record_stride = 1;
  std::size_t threads = 0;  // 0: all hardware threads
  bool store_increments = false;

  void validate() const;
  /// ceil(horizon / dt); the effective step is horizon / n_steps.
  std::size_t n_steps() const;
  double step() const { return horizon / static_cast<double>(n_steps()); }

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static PathConfig from_json(const nlohmann::json& j);
};

/// f(t, z) integrated along each path up to t ^ tau (trapezoid rule on the grid).
using PathIntegrand = std::function<double(double, const Point&)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> states;
  bool exited = false;
  double tau = 0.0;
  std::vector<Eigen::VectorXd> brownian_increments;  // per step, when stored
  std::vector<double> log_weight;                    // per record, when weighted
};

/// Flat storage of a simulated bundle. State arrays are indexed
/// [path][record][coordinate].
class PathBundle {
 public:
  PathConfig config;
  DomainSpec domain;
  StateSpaceDims dims;
  Point start;
  std::vector<double> times;               // record times
  std::vector<std::size_t> record_steps;   // step index of each record
  std::vector<double> states;
  std::vector<std::uint8_t> exited;
  std::vector<double> tau;                 // horizon when not exited
  std::vector<double> log_weight;          // [path][record]; empty without theta
  std::vector<double> integrals;           // [path][integrand][record]
  std::size_t n_integrands = 0;
  std::vector<double> increments;          // [path][step][coordinate] when stored

  std::size_t n_paths() const { return exited.size(); }
  std::size_t n_records() const { return times.size(); }
  bool weighted() const { return !log_weight.empty(); }
  /// Stream id of a path (the counter's path field).
  std::uint64_t stream_id(std::size_t path) const { return path; }

  /// Index of record time t (within 1e-9 relative); kInvalidArgument otherwise.
  std::size_t record_index(double t) const;
  Point state(std::size_t path, std::size_t record) const;
  double coord(std::size_t path, std::size_t record, std::size_t k) const {
    return states[(path * n_records() + record) * dims.total() + k];
  }
  /// t < tau at record time t.
  bool alive(std::size_t path, std::size_t record) const { return !exited[path] || times[record] < tau[path]; }
  double weight_log(std::size_t path, std::size_t record) const {
    return weighted() ? log_weight[path * n_records() + record] : 0.0;
  }
  double integral(std::size_t path, std::size_t integrand, std::size_t record) const {
    return integrals[(path * n_integrands + integrand) * n_records() + record];
  }
  Trajectory trajectory(std::size_t path) const;

  /// Columns: path, step, t, x..., y..., exited, log_weight.
  void write_csv(std::ostream& os) const;
  /// "KIMB", u32 version, u32 n, u32 m, u64 n_paths, u64 n_records, then
  /// little-endian f64: times, then per path (exited, tau, states, log weights).
  void write_binary(std::ostream& os) const;
};

/// One Euler step of the singular SDE (scheme from config; no exact scheme here).
Point step_singular(const SdeCoefficients& coeffs, const Point& z, double dt, const Eigen::VectorXd& xi,
                    const PathConfig& config);
Point step_standard(const StandardSdeCoefficients& coeffs, const Point& z, double dt, const Eigen::VectorXd& xi,
                    const PathConfig& config);
Point step_model(const SdeModel& model, const Point& z, double dt, const Eigen::VectorXd& xi, const PathConfig& config);

/// n_paths trajectories from z0. Exit is the first grid time with the state
/// outside Omega-underbar; states, weights and integrals freeze afterwards.
/// With theta, log_weight accumulates -theta . dW - |theta|^2 dt / 2.
PathBundle simulate_bundle(const SdeModel& model, const Point& z0, const DomainSpec& domain, const PathConfig& config,
                           const GirsanovField* theta = nullptr, const std::vector<PathIntegrand>& integrands = {});

}  // namespace kimura
