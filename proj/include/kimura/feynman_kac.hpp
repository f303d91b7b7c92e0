#pragma once

// Monte Carlo estimators for the stochastic representations: semigroup,
// Dirichlet problem, Duhamel source terms, Girsanov-weighted solutions,
// exponential-moment diagnostics and martingale-problem residuals.

#include "kimura/path_simulator.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace kimura {

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
/// Fingerprint of a JSON document (hash of its compact dump).
std::string config_fingerprint(const nlohmann::json& j);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double n_effective = 0.0;  // (sum w)^2 / sum w^2; n_paths when unweighted
  std::uint64_t seed = 0;
  std::string config_hash;
  bool untrusted = false;  // n_effective < 100

  nlohmann::json to_json() const;
};

/// Mean and standard error of per-path contributions (already multiplied by
/// their weights). `weights` only feeds n_effective. Sums run in path order.
Estimate summarize(const std::vector<double>& contributions, const std::vector<double>* weights = nullptr);

using PointFunction = std::function<double(const Point&)>;

/// g on the closure of the parabolic boundary ([t1,t2] x d1Omega) u ({t1} x Omega).
/// Returning NaN at a sampled point signals a gap in the data.
struct BoundaryData {
  std::function<double(double, const Point&)> g;
  bool continuous = true;
};

/// E[w f(Z(t)) 1_{t < tau}] on an existing bundle (t must be a record time).
Estimate estimate_semigroup(const PathBundle& bundle, const PointFunction& f, double t);
/// Simulates z0 up to t (config.horizon is replaced by t).
Estimate estimate_semigroup(const SdeModel& model, const PointFunction& f, double t, const Point& z0,
                            const DomainSpec& domain, PathConfig config);

/// E[g(t - S, Z(S))], S = (t - t1) ^ tau; with t_cut, multiplied by 1_{S < t_cut - t1}.
/// Record time t - t1 must exist on the bundle.
Estimate estimate_dirichlet(const PathBundle& bundle, const BoundaryData& gdata, double t, double t1,
                            std::optional<double> t_cut = std::nullopt);
Estimate estimate_dirichlet(const SdeModel& model, const BoundaryData& gdata, double t, const Point& z0, double t1,
                            const DomainSpec& domain, PathConfig config, std::optional<double> t_cut = std::nullopt);

/// T_t f + int_0^t T_{t-s} gsrc(s + t1, .) ds via the running integral of
/// gsrc(t1 + t - r, Z(r)) over r < t ^ tau.
Estimate estimate_inhomogeneous(const SdeModel& model, const PointFunction& f,
                                const std::function<double(double, const Point&)>& gsrc, double t, double t1,
                                const Point& z0, const DomainSpec& domain, PathConfig config);

/// E[M(S) u(t - S, Z(S))] with Z the singular process on Omega', S = (t - t1) ^ tau,
/// M the exponential Girsanov weight. kWeightBlowup when |log M| > 700 on a path.
Estimate estimate_probabilistic_solution(const GirsanovField& theta, const BoundaryData& u_boundary, double t,
                                         double t1, const Point& z0, const DomainSpec& subdomain, PathConfig config);

/// E[M(t) f(Z(t))] under the singular law and E[f(Z-hat(t))] under the
/// standard law, on record times of the two bundles.
struct GirsanovComparison {
  Estimate weighted;
  Estimate standard;
  double difference = 0.0;
  double combined_stderr = 0.0;
};
GirsanovComparison girsanov_compare(const PathBundle& weighted_singular, const PathBundle& standard,
                                    const PointFunction& f, double t);

struct ExpMomentReport {
  Estimate estimate;
  double heavy_tail_ratio = 0.0;  // max sample / mean
  bool overflow = false;          // some exponent exceeded the double range
  nlohmann::json to_json() const;
};

/// E[exp(9 int_0^T |theta(Z-hat)|^2 dt)] along the standard process.
ExpMomentReport exp_moment_diagnostic(const GirsanovField& theta, const Point& z0, double T, PathConfig config);

/// For each t in `times`, E[phi(Z(t^tau)) - phi(z0) - int_0^{t^tau} L phi(Z) dr].
/// phi must carry a support box inside Omega-underbar unless Omega is the full
/// space; kInvalidTestFunction otherwise.
std::vector<Estimate> martingale_residual(const SdeCoefficients& model, const SmoothFunction& phi, const Point& z0,
                                          const DomainSpec& domain, const std::vector<double>& times,
                                          PathConfig config);

/// u(t, z) of the Dirichlet problem on Omega with data g and initial time t1.
/// One bundle per spatial point z (horizon t_max - t1, common seed) serves every t;
/// t - t1 is snapped to the nearest record. Results are memoized per z.
class DirichletSolutionEstimator {
 public:
  DirichletSolutionEstimator(const SdeModel& model, BoundaryData gdata, double t1, double t_max, DomainSpec domain,
                             PathConfig config);

  Estimate operator()(double t, const Point& z);
  std::size_t bundles_simulated() const { return cache_.size(); }
  double t1() const { return t1_; }
  double t_max() const { return t_max_; }

 private:
  const std::vector<Estimate>& per_record(const Point& z);

  const SdeModel* model_;
  BoundaryData gdata_;
  double t1_;
  double t_max_;
  DomainSpec domain_;
  PathConfig config_;
  double record_dt_ = 0.0;
  std::map<std::vector<double>, std::vector<Estimate>> cache_;
};

}  // namespace kimura
