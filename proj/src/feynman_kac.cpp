#include "kimura/feynman_kac.hpp"

#include "kimura/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace kimura {

using nlohmann::json;

namespace {

constexpr double kMaxLogWeight = 700.0;

void stamp(Estimate& e, const PathBundle& b) {
  e.seed = b.config.seed;
  json j{{"sim", b.config.to_json()}, {"domain", b.domain.to_json()}};
  j["start"] = {{"x", std::vector<double>(b.start.x.data(), b.start.x.data() + b.start.x.size())},
                {"y", std::vector<double>(b.start.y.data(), b.start.y.data() + b.start.y.size())}};
  e.config_hash = config_fingerprint(j);
}

double path_weight(const PathBundle& b, std::size_t p, std::size_t r) {
  if (!b.weighted()) return 1.0;
  const double lw = b.weight_log(p, r);
  if (std::abs(lw) > kMaxLogWeight)
    fail(ErrorKind::kWeightBlowup, "path " + std::to_string(p) + " has log weight " + std::to_string(lw) +
                                       " at t = " + std::to_string(b.times[r]));
  return std::exp(lw);
}

// Per-path stopped record for S = s ^ tau.
struct StopInfo {
  bool exited;
  double stop;
};

StopInfo stop_info(const PathBundle& b, std::size_t p, double s) {
  if (b.exited[p] && b.tau[p] <= s + 1e-12 * std::max(1.0, s)) return {true, b.tau[p]};
  return {false, s};
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_fingerprint(const json& j) { return fnv1a_hex(j.dump()); }

json Estimate::to_json() const {
  return json{{"value", value},           {"stderr", std_error}, {"n_paths", n_paths},
              {"n_effective", n_effective}, {"seed", seed},        {"config_hash", config_hash},
              {"untrusted", untrusted}};
}

Estimate summarize(const std::vector<double>& contributions, const std::vector<double>* weights) {
  Estimate e;
  const std::size_t n = contributions.size();
  e.n_paths = n;
  if (n == 0) {
    e.untrusted = true;
    return e;
  }
  double sum = 0.0;
  for (double c : contributions) sum += c;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double c : contributions) ss += (c - mean) * (c - mean);
  e.value = mean;
  e.std_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  if (weights) {
    double sw = 0.0;
    double sw2 = 0.0;
    for (double w : *weights) {
      sw += w;
      sw2 += w * w;
    }
    e.n_effective = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
  } else {
    e.n_effective = static_cast<double>(n);
  }
  e.untrusted = e.n_effective < 100.0;
  if (!std::isfinite(e.value)) fail(ErrorKind::kNumericFailure, "non-finite estimate");
  return e;
}

// ---------------------------------------------------------------------------

Estimate estimate_semigroup(const PathBundle& bundle, const PointFunction& f, double t) {
  const std::size_t r = bundle.record_index(t);
  const std::size_t P = bundle.n_paths();
  std::vector<double> c(P, 0.0);
  std::vector<double> w(P, 1.0);
  for (std::size_t p = 0; p < P; ++p) {
    w[p] = path_weight(bundle, p, r);
    if (bundle.alive(p, r)) c[p] = w[p] * f(bundle.state(p, r));
  }
  Estimate e = summarize(c, bundle.weighted() ? &w : nullptr);
  stamp(e, bundle);
  return e;
}

Estimate estimate_semigroup(const SdeModel& model, const PointFunction& f, double t, const Point& z0,
                            const DomainSpec& domain, PathConfig config) {
  if (!(t > 0.0)) fail(ErrorKind::kInvalidArgument, "t must be positive");
  config.horizon = t;
  config.record_stride = config.n_steps();
  const PathBundle b = simulate_bundle(model, z0, domain, config);
  return estimate_semigroup(b, f, b.times.back());
}

Estimate estimate_dirichlet(const PathBundle& bundle, const BoundaryData& gdata, double t, double t1,
                            std::optional<double> t_cut) {
  const double s = t - t1;
  if (!(s >= 0.0)) fail(ErrorKind::kInvalidArgument, "t must not precede t1");
  if (!gdata.g) fail(ErrorKind::kInvalidArgument, "boundary data has no function");
  const std::size_t r = bundle.record_index(s);
  const std::size_t P = bundle.n_paths();
  std::vector<double> c(P, 0.0);
  std::vector<double> w(P, 1.0);
  for (std::size_t p = 0; p < P; ++p) {
    const StopInfo st = stop_info(bundle, p, s);
    if (t_cut && !(st.stop < *t_cut - t1)) continue;
    w[p] = path_weight(bundle, p, r);
    const double v = gdata.g(t - st.stop, bundle.state(p, r));
    if (!std::isfinite(v))
      fail(ErrorKind::kBoundaryDataGap, "boundary data undefined at a sampled point (path " + std::to_string(p) +
                                            ", exited = " + std::to_string(st.exited) + ")");
    c[p] = w[p] * v;
  }
  Estimate e = summarize(c, bundle.weighted() ? &w : nullptr);
  stamp(e, bundle);
  return e;
}

Estimate estimate_dirichlet(const SdeModel& model, const BoundaryData& gdata, double t, const Point& z0, double t1,
                            const DomainSpec& domain, PathConfig config, std::optional<double> t_cut) {
  const double s = t - t1;
  if (!(s > 0.0)) {
    if (s == 0.0) {
      Estimate e;
      e.value = gdata.g(t, z0);
      e.n_paths = config.n_paths;
      e.n_effective = static_cast<double>(config.n_paths);
      e.seed = config.seed;
      return e;
    }
    fail(ErrorKind::kInvalidArgument, "t must not precede t1");
  }
  config.horizon = s;
  config.record_stride = config.n_steps();
  const PathBundle b = simulate_bundle(model, z0, domain, config);
  return estimate_dirichlet(b, gdata, t1 + b.times.back(), t1, t_cut);
}

Estimate estimate_inhomogeneous(const SdeModel& model, const PointFunction& f,
                                const std::function<double(double, const Point&)>& gsrc, double t, double t1,
                                const Point& z0, const DomainSpec& domain, PathConfig config) {
  if (!(t > 0.0)) fail(ErrorKind::kInvalidArgument, "t must be positive");
  config.horizon = t;
  config.record_stride = config.n_steps();
  const double horizon = config.step() * static_cast<double>(config.n_steps());
  std::vector<PathIntegrand> integrands{[&](double r, const Point& z) { return gsrc(t1 + horizon - r, z); }};
  const PathBundle b = simulate_bundle(model, z0, domain, config, nullptr, integrands);
  const std::size_t r = b.n_records() - 1;
  std::vector<double> c(b.n_paths(), 0.0);
  for (std::size_t p = 0; p < b.n_paths(); ++p) {
    double v = b.integral(p, 0, r);
    if (b.alive(p, r)) v += f(b.state(p, r));
    c[p] = v;
  }
  Estimate e = summarize(c);
  stamp(e, b);
  return e;
}

Estimate estimate_probabilistic_solution(const GirsanovField& theta, const BoundaryData& u_boundary, double t,
                                         double t1, const Point& z0, const DomainSpec& subdomain, PathConfig config) {
  const double s = t - t1;
  if (!(s > 0.0)) fail(ErrorKind::kInvalidArgument, "t must exceed t1");
  config.horizon = s;
  config.record_stride = config.n_steps();
  const PathBundle b = simulate_bundle(theta.singular(), z0, subdomain, config, theta.trivially_zero() ? nullptr : &theta);
  return estimate_dirichlet(b, u_boundary, t1 + b.times.back(), t1);
}

GirsanovComparison girsanov_compare(const PathBundle& weighted_singular, const PathBundle& standard,
                                    const PointFunction& f, double t) {
  GirsanovComparison c;
  c.weighted = estimate_semigroup(weighted_singular, f, t);
  c.standard = estimate_semigroup(standard, f, t);
  c.difference = c.weighted.value - c.standard.value;
  c.combined_stderr = std::hypot(c.weighted.std_error, c.standard.std_error);
  return c;
}

json ExpMomentReport::to_json() const {
  json j = estimate.to_json();
  j["heavy_tail_ratio"] = heavy_tail_ratio;
  j["overflow"] = overflow;
  return j;
}

ExpMomentReport exp_moment_diagnostic(const GirsanovField& theta, const Point& z0, double T, PathConfig config) {
  if (!(T > 0.0)) fail(ErrorKind::kInvalidArgument, "T must be positive");
  ExpMomentReport rep;
  config.horizon = T;
  config.record_stride = config.n_steps();
  if (theta.trivially_zero()) {
    rep.estimate.value = 1.0;
    rep.estimate.n_paths = config.n_paths;
    rep.estimate.n_effective = static_cast<double>(config.n_paths);
    rep.estimate.seed = config.seed;
    rep.heavy_tail_ratio = 1.0;
    return rep;
  }
  const double eps = config.log_clamp_eps;
  std::vector<PathIntegrand> integrands{[&theta, eps](double, const Point& z) {
    thread_local Eigen::VectorXd th;
    theta.theta_clamped(z, eps, th);
    return th.squaredNorm();
  }};
  const StateSpaceDims dims = theta.standard().dims();
  Box box;
  for (std::size_t k = 0; k < dims.total(); ++k) box.axes.push_back(k < dims.n ? Interval{0.0, 1.0} : Interval{-1.0, 1.0});
  const DomainSpec full = DomainSpec::full(dims, box);
  const PathBundle b = simulate_bundle(theta.standard(), z0, full, config, nullptr, integrands);
  const std::size_t r = b.n_records() - 1;
  std::vector<double> c(b.n_paths());
  double mx = 0.0;
  for (std::size_t p = 0; p < b.n_paths(); ++p) {
    const double ex = 9.0 * b.integral(p, 0, r);
    if (ex > std::log(std::numeric_limits<double>::max())) rep.overflow = true;
    c[p] = std::exp(std::min(ex, 700.0));
    mx = std::max(mx, c[p]);
  }
  if (rep.overflow) {
    rep.estimate.value = std::numeric_limits<double>::infinity();
    rep.estimate.n_paths = b.n_paths();
    rep.estimate.untrusted = true;
    rep.heavy_tail_ratio = std::numeric_limits<double>::infinity();
    stamp(rep.estimate, b);
    return rep;
  }
  rep.estimate = summarize(c);
  stamp(rep.estimate, b);
  rep.heavy_tail_ratio = rep.estimate.value > 0.0 ? mx / rep.estimate.value : 0.0;
  return rep;
}

std::vector<Estimate> martingale_residual(const SdeCoefficients& model, const SmoothFunction& phi, const Point& z0,
                                          const DomainSpec& domain, const std::vector<double>& times,
                                          PathConfig config) {
  if (times.empty()) return {};
  const StateSpaceDims dims = model.dims();
  if (domain.shape() != DomainSpec::Shape::kFull) {
    if (!phi.support) fail(ErrorKind::kInvalidTestFunction, "test function has no compact support");
    const Box& s = *phi.support;
    if (s.size() != dims.total()) fail(ErrorKind::kDimensionMismatch, "support box has the wrong dimension");
    // corners of the support must lie in Omega-underbar (all shapes are convex in flat coordinates)
    const std::size_t d = dims.total();
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      Point c(Eigen::VectorXd::Zero(dims.n), Eigen::VectorXd::Zero(dims.m));
      for (std::size_t k = 0; k < d; ++k) c.coord(k) = (mask >> k & 1U) ? s.axes[k].hi : s.axes[k].lo;
      if (!domain.contains(c)) fail(ErrorKind::kInvalidTestFunction, "test function support leaves the domain");
    }
  }
  const double t_end = *std::max_element(times.begin(), times.end());
  if (!(t_end > 0.0)) fail(ErrorKind::kInvalidArgument, "times must be positive");
  config.horizon = t_end;

  const SingularOperatorSpec& op = model.spec();
  const double eps = config.log_clamp_eps;
  auto Lphi = [&op, &phi, eps](double, const Point& z) {
    if (phi.support && !phi.support->contains_closed(z)) return 0.0;
    Point zc = z;
    for (Eigen::Index i = 0; i < zc.x.size(); ++i) zc.x[i] = std::max(zc.x[i], eps);
    return apply_singular(op, phi, zc);
  };
  std::vector<PathIntegrand> integrands{Lphi};
  const PathBundle b = simulate_bundle(model, z0, domain, config, nullptr, integrands);
  const double phi0 = phi(z0);
  std::vector<Estimate> out;
  out.reserve(times.size());
  std::vector<double> c(b.n_paths());
  for (double t : times) {
    const std::size_t r = b.record_index(t);
    for (std::size_t p = 0; p < b.n_paths(); ++p) c[p] = phi(b.state(p, r)) - phi0 - b.integral(p, 0, r);
    Estimate e = summarize(c);
    stamp(e, b);
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------

DirichletSolutionEstimator::DirichletSolutionEstimator(const SdeModel& model, BoundaryData gdata, double t1,
                                                       double t_max, DomainSpec domain, PathConfig config)
    : model_(&model), gdata_(std::move(gdata)), t1_(t1), t_max_(t_max), domain_(std::move(domain)), config_(config) {
  if (!(t_max > t1)) fail(ErrorKind::kInvalidArgument, "t_max must exceed t1");
  if (!gdata_.g) fail(ErrorKind::kInvalidArgument, "boundary data has no function");
  config_.horizon = t_max - t1;
  config_.validate();
  record_dt_ = config_.step() * static_cast<double>(config_.record_stride);
}

const std::vector<Estimate>& DirichletSolutionEstimator::per_record(const Point& z) {
  const Eigen::VectorXd flat = z.flat();
  std::vector<double> key(flat.data(), flat.data() + flat.size());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  std::vector<Estimate> est;
  if (!domain_.contains(z)) {
    // outside Omega-underbar the solution is the boundary data itself
    cache_.emplace(key, est);
    return cache_.at(key);
  }
  const PathBundle b = simulate_bundle(*model_, z, domain_, config_);
  est.reserve(b.n_records());
  for (std::size_t r = 0; r < b.n_records(); ++r) est.push_back(estimate_dirichlet(b, gdata_, t1_ + b.times[r], t1_));
  return cache_.emplace(std::move(key), std::move(est)).first->second;
}

Estimate DirichletSolutionEstimator::operator()(double t, const Point& z) {
  const double s = t - t1_;
  if (s < -1e-12 || t > t_max_ + 1e-9) fail(ErrorKind::kInvalidArgument, "t outside [t1, t_max]");
  const std::vector<Estimate>& est = per_record(z);
  if (est.empty()) {
    Estimate e;
    e.value = gdata_.g(t, z);
    if (!std::isfinite(e.value)) fail(ErrorKind::kBoundaryDataGap, "boundary data undefined outside the domain");
    e.seed = config_.seed;
    e.n_paths = config_.n_paths;
    e.n_effective = static_cast<double>(config_.n_paths);
    return e;
  }
  const auto r = static_cast<std::size_t>(std::llround(std::max(s, 0.0) / record_dt_));
  return est[std::min(r, est.size() - 1)];
}

}  // namespace kimura
