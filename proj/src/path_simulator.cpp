#include "kimura/path_simulator.hpp"

#include "kimura/error.hpp"
#include "kimura/parallel.hpp"
#include "kimura/rng.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <ostream>
#include <random>

namespace kimura {

using nlohmann::json;

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kEulerProjected: return "euler-projected";
    case Scheme::kEulerImplicitSqrt: return "euler-implicit-sqrt";
    case Scheme::kExact1dGamma: return "exact-1d-gamma";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler-projected") return Scheme::kEulerProjected;
  if (s == "euler-implicit-sqrt") return Scheme::kEulerImplicitSqrt;
  if (s == "exact-1d-gamma") return Scheme::kExact1dGamma;
  fail(ErrorKind::kInvalidConfig, "unknown scheme '" + s + "'");
}

void PathConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::kInvalidConfig, "dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail(ErrorKind::kInvalidConfig, "horizon must be positive");
  if (!(log_clamp_eps > 0.0 && log_clamp_eps < 1.0)) fail(ErrorKind::kInvalidConfig, "log_clamp_eps must lie in (0, 1)");
  if (n_paths < 1) fail(ErrorKind::kInvalidConfig, "n_paths must be >= 1");
  if (record_stride < 1) fail(ErrorKind::kInvalidConfig, "record_stride must be >= 1");
  if (horizon / dt > 4.0e9) fail(ErrorKind::kInvalidConfig, "too many steps");
}

std::size_t PathConfig::n_steps() const {
  const double r = horizon / dt;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r))));
}

json PathConfig::to_json() const {
  return json{{"dt", dt},
              {"scheme", to_string(scheme)},
              {"log_clamp_eps", log_clamp_eps},
              {"seed", seed},
              {"n_paths", n_paths},
              {"horizon", horizon},
              {"record_stride", record_stride},
              {"store_increments", store_increments}};
}

PathConfig PathConfig::from_json(const json& j) {
  PathConfig c;
  try {
    c.dt = j.value("dt", c.dt);
    if (j.contains("scheme")) c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    c.log_clamp_eps = j.value("log_clamp_eps", c.log_clamp_eps);
    c.seed = j.value("seed", c.seed);
    c.n_paths = j.value("n_paths", c.n_paths);
    c.horizon = j.value("horizon", c.horizon);
    c.record_stride = j.value("record_stride", c.record_stride);
    c.store_increments = j.value("store_increments", c.store_increments);
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("sim config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

std::size_t PathBundle::record_index(double t) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  const auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end() || std::abs(*it - t) > tol)
    fail(ErrorKind::kInvalidArgument, "t = " + std::to_string(t) + " is not a recorded time of the bundle");
  return static_cast<std::size_t>(it - times.begin());
}

Point PathBundle::state(std::size_t path, std::size_t record) const {
  const double* p = &states[(path * n_records() + record) * dims.total()];
  return Point(Eigen::Map<const Eigen::VectorXd>(p, dims.n), Eigen::Map<const Eigen::VectorXd>(p + dims.n, dims.m));
}

Trajectory PathBundle::trajectory(std::size_t path) const {
  Trajectory tr;
  tr.times = times;
  for (std::size_t r = 0; r < n_records(); ++r) tr.states.push_back(state(path, r));
  tr.exited = exited[path] != 0;
  tr.tau = tau[path];
  if (weighted())
    tr.log_weight.assign(log_weight.begin() + path * n_records(), log_weight.begin() + (path + 1) * n_records());
  if (!increments.empty()) {
    const std::size_t d = dims.total();
    const std::size_t steps = config.n_steps();
    for (std::size_t k = 0; k < steps; ++k)
      tr.brownian_increments.push_back(Eigen::Map<const Eigen::VectorXd>(&increments[(path * steps + k) * d], d));
  }
  return tr;
}

void PathBundle::write_csv(std::ostream& os) const {
  os << "path,step,t";
  for (std::size_t i = 0; i < dims.n; ++i) os << ",x" << i;
  for (std::size_t l = 0; l < dims.m; ++l) os << ",y" << l;
  os << ",exited,log_weight\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t p = 0; p < n_paths(); ++p)
    for (std::size_t r = 0; r < n_records(); ++r) {
      os << p << ',' << record_steps[r] << ',';
      num(times[r]);
      for (std::size_t k = 0; k < dims.total(); ++k) {
        os << ',';
        num(coord(p, r, k));
      }
      os << ',' << (alive(p, r) ? 0 : 1) << ',';
      num(weight_log(p, r));
      os << '\n';
    }
}

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "binary bundle writer assumes a little-endian host");
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  os.write(raw, sizeof(T));
}

}  // namespace

void PathBundle::write_binary(std::ostream& os) const {
  os.write("KIMB", 4);
  put_le<std::uint32_t>(os, 1);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims.n));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims.m));
  put_le<std::uint64_t>(os, n_paths());
  put_le<std::uint64_t>(os, n_records());
  for (double t : times) put_le<double>(os, t);
  const std::size_t per_path = n_records() * dims.total();
  for (std::size_t p = 0; p < n_paths(); ++p) {
    put_le<double>(os, exited[p] ? 1.0 : 0.0);
    put_le<double>(os, tau[p]);
    for (std::size_t k = 0; k < per_path; ++k) put_le<double>(os, states[p * per_path + k]);
    for (std::size_t r = 0; r < n_records(); ++r) put_le<double>(os, weight_log(p, r));
  }
}

// ---------------------------------------------------------------------------

namespace {

struct StepScratch {
  Eigen::VectorXd drift;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd noise;
};

// In-place Euler-type step; xi holds n+m standard normals.
void advance(const SdeModel& model, Point& z, double dt, const double* xi, const PathConfig& cfg, StepScratch& s) {
  model.evaluate(z, cfg.log_clamp_eps, s.drift, s.sigma);
  const std::size_t n = static_cast<std::size_t>(z.x.size());
  const std::size_t d = n + static_cast<std::size_t>(z.y.size());
  const double sdt = std::sqrt(dt);
  s.noise.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) v += s.sigma(k, j) * xi[j];
    s.noise[k] = v * sdt;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::max(z.x[i], 0.0);
    if (cfg.scheme == Scheme::kEulerImplicitSqrt) {
      double Dii = 0.0;
      for (std::size_t j = 0; j < d; ++j) Dii += s.sigma(i, j) * s.sigma(i, j);
      // noise part of sqrt(x) reflected at 0, then the implicit drift solve
      const double a = std::abs(std::sqrt(x) + 0.5 * s.noise[i]);
      const double disc = std::max(a * a + 2.0 * (s.drift[i] - 0.25 * Dii) * dt, 0.0);
      const double u = std::max(0.5 * (a + std::sqrt(disc)), 0.0);
      z.x[i] = u * u;
    } else {
      z.x[i] = std::max(x + s.drift[i] * dt + std::sqrt(x) * s.noise[i], 0.0);
    }
  }
  for (std::size_t l = 0; l < d - n; ++l) z.y[l] += s.drift[n + l] * dt + s.noise[n + l];
}

void check_finite(const Point& z, std::size_t path, std::size_t step) {
  if (!z.x.allFinite() || !z.y.allFinite())
    fail(ErrorKind::kNumericFailure,
         "non-finite state on path " + std::to_string(path) + " at step " + std::to_string(step));
}

Point step_checked(const SdeModel& model, const Point& z, double dt, const Eigen::VectorXd& xi, const PathConfig& config) {
  if (config.scheme == Scheme::kExact1dGamma)
    fail(ErrorKind::kInvalidConfig, "the exact scheme needs a random stream; use simulate_bundle");
  if (static_cast<std::size_t>(xi.size()) != model.dims().total()) fail(ErrorKind::kDimensionMismatch, "xi has the wrong length");
  check_point(model.dims(), z);
  StepScratch s;
  Point out = z;
  advance(model, out, dt, xi.data(), config, s);
  check_finite(out, 0, 0);
  return out;
}

}  // namespace

Point step_model(const SdeModel& model, const Point& z, double dt, const Eigen::VectorXd& xi, const PathConfig& config) {
  return step_checked(model, z, dt, xi, config);
}
Point step_singular(const SdeCoefficients& coeffs, const Point& z, double dt, const Eigen::VectorXd& xi,
                    const PathConfig& config) {
  return step_checked(coeffs, z, dt, xi, config);
}
Point step_standard(const StandardSdeCoefficients& coeffs, const Point& z, double dt, const Eigen::VectorXd& xi,
                    const PathConfig& config) {
  return step_checked(coeffs, z, dt, xi, config);
}

PathBundle simulate_bundle(const SdeModel& model, const Point& z0, const DomainSpec& domain, const PathConfig& config,
                           const GirsanovField* theta, const std::vector<PathIntegrand>& integrands) {
  config.validate();
  const StateSpaceDims dims = model.dims();
  if (!(domain.dims() == dims)) fail(ErrorKind::kDimensionMismatch, "domain and model dimensions differ");
  check_point(dims, z0);
  if (!domain.contains(z0)) fail(ErrorKind::kInvalidStart, "start point lies outside the domain");

  std::optional<std::pair<double, double>> exact;
  if (config.scheme == Scheme::kExact1dGamma) {
    exact = model.constant_1d();
    if (!exact) fail(ErrorKind::kInvalidConfig, "exact-1d-gamma needs a 1D constant-coefficient model");
    if (theta) fail(ErrorKind::kInvalidConfig, "exact-1d-gamma does not produce Brownian increments for a Girsanov weight");
    if (config.store_increments) fail(ErrorKind::kInvalidConfig, "exact-1d-gamma has no Brownian increments to store");
    if (!(exact->first > 0.0)) fail(ErrorKind::kInvalidConfig, "exact-1d-gamma needs a positive diffusion coefficient");
  }

  const std::size_t steps = config.n_steps();
  const double dt = config.step();
  const std::size_t d = dims.total();

  PathBundle b;
  b.config = config;
  b.domain = domain;
  b.dims = dims;
  b.start = z0;
  for (std::size_t k = 0; k <= steps; k += config.record_stride) b.record_steps.push_back(k);
  if (b.record_steps.back() != steps) b.record_steps.push_back(steps);
  for (std::size_t k : b.record_steps) b.times.push_back(static_cast<double>(k) * dt);
  const std::size_t R = b.record_steps.size();
  const std::size_t P = config.n_paths;
  const double cells = static_cast<double>(P) * static_cast<double>(R) *
                       (static_cast<double>(d) + (theta ? 1.0 : 0.0) + static_cast<double>(integrands.size()));
  if (cells > 2.5e8) fail(ErrorKind::kInvalidConfig, "bundle too large; raise record_stride or lower n_paths");
  if (config.store_increments && static_cast<double>(P) * static_cast<double>(steps) * static_cast<double>(d) > 2.5e8)
    fail(ErrorKind::kInvalidConfig, "stored increments too large");

  b.states.assign(P * R * d, 0.0);
  b.exited.assign(P, 0);
  b.tau.assign(P, config.horizon);
  if (theta) b.log_weight.assign(P * R, 0.0);
  b.n_integrands = integrands.size();
  b.integrals.assign(P * integrands.size() * R, 0.0);
  if (config.store_increments) b.increments.assign(P * steps * d, 0.0);

  const std::size_t ni = integrands.size();
  const double sdt = std::sqrt(dt);

  parallel_for(P, config.threads, [&](std::size_t begin, std::size_t end) {
    StepScratch scratch;
    Eigen::VectorXd xi(d);
    Eigen::VectorXd th;
    std::vector<double> acc(ni), prev(ni);
    for (std::size_t p = begin; p < end; ++p) {
      const PathStream stream(config.seed, p);
      Point z = z0;
      double logw = 0.0;
      bool out = false;
      for (std::size_t q = 0; q < ni; ++q) {
        acc[q] = 0.0;
        prev[q] = integrands[q](0.0, z);
      }
      auto store = [&](std::size_t r) {
        double* dst = &b.states[(p * R + r) * d];
        for (std::size_t k = 0; k < d; ++k) dst[k] = z.coord(k);
        if (theta) b.log_weight[p * R + r] = logw;
        for (std::size_t q = 0; q < ni; ++q) b.integrals[(p * ni + q) * R + r] = acc[q];
      };
      store(0);
      std::size_t next_record = 1;
      for (std::size_t k = 0; k < steps && !out; ++k) {
        const double t_next = static_cast<double>(k + 1) * dt;
        if (exact) {
          const double A = exact->first;
          const double bt = exact->second / A;
          const double xt = std::max(z.x[0], 0.0) / A;
          StepEngine eng(stream, static_cast<std::uint32_t>(k));
          long long N = 0;
          if (xt > 0.0) N = std::poisson_distribution<long long>(xt / dt)(eng);
          const double shape = bt + static_cast<double>(N);
          z.x[0] = shape > 0.0 ? A * std::gamma_distribution<double>(shape, dt)(eng) : 0.0;
        } else {
          stream.normals(static_cast<std::uint32_t>(k), xi.data(), d);
          if (theta) {
            theta->theta_clamped(z, config.log_clamp_eps, th);
            logw += -th.dot(xi) * sdt - 0.5 * th.squaredNorm() * dt;
          }
          if (config.store_increments)
            for (std::size_t c = 0; c < d; ++c) b.increments[(p * steps + k) * d + c] = xi[c] * sdt;
          advance(model, z, dt, xi.data(), config, scratch);
        }
        check_finite(z, p, k + 1);
        if (theta && !std::isfinite(logw))
          fail(ErrorKind::kNumericFailure, "non-finite Girsanov weight on path " + std::to_string(p));
        for (std::size_t q = 0; q < ni; ++q) {
          const double v = integrands[q](t_next, z);
          acc[q] += 0.5 * (prev[q] + v) * dt;
          prev[q] = v;
        }
        if (!domain.contains(z)) {
          out = true;
          b.exited[p] = 1;
          b.tau[p] = t_next;
        }
        while (next_record < R && b.record_steps[next_record] <= k + 1) {
          if (b.record_steps[next_record] == k + 1 || out) store(next_record);
          ++next_record;
        }
      }
      // frozen after exit
      for (; next_record < R; ++next_record) store(next_record);
    }
  });
  return b;
}

}  // namespace kimura
