#include "kimura/cli.hpp"

#include "kimura/density_lab.hpp"
#include "kimura/error.hpp"
#include "kimura/feynman_kac.hpp"
#include "kimura/harnack_probe.hpp"
#include "kimura/oracle_suite.hpp"
#include "kimura/path_simulator.hpp"
#include "kimura/sde_kernel.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

namespace kimura {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kCommands[] = {"validate", "simulate", "fk", "density", "harnack", "girsanov", "oracle-compare"};

void error_line(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::kNumericFailure:
    case ErrorKind::kWeightBlowup:
    case ErrorKind::kUnstableConfiguration:
    case ErrorKind::kSingularEvaluation:
    case ErrorKind::kBoundaryEvaluation:
      return static_cast<int>(ExitCode::kNumeric);
    default:
      return static_cast<int>(ExitCode::kValidation);
  }
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Point point_from(const json& j, const StateSpaceDims& dims) {
  std::vector<double> xs = j.value("x", std::vector<double>(dims.n, 0.0));
  std::vector<double> ys = j.value("y", std::vector<double>(dims.m, 0.0));
  if (xs.size() != dims.n || ys.size() != dims.m) fail(ErrorKind::kInvalidConfig, "point has wrong dimensions");
  Point p(Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size()), Eigen::Map<Eigen::VectorXd>(ys.data(), ys.size()));
  check_point(dims, p);
  return p;
}

Box default_box(const StateSpaceDims& dims) {
  Box b;
  for (std::size_t k = 0; k < dims.total(); ++k) b.axes.push_back(k < dims.n ? Interval{0.0, 1.0} : Interval{-1.0, 1.0});
  return b;
}

Box box_from(const json& j) {
  Box b;
  for (const auto& a : j) {
    if (!a.is_array() || a.size() != 2) fail(ErrorKind::kInvalidConfig, "box axes must be [lo, hi] pairs");
    b.axes.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  return b;
}

// Everything a command needs from the model section.
struct ModelContext {
  StateSpaceDims dims;
  std::optional<StandardOperatorSpec> standard;
  std::optional<SingularOperatorSpec> singular;
  std::unique_ptr<StandardSdeCoefficients> standard_sde;
  std::unique_ptr<SdeCoefficients> singular_sde;
  const SdeModel* process = nullptr;
  WeightedMeasure measure;
};

ModelContext load_model(const json& cfg, bool need_singular) {
  if (!cfg.contains("model")) fail(ErrorKind::kInvalidConfig, "config has no model section");
  const json& m = cfg.at("model");
  const std::string type = m.value("type", std::string("standard"));
  ModelContext ctx;
  if (type == "standard") {
    ctx.standard = StandardOperatorSpec::from_json(m);
    ctx.dims = ctx.standard->dims;
  } else if (type == "singular") {
    ctx.singular = SingularOperatorSpec::from_json(m);
    ctx.dims = ctx.singular->dims;
  } else {
    fail(ErrorKind::kInvalidConfig, "unknown model type '" + type + "'");
  }
  const std::string process = cfg.value("process", type);
  if (process != "standard" && process != "singular") fail(ErrorKind::kInvalidConfig, "process must be standard or singular");
  if (process == "standard" && !ctx.standard) fail(ErrorKind::kInvalidConfig, "standard process needs a standard model");
  if ((process == "singular" || need_singular) && !ctx.singular) {
    DeriveConfig dc;
    if (cfg.contains("derive")) dc.spacing = cfg.at("derive").value("spacing", dc.spacing);
    ctx.singular = derive_singular_from_standard(*ctx.standard, dc);
  }
  if (ctx.standard) ctx.standard_sde = std::make_unique<StandardSdeCoefficients>(*ctx.standard);
  if (ctx.singular) {
    ctx.singular_sde = std::make_unique<SdeCoefficients>(*ctx.singular);
    ctx.measure = ctx.singular->measure();
  } else {
    ctx.measure = WeightedMeasure{ctx.dims, ctx.standard->b_hat};
  }
  ctx.process = process == "standard" ? static_cast<const SdeModel*>(ctx.standard_sde.get())
                                      : static_cast<const SdeModel*>(ctx.singular_sde.get());
  return ctx;
}

DomainSpec load_domain(const json& cfg, const StateSpaceDims& dims) {
  if (!cfg.contains("domain")) return DomainSpec::full(dims, default_box(dims));
  json d = cfg.at("domain");
  if (!d.contains("dims")) d["dims"] = {{"n", dims.n}, {"m", dims.m}};
  if (d.value("shape", std::string("box")) == "full" && !d.contains("box")) {
    return DomainSpec::full(dims, default_box(dims));
  }
  DomainSpec dom = DomainSpec::from_json(d);
  if (!(dom.dims() == dims)) fail(ErrorKind::kInvalidConfig, "domain and model dimensions differ");
  return dom;
}

ScalarField field_from(const json& params, const char* key, const StateSpaceDims& dims, double fallback) {
  if (!params.contains(key)) return ScalarField(fallback);
  return ScalarField::from_json(params.at(key), dims);
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) fail(ErrorKind::kInvalidConfig, "cannot write " + p.string());
  os << s;
}

struct Run {
  json cfg;
  PathConfig sim;
  fs::path out;
  json result;
  bool validation_failed = false;
};

// ---------------------------------------------------------------------------

void cmd_validate(Run& run) {
  const json params = run.cfg.value("params", json::object());
  const json& m = run.cfg.at("model");
  const std::string type = m.value("type", std::string("standard"));
  ValidationGrid grid;
  StateSpaceDims dims;
  if (type == "standard") {
    const StandardOperatorSpec op = StandardOperatorSpec::from_json(m);
    dims = op.dims;
    grid = ValidationGrid::lattice(dims, params.value("lattice", std::size_t{8}));
    grid.directions = params.value("directions", grid.directions);
    const ValidationReport rep = validate_assumptions(op, grid);
    run.result = rep.to_json();
    run.validation_failed = !rep.passed;
  } else {
    const SingularOperatorSpec op = SingularOperatorSpec::from_json(m);
    dims = op.dims;
    grid = ValidationGrid::lattice(dims, params.value("lattice", std::size_t{8}));
    grid.directions = params.value("directions", grid.directions);
    const ValidationReport rep = validate_assumptions(op, grid);
    run.result = rep.to_json();
    run.validation_failed = !rep.passed;
  }
}

void cmd_simulate(Run& run) {
  const ModelContext ctx = load_model(run.cfg, false);
  const DomainSpec dom = load_domain(run.cfg, ctx.dims);
  const Point z0 = point_from(run.cfg.value("start", json::object()), ctx.dims);
  const PathBundle b = simulate_bundle(*ctx.process, z0, dom, run.sim);
  const std::size_t last = b.n_records() - 1;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ctx.dims.total());
  std::size_t alive = 0;
  std::size_t exited = 0;
  for (std::size_t p = 0; p < b.n_paths(); ++p) {
    exited += b.exited[p];
    if (!b.alive(p, last)) continue;
    ++alive;
    for (std::size_t k = 0; k < ctx.dims.total(); ++k) mean[k] += b.coord(p, last, k);
  }
  if (alive > 0) mean /= static_cast<double>(alive);
  run.result = {{"n_paths", b.n_paths()},        {"n_records", b.n_records()},
                {"n_steps", run.sim.n_steps()},  {"exited_fraction", static_cast<double>(exited) / b.n_paths()},
                {"final_alive_mean", vec_json(mean)}};
  const json outputs = run.cfg.value("outputs", json::object());
  if (outputs.value("bundle", true)) {
    std::ofstream os(run.out / "bundle.kimb", std::ios::binary);
    b.write_binary(os);
  }
  if (outputs.value("paths_csv", b.n_paths() * b.n_records() <= 1000000)) {
    std::ofstream os(run.out / "paths.csv", std::ios::binary);
    b.write_csv(os);
  }
}

void cmd_fk(Run& run) {
  const ModelContext ctx = load_model(run.cfg, false);
  const DomainSpec dom = load_domain(run.cfg, ctx.dims);
  const Point z0 = point_from(run.cfg.value("start", json::object()), ctx.dims);
  const json params = run.cfg.value("params", json::object());
  const std::string kind = params.value("kind", std::string("semigroup"));
  const double t = params.value("t", run.sim.horizon);
  const double t1 = params.value("t1", 0.0);
  Estimate e;
  if (kind == "semigroup") {
    const ScalarField f = field_from(params, "f", ctx.dims, 1.0);
    e = estimate_semigroup(*ctx.process, [&](const Point& z) { return f(z); }, t, z0, dom, run.sim);
  } else if (kind == "dirichlet") {
    const ScalarField g = field_from(params, "g", ctx.dims, 1.0);
    BoundaryData bd{[&](double, const Point& z) { return g(z); }, true};
    std::optional<double> t_cut;
    if (params.contains("t_cut")) t_cut = params.at("t_cut").get<double>();
    e = estimate_dirichlet(*ctx.process, bd, t, z0, t1, dom, run.sim, t_cut);
  } else if (kind == "inhomogeneous") {
    const ScalarField f = field_from(params, "f", ctx.dims, 0.0);
    const ScalarField src = field_from(params, "source", ctx.dims, 0.0);
    e = estimate_inhomogeneous(
        *ctx.process, [&](const Point& z) { return f(z); }, [&](double, const Point& z) { return src(z); }, t, t1, z0,
        dom, run.sim);
  } else {
    fail(ErrorKind::kInvalidConfig, "unknown fk kind '" + kind + "'");
  }
  run.result = {{"kind", kind}, {"t", t}, {"estimate", e.to_json()}};
}

GridSpec grid_from(const json& params, const StateSpaceDims& dims) {
  GridSpec g;
  const json gj = params.value("grid", json::object());
  g.box = gj.contains("box") ? box_from(gj.at("box")) : default_box(dims);
  if (g.box.size() != dims.total()) fail(ErrorKind::kInvalidConfig, "grid box has the wrong dimension");
  g.cells = gj.value("cells", std::vector<std::size_t>(dims.total(), 64));
  const std::string chart = gj.value("chart", std::string("linear"));
  if (chart == "sqrt")
    g.chart = CellChart::kSqrt;
  else if (chart != "linear")
    fail(ErrorKind::kInvalidConfig, "grid chart must be linear or sqrt");
  return g;
}

void cmd_density(Run& run) {
  const ModelContext ctx = load_model(run.cfg, false);
  const DomainSpec dom = load_domain(run.cfg, ctx.dims);
  const Point z0 = point_from(run.cfg.value("start", json::object()), ctx.dims);
  const json params = run.cfg.value("params", json::object());
  const double t = params.value("t", run.sim.horizon);
  PathConfig sim = run.sim;
  sim.horizon = t;
  sim.record_stride = sim.n_steps();
  const PathBundle b = simulate_bundle(*ctx.process, z0, dom, sim);
  const DensityEstimate est = estimate_density(b, b.times.back(), grid_from(params, ctx.dims), ctx.measure);
  json lq = json::object();
  for (double q : params.value("lq", std::vector<double>{1.0, 1.2}))
    lq[std::to_string(q)] = lq_statistic(est, q);
  json holder = json::object();
  for (double a : params.value("holder_alpha", std::vector<double>{0.0, 1.0, 2.0}))
    holder[std::to_string(a)] = holder_moment(b, b.times.back(), a);
  run.result = est.summary();
  run.result["check_mass"] = check_mass(est);
  run.result["lq"] = lq;
  run.result["holder_moment"] = holder;
  std::ofstream os(run.out / "density.csv", std::ios::binary);
  est.write_csv(os);
}

void cmd_harnack(Run& run) {
  const ModelContext ctx = load_model(run.cfg, false);
  const DomainSpec dom = load_domain(run.cfg, ctx.dims);
  const json params = run.cfg.value("params", json::object());
  const ScalarField g = field_from(params, "g", ctx.dims, 1.0);
  const double t1 = params.value("t1", 0.0);
  const double t_max = params.value("t_max", t1 + run.sim.horizon);
  const Point z = point_from(params.value("center", json::object()), ctx.dims);
  LatticeSpec lat;
  lat.time_divisions = params.value("time_divisions", lat.time_divisions);
  lat.space_divisions = params.value("space_divisions", lat.space_divisions);
  DirichletSolutionEstimator est(*ctx.process, BoundaryData{[&](double, const Point& p) { return g(p); }, true}, t1,
                                 t_max, dom, run.sim);
  SolutionEstimator u = [&](double t, const Point& p) { return est(t, p); };
  std::vector<HarnackReport> reps;
  const std::string mode = params.value("mode", std::string("scan"));
  if (mode == "scan") {
    reps = scale_invariant_scan(u, params.value("s", 0.5 * (t1 + t_max)), z, params.value("R", 1.0),
                                params.value("c", 0.9), params.value("d", 0.9),
                                params.value("rhos", std::vector<double>{0.1, 0.2, 0.4}), lat);
  } else if (mode == "ratio") {
    for (double r : params.value("radii", std::vector<double>{0.1}))
      reps.push_back(harnack_ratio(u, params.value("t0", t_max), z, r, lat));
  } else {
    fail(ErrorKind::kInvalidConfig, "harnack mode must be scan or ratio");
  }
  json arr = json::array();
  for (const auto& r : reps) arr.push_back(r.to_json());
  const double mr = max_ratio(reps);
  run.result = {{"mode", mode},
                {"reports", arr},
                {"max_ratio", std::isfinite(mr) ? json(mr) : json(nullptr)},
                {"bundles_simulated", est.bundles_simulated()}};
  std::ofstream os(run.out / "harnack.csv", std::ios::binary);
  write_scan_csv(os, reps);
}

void cmd_girsanov(Run& run) {
  const ModelContext ctx = load_model(run.cfg, true);
  if (!ctx.standard) fail(ErrorKind::kInvalidConfig, "girsanov needs a standard model");
  const Point z0 = point_from(run.cfg.value("start", json::object()), ctx.dims);
  const json params = run.cfg.value("params", json::object());
  const ScalarField f = field_from(params, "f", ctx.dims, 1.0);
  const GirsanovField theta = girsanov_field(*ctx.singular);
  const DomainSpec full = DomainSpec::full(ctx.dims, default_box(ctx.dims));
  PathConfig sim = run.sim;
  const PathBundle weighted = simulate_bundle(theta.singular(), z0, full, sim, &theta);
  PathConfig sim_std = sim;
  sim_std.seed = sim.seed + 1;
  const PathBundle standard = simulate_bundle(theta.standard(), z0, full, sim_std);
  const double t = weighted.times.back();
  const PointFunction fn = [&](const Point& z) { return f(z); };
  const GirsanovComparison cmp = girsanov_compare(weighted, standard, fn, t);
  const Estimate em = estimate_semigroup(weighted, [](const Point&) { return 1.0; }, t);
  run.result = {{"t", t},
                {"weighted_singular", cmp.weighted.to_json()},
                {"standard", cmp.standard.to_json()},
                {"difference", cmp.difference},
                {"combined_stderr", cmp.combined_stderr},
                {"martingale_mean", em.to_json()},
                {"consistent", std::abs(cmp.difference) <= 3.0 * cmp.combined_stderr}};
  if (params.value("exp_moment", false)) run.result["exp_moment"] = exp_moment_diagnostic(theta, z0, t, sim).to_json();
}

void cmd_oracle_compare(Run& run) {
  const ModelContext ctx = load_model(run.cfg, false);
  if (!ctx.standard || ctx.dims.n != 1 || ctx.dims.m != 0) fail(ErrorKind::kInvalidConfig, "oracle-compare needs a 1D standard model");
  const auto ab = ctx.standard_sde->constant_1d();
  if (!ab || ab->first != 1.0) fail(ErrorKind::kInvalidConfig, "oracle-compare needs constant b-hat and a-hat = 0");
  const Point z0 = point_from(run.cfg.value("start", json::object()), ctx.dims);
  const json params = run.cfg.value("params", json::object());
  const double t = params.value("t", run.sim.horizon);
  const double upper = params.value("upper", 6.0);
  const Besq1dModel besq{ab->second, z0.x[0]};
  PathConfig sim = run.sim;
  sim.horizon = t;
  sim.record_stride = sim.n_steps();
  const DomainSpec full = DomainSpec::full(ctx.dims, default_box(ctx.dims));
  const PathBundle b = simulate_bundle(*ctx.process, z0, full, sim);
  GridSpec g;
  g.box.axes = {{0.0, upper}};
  g.cells = {params.value("cells", std::size_t{64})};
  g.chart = params.value("chart", std::string("sqrt")) == "linear" ? CellChart::kLinear : CellChart::kSqrt;
  const WeightedMeasure mu = WeightedMeasure::constant(ctx.dims, besq.b0);
  const DensityEstimate est = estimate_density(b, b.times.back(), g, mu);
  const double tT = b.times.back();
  const double l1 = l1_distance(est, mu, [&](const Point& z) { return besq_density_mu(besq, tT, z.x[0]); },
                                1.0 - besq_transition_cdf(besq, tT, upper));
  const Estimate mean = estimate_semigroup(b, [](const Point& z) { return z.x[0]; }, tT);
  const double expected = besq_mean(besq, tT);
  run.result = {{"t", tT},
                {"b0", besq.b0},
                {"x0", besq.x0},
                {"l1", l1},
                {"mean", mean.to_json()},
                {"expected_mean", expected},
                {"mean_within_3se", std::abs(mean.value - expected) <= 3.0 * mean.std_error},
                {"l1_below_0.05", l1 <= 0.05}};
  std::ofstream os(run.out / "density.csv", std::ios::binary);
  est.write_csv(os);
}

}  // namespace

int run_config(const json& config, const CliOptions& options) {
  try {
    Run run;
    run.cfg = config;
    const std::string command = run.cfg.value("command", std::string());
    if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands))
      fail(ErrorKind::kInvalidConfig, "unknown command '" + command + "'");
    if (options.seed) run.cfg["seed"] = *options.seed;
    if (!run.cfg.contains("seed")) fail(ErrorKind::kInvalidConfig, "a seed is required (config \"seed\" or --seed)");
    const auto seed = run.cfg.at("seed").get<std::uint64_t>();
    json sim_json = run.cfg.value("sim", json::object());
    sim_json.erase("threads");
    sim_json["seed"] = seed;
    run.cfg["sim"] = sim_json;
    run.sim = PathConfig::from_json(sim_json);
    if (options.threads) {
      run.sim.threads = *options.threads;
    } else if (const char* env = std::getenv("KIMURA_LAB_THREADS")) {
      try {
        run.sim.threads = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::exception&) {
        fail(ErrorKind::kInvalidConfig, "KIMURA_LAB_THREADS is not a number");
      }
    }
    const std::string hash = config_fingerprint(run.cfg);
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    run.out = options.out_dir;

    if (command == "validate") cmd_validate(run);
    else if (command == "simulate") cmd_simulate(run);
    else if (command == "fk") cmd_fk(run);
    else if (command == "density") cmd_density(run);
    else if (command == "harnack") cmd_harnack(run);
    else if (command == "girsanov") cmd_girsanov(run);
    else cmd_oracle_compare(run);

    const json doc{{"command", command}, {"config_hash", hash}, {"seed", seed}, {"result", run.result}};
    write_text(run.out / "results.json", doc.dump(2) + "\n");
    std::cout << "kimura_lab " << command << ": " << (run.validation_failed ? "validation-failed" : "ok")
              << " config_hash=" << hash << '\n';
    return static_cast<int>(run.validation_failed ? ExitCode::kValidation : ExitCode::kOk);
  } catch (const KimuraError& e) {
    error_line(std::string(to_string(e.kind())), e.what());
    return exit_for(e.kind());
  } catch (const json::exception& e) {
    error_line("invalid-config", e.what());
    return static_cast<int>(ExitCode::kValidation);
  } catch (const std::exception& e) {
    error_line("numeric-failure", e.what());
    return static_cast<int>(ExitCode::kNumeric);
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for generalized Kimura diffusions"};
  app.require_subcommand(1);
  CliOptions opt;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out = ".";
  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " command");
    sub->add_option("--config", opt.config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (0: all)");
    sub->add_option("--out", out, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--threads")) opt.threads = threads;
  opt.out_dir = out;

  json cfg;
  {
    std::ifstream is(opt.config_path);
    if (!is) {
      error_line("invalid-config", "cannot open " + opt.config_path);
      return static_cast<int>(ExitCode::kValidation);
    }
    try {
      cfg = json::parse(is);
    } catch (const json::exception& e) {
      error_line("invalid-config", e.what());
      return static_cast<int>(ExitCode::kValidation);
    }
  }
  const std::string name = sub->get_name();
  if (cfg.contains("command") && cfg.at("command") != name) {
    error_line("invalid-config", "config command '" + cfg.at("command").dump() + "' does not match '" + name + "'");
    return static_cast<int>(ExitCode::kValidation);
  }
  cfg["command"] = name;
  return run_config(cfg, opt);
}

}  // namespace kimura
