#include "thc/cli.hpp"

#include <CLI11.hpp>
#include <fftw3.h>
#include <json.hpp>

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>

#include "thc/config.hpp"
#include "thc/diagnostics.hpp"
#include "thc/io.hpp"
#include "thc/operators.hpp"
#include "thc/parallel.hpp"

namespace thc {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunDir {
  fs::path root;
  std::string command;
  RunConfig config;
  Json summary = Json::object();
  std::string status = "ok";

  RunDir(fs::path r, std::string cmd, RunConfig c)
      : root(std::move(r)), command(std::move(cmd)), config(std::move(c)) {
    fs::create_directories(root / "snapshots");
    write_text_file(root / "config.toml", render_config(config));
  }

  fs::path snapshot(const std::string& name) const { return root / "snapshots" / (name + ".bin"); }

  void write_manifest() const {
    Json m;
    m["format"] = "thc-run-manifest";
    m["format_version"] = 1;
    m["command"] = command;
    m["status"] = status;
    m["seed"] = config.seed;
    m["initial_seed"] = config.initial_seed;
    Json versions;
    versions["thc"] = kVersion;
    versions["csv"] = CsvWriter::kVersion;
    versions["fftw"] = std::string(fftw_version);
    versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
    versions["compiler"] = std::string(__VERSION__);
    m["versions"] = versions;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["created_utc"] = stamp;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    Json list = Json::array();
    for (const auto& f : files)
      list.push_back({{"path", fs::relative(f, root).generic_string()},
                      {"bytes", fs::file_size(f)},
                      {"fnv1a", hex64(fnv1a_file(f))}});
    m["files"] = list;
    m["summary"] = summary;
    write_text_file(root / "manifest.json", m.dump(2) + "\n");
  }
};

std::string step_name(const char* prefix, std::int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%08lld", prefix, static_cast<long long>(step));
  return buf;
}

int simulate(RunDir& dir, std::ostream& out) {
  const RunConfig& cfg = dir.config;
  const Setup setup = config_setup(cfg);
  const auto c = derive_constants(setup.params, setup.grid, cfg.epsilon);
  const auto integ = std::make_shared<const Integrator>(setup);
  const std::int64_t start = steps_in(cfg.t0, cfg.dt), n = steps_in(cfg.t1 - cfg.t0, cfg.dt);
  Propagator p(integ, config_system(cfg), config_initial_state(cfg), start);

  CsvWriter csv(dir.root / "diagnostics.csv", "diagnostics",
                {"step", "t", "ts_energy", "q_energy", "v_energy", "grad_ts", "eta_w12", "gamma", "r",
                 "salinity_mean", "salinity_norm", "audit_lhs", "audit_bound", "R2_sq", "R_sq"});
  EnvelopeAuditor audit(c, cfg.dt);
  RadiusTracker radius(c, cfg.dt);
  double max_salt = 0.0, last_R_sq = c.R1_sq;
  std::int64_t last_outside = -1;
  auto record = [&](const std::optional<AuditStep>& a) {
    const State& s = p.state();
    const auto e = energy_record(s, p.eta() ? &*p.eta() : nullptr, c);
    const double smean = mean(s.S), snorm = norm_l2(s.S);
    if (snorm > 0.0) max_salt = std::max(max_salt, std::abs(smean) / snorm);
    const double v = e.ts_energy + e.q_energy;
    if (v > 1.1 * 1.1 * last_R_sq) last_outside = p.step();
    csv.row({static_cast<double>(p.step()), s.t, e.ts_energy, e.q_energy, v, e.grad_ts, e.eta_w12, e.gamma_sample,
             e.r_sample, smean, snorm, a ? a->lhs : kNaN, a ? a->bound : kNaN, radius.R2_sq(), radius.R_sq()});
  };
  auto snap = [&](const std::string& name) { write_snapshot_file(p.physical(), dir.snapshot(name)); };

  record(std::nullopt);
  snap(step_name("step_", p.step()));
  try {
    for (std::int64_t i = 0; i < n; ++i) {
      const State before = p.state();
      const ScalarField psi = advecting_stream_function(p);
      const double w = p.eta() ? eta_w12_sq(p.eta()->eta) : 0.0;
      p.advance();
      const AuditStep a = audit.add(before, psi, p.state(), p.step() - 1);
      last_R_sq = c.R1_sq + radius.add(w);
      record(a);
      if ((cfg.snapshot_every > 0 && (i + 1) % cfg.snapshot_every == 0) || i + 1 == n)
        snap(step_name("step_", p.step()));
    }
  } catch (const SolverError& e) {
    snap("last_good");
    csv.close();
    dir.status = "blow-up";
    dir.summary["error"] = e.what();
    dir.summary["failed_step"] = p.step();
    dir.write_manifest();
    throw;
  }
  csv.close();
  const auto& rep = audit.report();
  dir.summary = {{"steps", n},
                 {"audit_violations", rep.violations.size()},
                 {"audit_max_ratio", rep.max_ratio},
                 {"max_salinity_mean_ratio", max_salt},
                 {"R1_sq", c.R1_sq},
                 {"R2_sq", radius.R2_sq()},
                 {"R_sq", radius.R_sq()},
                 {"last_step_outside_ball", last_outside}};
  out << "simulate: " << n << " steps, audit violations " << rep.violations.size() << " (max ratio "
      << format_double(rep.max_ratio) << "), R^2 " << format_double(radius.R_sq()) << "\n";
  return kExitOk;
}

int twin(RunDir& dir, std::ostream& out) {
  const RunConfig& cfg = dir.config;
  const Setup setup = config_setup(cfg);
  const Grid& g = setup.grid;
  const std::int64_t n = steps_in(cfg.t1, cfg.dt);
  const State u0 = config_initial_state(cfg);
  const State pert = make_initial_state(g, true, cfg.perturb_scale, cfg.perturb_seed, Stream::Perturbation,
                                        cfg.poisson_tol);
  const auto f = spectral_functionals(g, setup.params, static_cast<std::size_t>(cfg.functionals), cfg.smoothness);
  DeterminingTracker tracker(f, cfg.dt, cfg.window);
  State last_a, last_b;
  twin_run(setup, config_system(cfg), u0, pert, n, [&](const Propagator& a, const Propagator& b) {
    last_a = a.physical();
    last_b = b.physical();
    tracker.add(a.state().t, last_a, last_b);
  });
  write_snapshot_file(last_a, dir.snapshot("twin_a"));
  write_snapshot_file(last_b, dir.snapshot("twin_b"));
  const auto r = tracker.report(cfg.decay_ratio);
  CsvWriter csv(dir.root / "determining.csv", "determining", {"step", "t", "max_l_sq", "windowed", "state_gap"});
  for (std::size_t i = 0; i < r.t.size(); ++i)
    csv.row({static_cast<double>(i), r.t[i], r.max_l_sq[i], i < r.windowed.size() ? r.windowed[i] : kNaN,
             r.state_gap[i]});
  csv.close();
  dir.summary = {{"functionals", r.functionals},     {"epsilon_L", r.epsilon_L},
                 {"C_L", r.C_L},                     {"functional_ratio", r.functional_ratio},
                 {"state_ratio", r.state_ratio},     {"functional_rate", r.functional_rate},
                 {"state_rate", r.state_rate},       {"verdict", verdict_name(r.verdict)}};
  out << "twin: verdict " << verdict_name(r.verdict) << ", functional ratio " << format_double(r.functional_ratio)
      << ", state ratio " << format_double(r.state_ratio) << "\n";
  return kExitOk;
}

int pullback(RunDir& dir, std::ostream& out) {
  const RunConfig& cfg = dir.config;
  const Setup setup = config_setup(cfg);
  const State u0 = config_initial_state(cfg);
  const State u1 = make_initial_state(setup.grid, true, std::max(cfg.initial_amplitude, 1.0), cfg.pullback_seed,
                                      Stream::Initial, cfg.poisson_tol);
  const double gap0 = state_distance(u0, u1);
  std::vector<State> a, b;
  parallel_for(2, [&](std::size_t i) {
    (i == 0 ? a : b) = pullback_run(setup, i == 0 ? u0 : u1, cfg.pullback_times);
  });
  CsvWriter csv(dir.root / "pullback.csv", "pullback", {"t_back", "gap", "relative_gap", "max_abs_difference"});
  Json rows = Json::array();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double gap = state_distance(a[i], b[i]);
    const double rel = gap0 > 0.0 ? gap / gap0 : 0.0;
    csv.row({cfg.pullback_times[i], gap, rel, max_state_difference(a[i], b[i])});
    rows.push_back({{"t_back", cfg.pullback_times[i]}, {"relative_gap", rel}});
    write_snapshot_file(a[i], dir.snapshot(step_name("pullback_a_", steps_in(cfg.pullback_times[i], cfg.dt))));
    write_snapshot_file(b[i], dir.snapshot(step_name("pullback_b_", steps_in(cfg.pullback_times[i], cfg.dt))));
    out << "pullback: t_back " << format_double(cfg.pullback_times[i]) << " relative gap " << format_double(rel)
        << "\n";
  }
  csv.close();
  dir.summary = {{"initial_gap", gap0}, {"gaps", rows}};
  return kExitOk;
}

int ou_check(RunDir& dir, std::ostream& out) {
  const RunConfig& cfg = dir.config;
  const Setup setup = config_setup(cfg);
  const auto ns = static_cast<std::size_t>(cfg.samples);
  std::vector<double> l2(ns), grad(ns);
  parallel_for(ns, [&](std::size_t i) {
    const OUState z = ou_stationary_sample(setup.spectrum, setup.params, setup.grid, cfg.seed,
                                           static_cast<std::int64_t>(i));
    l2[i] = inner(z.eta, z.eta);
    grad[i] = gradient_energy(z.eta);
  });
  CsvWriter csv(dir.root / "ou_samples.csv", "ou-samples", {"sample", "eta_l2_sq", "grad_eta_sq"});
  double ml = 0.0, mg = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    csv.row({static_cast<double>(i), l2[i], grad[i]});
    ml += l2[i];
    mg += grad[i];
  }
  csv.close();
  ml /= static_cast<double>(ns);
  mg /= static_cast<double>(ns);
  const auto expect = ou_moments(setup.spectrum, setup.params, setup.grid);
  const auto c = derive_constants(setup.params, setup.grid, cfg.epsilon);
  const auto lem = mean_gamma_check(setup.spectrum, setup.params, setup.grid, c.epsilon);
  const double rel = expect.grad_eta > 0.0 ? std::abs(mg - expect.grad_eta) / expect.grad_eta : std::abs(mg);
  dir.summary = {{"samples", ns},
                 {"mean_grad_eta_sq", mg},
                 {"expected_grad_eta_sq", expect.grad_eta},
                 {"relative_error", rel},
                 {"mean_eta_l2_sq", ml},
                 {"expected_eta_l2_sq", expect.eta_l2},
                 {"mean_gamma_pass", lem.pass},
                 {"mean_gamma_deficit", lem.deficit}};
  out << "ou-check: E|grad eta|^2 = " << format_double(mg) << " expected " << format_double(expect.grad_eta)
      << " (relative error " << format_double(rel) << "); mean-gamma condition " << (lem.pass ? "holds" : "fails")
      << "\n";
  return kExitOk;
}

int constants(const RunConfig& cfg, RunDir* dir, std::ostream& out) {
  const Setup setup = config_setup(cfg);
  const auto c = derive_constants(setup.params, setup.grid, cfg.epsilon);
  const auto lem = mean_gamma_check(setup.spectrum, setup.params, setup.grid, c.epsilon);
  Json table = Json::object();
  for (const auto& [name, value] : constants_table(c)) {
    out << name << " = " << format_double(value) << "\n";
    table[name] = value;
  }
  out << "lambda1 convention: (pi/d)^2" << (c.lambda1_differs ? " (differs from the 2D value)" : "") << "\n";
  out << "mean-gamma condition: " << (lem.pass ? "PASS" : "FAIL") << " (lambda1 nu^3 = "
      << format_double(lem.lambda1 * cfg.nu * cfg.nu * cfg.nu) << ", threshold " << format_double(lem.threshold)
      << ", E gamma = " << format_double(lem.expected_gamma) << ", minimal k = " << format_double(lem.minimal_k)
      << ")\n";
  if (dir) {
    dir->summary = {{"constants", table},
                    {"mean_gamma_pass", lem.pass},
                    {"expected_gamma", lem.expected_gamma},
                    {"minimal_k", lem.minimal_k}};
  }
  return kExitOk;
}

int cocycle(RunDir& dir, std::ostream& out) {
  const RunConfig& cfg = dir.config;
  const Setup setup = config_setup(cfg);
  const State u0 = config_initial_state(cfg);
  const std::int64_t total = std::max<std::int64_t>(2, steps_in(cfg.t1, cfg.dt));
  std::mt19937_64 rng(cfg.seed ^ 0x5eedc0c1ULL);
  std::uniform_int_distribution<std::int64_t> pick(1, total - 1);
  CsvWriter csv(dir.root / "cocycle.csv", "cocycle", {"split", "s", "t", "mis_shift", "max_difference"});
  bool exact = true;
  for (int i = 0; i < cfg.splits; ++i) {
    const std::int64_t s = pick(rng), t = total - s;
    const auto r = cocycle_check(setup, config_system(cfg), u0, s * cfg.dt, t * cfg.dt);
    exact = exact && r.max_difference == 0.0;
    csv.row({static_cast<double>(i), s * cfg.dt, t * cfg.dt, 0.0, r.max_difference});
  }
  const std::int64_t s = total / 2;
  const auto mut = cocycle_check(setup, config_system(cfg), u0, s * cfg.dt, (total - s) * cfg.dt, 1);
  csv.row({static_cast<double>(cfg.splits), s * cfg.dt, (total - s) * cfg.dt, 1.0, mut.max_difference});
  csv.close();
  dir.summary = {{"splits", cfg.splits},
                 {"all_exact", exact},
                 {"mis_shift_difference", mut.max_difference},
                 {"pass", exact && mut.max_difference > 0.0}};
  out << "cocycle-check: " << (exact ? "exact" : "NOT exact") << " over " << cfg.splits
      << " splits; off-by-one path gives " << format_double(mut.max_difference) << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic thermohaline circulation simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<double> perturb_scale;
  std::optional<int> modes;
  struct Cmd {
    const char* name;
    const char* help;
    bool needs_out;
  };
  const Cmd cmds[] = {{"simulate", "Integrate one trajectory with diagnostics and snapshots", true},
                      {"twin", "Twin run and determining-functionals verdict", true},
                      {"pullback", "Pullback contraction of two initial states", true},
                      {"ou-check", "Stationary moments of the Ornstein-Uhlenbeck field", true},
                      {"constants", "Print the derived constants and the mean-gamma condition", false},
                      {"cocycle-check", "Compare one-piece and composed trajectories", true}};
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    auto* o = sub->add_option("--out", out_dir, "Run directory");
    if (c.needs_out) o->required();
    if (std::string(c.name) == "twin") {
      sub->add_option("--perturb-scale", perturb_scale, "Perturbation amplitude (overrides the config)");
      sub->add_option("--modes", modes, "Number of functionals (overrides the config)");
    }
  }

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = parse_config(read_text_file(config_path));
    cfg.mode = command;
    if (perturb_scale) cfg.perturb_scale = *perturb_scale;
    if (modes) cfg.functionals = *modes;
    if (auto errs = check_config(cfg); !errs.empty()) {
      std::vector<ConfigIssue> issues;
      for (auto& e : errs) issues.push_back({0, e});
      throw ConfigError(std::move(issues));
    }
    std::optional<RunDir> dir;
    if (!out_dir.empty()) dir.emplace(out_dir, command, cfg);
    int rc = kExitOk;
    if (command == "simulate") rc = simulate(*dir, out);
    if (command == "twin") rc = twin(*dir, out);
    if (command == "pullback") rc = pullback(*dir, out);
    if (command == "ou-check") rc = ou_check(*dir, out);
    if (command == "constants") rc = constants(cfg, dir ? &*dir : nullptr, out);
    if (command == "cocycle-check") rc = cocycle(*dir, out);
    if (dir) dir->write_manifest();
    return rc;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace thc
