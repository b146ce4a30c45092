#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "thc/cli.hpp"
#include "thc/config.hpp"
#include "thc/io.hpp"

using namespace thc;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = "[noise]\nseed = 5\n[time]\nt1 = 1\n";

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<ConfigIssue>& v, int line, const std::string& needle) {
  for (const auto& i : v)
    if (i.line == line && i.message.find(needle) != std::string::npos) return true;
  return false;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("thc_test_cli_io_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

struct Cli {
  int rc = -1;
  std::string out, err;
};

Cli run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "thc");
  std::ostringstream o, e;
  Cli r;
  r.rc = cli_main(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

std::string small_config(const std::string& extra = "") {
  return "[grid]\nny = 16\nnz = 12\n[noise]\nseed = 21\nburn_in = 1\n[time]\nt1 = 0.1\ndt = 0.01\n"
         "snapshot_every = 5\n" +
         extra;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(read_text_file(dir / "manifest.json")); }

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  RunConfig c = parse_config(kMinimal);
  RunConfig d;
  d.seed = 5;
  d.t1 = 1.0;
  CHECK(c == d);
  CHECK(c.ny == 64);
  CHECK(c.nz == 32);
  CHECK(c.dt == 2e-3);
  CHECK(c.theta.kind == "cosine");
  CHECK(c.pullback_times == std::vector<double>{5, 10, 20});
}

TEST_CASE("render and parse round trip") {
  RunConfig c = parse_config(kMinimal);
  CHECK(parse_config(render_config(c)) == c);

  c.ny = 8;
  c.nz = 6;
  c.theta = {"table", 0.0, {0.1, 0.2, 1.0 / 3.0, 0.4, 0.5, 0.6, 0.7, 0.8}};
  c.F = {"table", 0.0, {1, -1, 1, -1, 1, -1, 1, -1}};
  c.F.table[0] = 0.5;
  c.F.table[7] = -0.5;
  c.spectrum = "table";
  c.modes = {{1, 0, 0.25}, {0, 2, 1e-3}};
  c.system = "random-ode";
  c.coupling = "as-published";
  c.pullback_times = {0.5, 1.5};
  c.functionals = 3;
  CHECK(check_config(c).empty());
  CHECK(parse_config(render_config(c)) == c);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    RunConfig r = parse_config(kMinimal);
    r.nu = u(rng);
    r.kappa_T = u(rng);
    r.kappa_S = u(rng);
    r.lambda = u(rng);
    r.g = u(rng) - 0.1;
    r.theta.amplitude = u(rng) - 5;
    r.F.amplitude = -u(rng);
    r.trace = u(rng);
    r.s_q = u(rng);
    r.seed = rng();
    r.initial_seed = rng();
    r.perturb_scale = u(rng) * 1e-7;
    r.l = u(rng);
    r.d = u(rng);
    r.epsilon = 0.0;
    INFO(render_config(r));
    REQUIRE(check_config(r).empty());
    CHECK(parse_config(render_config(r)) == r);
  }
}

TEST_CASE("config syntax: comments, quotes, lists") {
  auto c = parse_config(
      "# leading comment\n[noise]  # trailing\nseed = 9\nspectrum = \"power\"\n[time]\nt1 = 4\n"
      "[experiment]\npullback_times = [ 1, 2 ,4 ]\nmode = twin\n");
  CHECK(c.seed == 9);
  CHECK(c.pullback_times == std::vector<double>{1, 2, 4});
  CHECK(c.mode == "twin");
}

TEST_CASE("config errors are all reported with line numbers") {
  auto v = issues_of("[noise]\nseed = 1\nfoo = 2\n[time]\nt1 = 1\n[bogus]\nx = 1\n");
  CHECK(has_issue(v, 3, "unknown key 'foo'"));
  CHECK(has_issue(v, 6, "unknown section [bogus]"));
  CHECK(v.size() == 2);

  v = issues_of("[noise]\nseed = 1\n[time]\nt1 = 1\n[noise]\nseed = 2\n");
  CHECK(has_issue(v, 6, "duplicate key noise.seed at lines 2 and 6"));

  v = issues_of("[grid]\nny = 8\n");
  CHECK(has_issue(v, 0, "missing required key noise.seed"));
  CHECK(has_issue(v, 0, "missing required key time.t1"));

  v = issues_of("[noise]\nseed = x\n[time]\nt1 = \"a\"\ndt = [1]\n[physics]\nnu 1\n");
  CHECK(has_issue(v, 2, "expected an integer"));
  CHECK(has_issue(v, 4, "expected a number"));
  CHECK(has_issue(v, 5, "expected a single value"));
  CHECK(has_issue(v, 7, "expected 'key = value'"));

  v = issues_of("seed = 1\n");
  CHECK(has_issue(v, 1, "before any [section]"));

  // Constraint violations, several at once.
  v = issues_of(std::string(kMinimal) + "[physics]\nnu = -1\n[forcing]\nF = table\nF_table = [1, 1, 1, 1]\n"
                                        "[grid]\nny = 4\nnz = 4\n[experiment]\nsmoothness = 0.3\n");
  CHECK(has_issue(v, 6, "physics.nu: nu must be finite and > 0"));
  CHECK(has_issue(v, 8, "freshwater flux must integrate to zero"));
  CHECK(has_issue(v, 8, "trapezoid integral = 2"));
  CHECK(has_issue(v, 14, "smoothness must lie in (0, 1/4)"));

  v = issues_of(std::string(kMinimal) + "[forcing]\nF_table = [1, 2]\n[time]\n");
  CHECK(has_issue(v, 6, "only used with F = \"table\""));

  v = issues_of("[noise]\nseed = 1\n[time]\nt1 = 0.0015\n");
  CHECK(has_issue(v, 4, "t1 must be a multiple of dt"));

  try {
    parse_config("[noise]\nseed = 1\nfoo = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    CHECK(w.find("line 3: unknown key") != std::string::npos);
    CHECK(w.find("missing required key time.t1") != std::string::npos);
  }
}

TEST_CASE("snapshot round trip is bitwise") {
  auto g = make_grid(9, 7, 1.5, 0.5);
  State s = make_initial_state(g, true, 2.0, 4);
  s.t = 1.0 / 3.0;
  s.q[5] = -0.0;
  std::stringstream buf;
  write_snapshot(s, buf);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == kSnapshotHeaderBytes + 4 * g.size() * 8);
  CHECK(bytes.substr(0, 8) == "THCSNAP1");
  CHECK(bytes.substr(24, 4) == "QPTS");
  std::uint32_t ny = 0;
  std::memcpy(&ny, bytes.data() + 8, 4);
  CHECK(ny == 9);

  State r = read_snapshot(buf, g);
  CHECK(r.t == s.t);
  CHECK(r.vars == Variables::Physical);
  for (auto [a, b] : {std::pair{&s.q, &r.q}, {&s.psi, &r.psi}, {&s.T, &r.T}, {&s.S, &r.S}})
    CHECK(std::memcmp(a->values().data(), b->values().data(), g.size() * 8) == 0);

  s.vars = Variables::Transformed;
  std::stringstream buf2;
  write_snapshot(s, buf2);
  CHECK(buf2.str().substr(24, 4) == "qpTS");
  CHECK(read_snapshot(buf2, g).vars == Variables::Transformed);
}

TEST_CASE("snapshot errors") {
  auto g = make_grid(9, 7, 1.0, 1.0);
  State s = make_initial_state(g, true, 1.0, 4);
  std::stringstream buf;
  write_snapshot(s, buf);
  const std::string bytes = buf.str();

  std::istringstream cut(bytes.substr(0, 28 + 100));
  try {
    read_snapshot(cut, g);
    FAIL("expected truncation error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()) == "snapshot truncated in q: expected bytes 28..532, file ends at byte 128");
  }
  std::istringstream shortp(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_WITH_AS(read_snapshot(shortp, g), doctest::Contains("truncated in S"), FormatError);
  std::istringstream head(bytes.substr(0, 20));
  CHECK_THROWS_WITH_AS(read_snapshot(head, g), doctest::Contains("truncated in header"), FormatError);

  // Wrong magic with an absurd claimed size is rejected from the first 8 bytes.
  std::string bad = bytes.substr(0, 28);
  bad[0] = 'X';
  const std::uint32_t huge = 0xFFFFFFFFu;
  std::memcpy(bad.data() + 8, &huge, 4);
  std::memcpy(bad.data() + 12, &huge, 4);
  std::istringstream b1(bad);
  CHECK_THROWS_WITH_AS(read_snapshot(b1, g), doctest::Contains("magic"), FormatError);

  bad[0] = 'T';
  std::istringstream b2(bad);
  CHECK_THROWS_WITH_AS(read_snapshot(b2, g), doctest::Contains("expected 9x7"), FormatError);

  std::string tag = bytes;
  tag[24] = 'Z';
  std::istringstream b3(tag);
  CHECK_THROWS_WITH_AS(read_snapshot(b3, g), doctest::Contains("field order tag"), FormatError);
}

TEST_CASE("CSV writer") {
  const fs::path p = scratch("csv") += ".csv";
  {
    CsvWriter w(p, "demo", {"a", "b"});
    w.row({0.1, 1.0 / 3.0});
    w.row({-1e-300, 12345678901234567.0});
    CHECK_THROWS_AS(w.row({1.0}), Error);
    w.close();
  }
  std::istringstream in(read_text_file(p));
  std::string line;
  std::getline(in, line);
  CHECK(line == "# thc-csv v1 demo");
  std::getline(in, line);
  CHECK(line == "a,b");
  std::getline(in, line);
  CHECK(line == "0.10000000000000001,0.33333333333333331");
  CHECK(std::strtod(line.substr(line.find(',') + 1).c_str(), nullptr) == 1.0 / 3.0);
  std::getline(in, line);
  CHECK(std::strtod(line.c_str(), nullptr) == -1e-300);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("cli: usage and validation exit codes") {
  CHECK(run_cli({}).rc == kExitValidation);
  CHECK(run_cli({"frobnicate"}).rc == kExitValidation);
  CHECK(run_cli({"simulate", "--config", "/nonexistent.toml", "--out", "x"}).rc == kExitValidation);
  const fs::path dir = scratch("usage");
  fs::create_directories(dir);
  write_text_file(dir / "bad.toml", "[noise]\nseed = 1\nwhat = 3\n");
  auto r = run_cli({"simulate", "--config", (dir / "bad.toml").string(), "--out", (dir / "run").string()});
  CHECK(r.rc == kExitValidation);
  CHECK(r.err.find("line 3: unknown key 'what'") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "run"));
  auto v = run_cli({"--version"});
  CHECK(v.rc == kExitOk);
  CHECK(v.out == std::string(kVersion) + "\n");
}

TEST_CASE("cli: constants") {
  const fs::path dir = scratch("constants");
  fs::create_directories(dir);
  write_text_file(dir / "c.toml", small_config());
  auto r = run_cli({"constants", "--config", (dir / "c.toml").string()});
  CHECK(r.rc == kExitOk);
  CHECK(r.out.find("alpha_env = ") != std::string::npos);
  CHECK(r.out.find("c5_env = ") != std::string::npos);
  CHECK(r.out.find("mean-gamma condition: PASS") != std::string::npos);
}

TEST_CASE("cli: simulate is reproducible and self-describing") {
  const fs::path dir = scratch("simulate");
  fs::create_directories(dir);
  write_text_file(dir / "c.toml", small_config());
  const auto a = dir / "a", b = dir / "b", c = dir / "c";
  REQUIRE(run_cli({"simulate", "--config", (dir / "c.toml").string(), "--out", a.string()}).rc == kExitOk);
  REQUIRE(run_cli({"simulate", "--config", (dir / "c.toml").string(), "--out", b.string()}).rc == kExitOk);
  // Re-run from the echoed config.
  REQUIRE(run_cli({"simulate", "--config", (a / "config.toml").string(), "--out", c.string()}).rc == kExitOk);
  auto ma = manifest(a), mb = manifest(b), mc = manifest(c);
  CHECK(ma["files"] == mb["files"]);
  CHECK(ma["files"] == mc["files"]);
  ma.erase("created_utc");
  mb.erase("created_utc");
  CHECK(ma == mb);
  CHECK(ma["status"] == "ok");
  CHECK(ma["seed"] == 21);
  CHECK(ma["summary"]["audit_violations"] == 0);
  CHECK(ma["files"].size() == 2 + 3);  // config, csv, snapshots at steps 0, 5, 10
  CHECK(fs::exists(a / "snapshots" / "step_00000010.bin"));
  CHECK(read_text_file(a / "diagnostics.csv") == read_text_file(b / "diagnostics.csv"));

  auto cfg = parse_config(read_text_file(a / "config.toml"));
  State last = read_snapshot_file(a / "snapshots" / "step_00000010.bin", config_grid(cfg));
  CHECK(last.t == doctest::Approx(0.1));
}

TEST_CASE("cli: blow-up exits 2 and keeps the last good state") {
  const fs::path dir = scratch("blowup");
  fs::create_directories(dir);
  write_text_file(dir / "c.toml",
                  "[grid]\nny = 16\nnz = 12\n[physics]\nnu = 1e-3\nkappa_T = 1e-3\nkappa_S = 1e-3\ng = 100\n"
                  "[noise]\nseed = 1\nburn_in = 0\n[time]\nt1 = 20\ndt = 0.5\n[initial]\namplitude = 1e6\n");
  auto r = run_cli({"simulate", "--config", (dir / "c.toml").string(), "--out", (dir / "run").string()});
  CHECK(r.rc == kExitRuntime);
  CHECK(r.err.find("runtime failure") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "snapshots" / "last_good.bin"));
  auto m = manifest(dir / "run");
  CHECK(m["status"] == "blow-up");
  CHECK(m["summary"]["failed_step"].get<int>() >= 0);
}

TEST_CASE("cli: twin, pullback, ou-check, cocycle-check") {
  const fs::path dir = scratch("experiments");
  fs::create_directories(dir);
  write_text_file(dir / "c.toml",
                  small_config("[experiment]\npullback_times = [0.05, 0.1]\nsamples = 200\nsplits = 3\n"));
  const std::string cfg = (dir / "c.toml").string();

  auto t = run_cli({"twin", "--config", cfg, "--out", (dir / "twin").string(), "--perturb-scale", "1e-4", "--modes",
                    "4"});
  CHECK(t.rc == kExitOk);
  auto echo = parse_config(read_text_file(dir / "twin" / "config.toml"));
  CHECK(echo.functionals == 4);
  CHECK(echo.perturb_scale == 1e-4);
  CHECK(echo.mode == "twin");
  CHECK(read_text_file(dir / "twin" / "determining.csv").rfind("# thc-csv v1 determining\n", 0) == 0);
  CHECK(manifest(dir / "twin")["summary"]["functionals"] == "first 4 eigen-coefficients of A (s = 0.2)");

  auto p = run_cli({"pullback", "--config", cfg, "--out", (dir / "pb").string()});
  CHECK(p.rc == kExitOk);
  CHECK(manifest(dir / "pb")["summary"]["gaps"].size() == 2);

  auto o = run_cli({"ou-check", "--config", cfg, "--out", (dir / "ou").string()});
  CHECK(o.rc == kExitOk);
  CHECK(manifest(dir / "ou")["summary"]["relative_error"].get<double>() < 0.2);

  auto c = run_cli({"cocycle-check", "--config", cfg, "--out", (dir / "cc").string()});
  CHECK(c.rc == kExitOk);
  CHECK(manifest(dir / "cc")["summary"]["pass"] == true);

  CHECK(run_cli({"twin", "--config", cfg, "--out", (dir / "t2").string(), "--modes", "0"}).rc == kExitValidation);
}
