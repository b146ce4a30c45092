#include "thc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "thc/diagnostics.hpp"
#include "thc/params.hpp"

namespace thc {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string s = "invalid configuration:";
  for (const auto& i : issues) {
    s += "\n  ";
    if (i.line > 0) s += "line " + std::to_string(i.line) + ": ";
    s += i.message;
  }
  return s;
}

struct Token {
  std::string text;
  bool quoted = false;
};

struct Raw {
  int line = 0;
  bool is_list = false;
  Token scalar;
  std::vector<Token> items;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits off a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& s) {
  bool in_q = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_q) {
      ++i;
      continue;
    }
    if (s[i] == '"') in_q = !in_q;
    if (s[i] == '#' && !in_q) return s.substr(0, i);
  }
  return s;
}

std::optional<Token> parse_token(const std::string& raw, std::string& err) {
  const std::string s = trim(raw);
  if (s.empty()) {
    err = "empty value";
    return std::nullopt;
  }
  if (s.front() != '"') {
    if (s.find_first_of("\"[]=") != std::string::npos || s.find_first_of(" \t") != std::string::npos) {
      err = "malformed value '" + s + "'";
      return std::nullopt;
    }
    return Token{s, false};
  }
  std::string out;
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out += s[++i];
    } else if (s[i] == '"') {
      break;
    } else {
      out += s[i];
    }
  }
  if (i != s.size() - 1) {
    err = "unterminated or trailing characters in string " + s;
    return std::nullopt;
  }
  return Token{out, true};
}

std::optional<Raw> parse_value(const std::string& text, int line, std::string& err) {
  Raw r;
  r.line = line;
  const std::string s = trim(text);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') {
      err = "list is missing its closing ']'";
      return std::nullopt;
    }
    r.is_list = true;
    const std::string body = trim(s.substr(1, s.size() - 2));
    if (body.empty()) return r;
    std::string cur;
    bool in_q = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i == body.size() || (body[i] == ',' && !in_q)) {
        auto t = parse_token(cur, err);
        if (!t) return std::nullopt;
        r.items.push_back(*t);
        cur.clear();
        continue;
      }
      if (body[i] == '"') in_q = !in_q;
      cur += body[i];
    }
    return r;
  }
  auto t = parse_token(s, err);
  if (!t) return std::nullopt;
  r.scalar = *t;
  return r;
}

std::optional<double> to_double(const Token& t) {
  if (t.quoted) return std::nullopt;
  double v = 0.0;
  const char* b = t.text.data();
  const char* e = b + t.text.size();
  if (!t.text.empty() && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

template <class I>
std::optional<I> to_integer(const Token& t) {
  if (t.quoted) return std::nullopt;
  I v{};
  const char* b = t.text.data();
  const char* e = b + t.text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

using Setter = std::function<std::optional<std::string>(RunConfig&, const Raw&)>;
using Renderer = std::function<std::string(const RunConfig&)>;

struct FieldDef {
  std::string section, key;
  Setter set;
  Renderer render;
  bool required = false;
};

std::optional<std::string> expect_scalar(const Raw& r) {
  if (r.is_list) return "expected a single value, got a list";
  return std::nullopt;
}

FieldDef number(std::string sec, std::string key, double RunConfig::*m, bool required = false) {
  return {sec, key,
          [m](RunConfig& c, const Raw& r) -> std::optional<std::string> {
            if (auto e = expect_scalar(r)) return e;
            auto v = to_double(r.scalar);
            if (!v) return "expected a number, got '" + r.scalar.text + "'";
            c.*m = *v;
            return std::nullopt;
          },
          [m](const RunConfig& c) { return fmt(c.*m); }, required};
}

template <class I>
FieldDef integer(std::string sec, std::string key, I RunConfig::*m, bool required = false) {
  return {sec, key,
          [m](RunConfig& c, const Raw& r) -> std::optional<std::string> {
            if (auto e = expect_scalar(r)) return e;
            auto v = to_integer<I>(r.scalar);
            if (!v) return "expected an integer, got '" + r.scalar.text + "'";
            c.*m = *v;
            return std::nullopt;
          },
          [m](const RunConfig& c) { return std::to_string(c.*m); }, required};
}

FieldDef choice(std::string sec, std::string key, std::string RunConfig::*m, std::vector<std::string> allowed) {
  return {sec, key,
          [m, allowed](RunConfig& c, const Raw& r) -> std::optional<std::string> {
            if (auto e = expect_scalar(r)) return e;
            for (const auto& a : allowed)
              if (a == r.scalar.text) {
                c.*m = a;
                return std::nullopt;
              }
            std::string msg = "'" + r.scalar.text + "' is not one of:";
            for (const auto& a : allowed) msg += " " + a;
            return msg;
          },
          [m](const RunConfig& c) { return quote(c.*m); }};
}

std::optional<std::string> read_numbers(const Raw& r, std::vector<double>& out) {
  if (!r.is_list) return "expected a list like [1, 2, 3]";
  std::vector<double> v;
  for (const auto& t : r.items) {
    auto x = to_double(t);
    if (!x) return "list entry '" + t.text + "' is not a number";
    v.push_back(*x);
  }
  out = std::move(v);
  return std::nullopt;
}

std::string render_numbers(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

FieldDef numbers(std::string sec, std::string key, std::vector<double> RunConfig::*m) {
  return {sec, key, [m](RunConfig& c, const Raw& r) { return read_numbers(r, c.*m); },
          [m](const RunConfig& c) { return render_numbers(c.*m); }};
}

FieldDef profile_kind(std::string key, ProfileSpec RunConfig::*m) {
  return {"forcing", key,
          [m](RunConfig& c, const Raw& r) -> std::optional<std::string> {
            if (auto e = expect_scalar(r)) return e;
            if (r.scalar.text != "cosine" && r.scalar.text != "table")
              return "'" + r.scalar.text + "' is not one of: cosine table";
            (c.*m).kind = r.scalar.text;
            return std::nullopt;
          },
          [m](const RunConfig& c) { return quote((c.*m).kind); }};
}

FieldDef profile_amp(std::string key, ProfileSpec RunConfig::*m) {
  return {"forcing", key,
          [m](RunConfig& c, const Raw& r) -> std::optional<std::string> {
            if (auto e = expect_scalar(r)) return e;
            auto v = to_double(r.scalar);
            if (!v) return "expected a number, got '" + r.scalar.text + "'";
            (c.*m).amplitude = *v;
            return std::nullopt;
          },
          [m](const RunConfig& c) { return fmt((c.*m).amplitude); }};
}

FieldDef profile_table(std::string key, ProfileSpec RunConfig::*m) {
  return {"forcing", key, [m](RunConfig& c, const Raw& r) { return read_numbers(r, (c.*m).table); },
          [m](const RunConfig& c) { return render_numbers((c.*m).table); }};
}

FieldDef mode_table() {
  return {"noise", "modes",
          [](RunConfig& c, const Raw& r) -> std::optional<std::string> {
            if (!r.is_list) return "expected a list of \"m:n:q\" entries";
            std::vector<ModeEntry> out;
            for (const auto& t : r.items) {
              std::istringstream is(t.text);
              ModeEntry e;
              char c1 = 0, c2 = 0;
              std::string rest;
              if (!(is >> e.m >> c1 >> e.n >> c2 >> e.q) || c1 != ':' || c2 != ':' || (is >> rest))
                return "mode entry '" + t.text + "' is not of the form m:n:q";
              out.push_back(e);
            }
            c.modes = std::move(out);
            return std::nullopt;
          },
          [](const RunConfig& c) {
            std::string s = "[";
            for (std::size_t i = 0; i < c.modes.size(); ++i)
              s += (i ? ", " : "") +
                   quote(std::to_string(c.modes[i].m) + ":" + std::to_string(c.modes[i].n) + ":" + fmt(c.modes[i].q));
            return s + "]";
          }};
}

const std::vector<FieldDef>& fields() {
  static const std::vector<FieldDef> defs = [] {
    using C = RunConfig;
    std::vector<FieldDef> f{
        integer("grid", "ny", &C::ny),
        integer("grid", "nz", &C::nz),
        number("grid", "l", &C::l),
        number("grid", "d", &C::d),
        number("physics", "nu", &C::nu),
        number("physics", "kappa_T", &C::kappa_T),
        number("physics", "kappa_S", &C::kappa_S),
        number("physics", "g", &C::g),
        number("physics", "alpha_T", &C::alpha_T),
        number("physics", "alpha_S", &C::alpha_S),
        number("physics", "lambda", &C::lambda),
        number("physics", "k", &C::k),
        profile_kind("theta", &C::theta),
        profile_amp("theta_amplitude", &C::theta),
        profile_table("theta_table", &C::theta),
        profile_kind("F", &C::F),
        profile_amp("F_amplitude", &C::F),
        profile_table("F_table", &C::F),
        choice("noise", "spectrum", &C::spectrum, {"power", "table"}),
        number("noise", "s_q", &C::s_q),
        number("noise", "trace", &C::trace),
        integer("noise", "cutoff", &C::cutoff),
        mode_table(),
        integer("noise", "seed", &C::seed, true),
        integer("noise", "substeps", &C::substeps),
        number("noise", "burn_in", &C::burn_in),
        number("time", "t0", &C::t0),
        number("time", "t1", &C::t1, true),
        number("time", "dt", &C::dt),
        integer("time", "snapshot_every", &C::snapshot_every),
        choice("initial", "kind", &C::initial, {"random", "zero"}),
        number("initial", "amplitude", &C::initial_amplitude),
        integer("initial", "seed", &C::initial_seed),
        choice("experiment", "mode", &C::mode,
               {"simulate", "twin", "pullback", "ou-check", "constants", "cocycle-check"}),
        choice("experiment", "system", &C::system, {"spde", "random-ode"}),
        choice("experiment", "coupling", &C::coupling, {"consistent", "as-published"}),
        choice("experiment", "ou_scheme", &C::ou_scheme, {"exact", "scheme"}),
        number("experiment", "epsilon", &C::epsilon),
        number("experiment", "poisson_tol", &C::poisson_tol),
        number("experiment", "perturb_scale", &C::perturb_scale),
        integer("experiment", "perturb_seed", &C::perturb_seed),
        integer("experiment", "functionals", &C::functionals),
        number("experiment", "smoothness", &C::smoothness),
        number("experiment", "window", &C::window),
        number("experiment", "decay_ratio", &C::decay_ratio),
        numbers("experiment", "pullback_times", &C::pullback_times),
        integer("experiment", "pullback_seed", &C::pullback_seed),
        integer("experiment", "samples", &C::samples),
        integer("experiment", "splits", &C::splits),
    };
    return f;
  }();
  return defs;
}

bool is_multiple(double x, double dt) {
  if (!(dt > 0.0) || !std::isfinite(x)) return false;
  const double r = x / dt;
  return std::abs(r - std::nearbyint(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

// Constraint problems keyed by "section.key" so the parser can attach line numbers.
std::vector<std::pair<std::string, std::string>> constraint_issues(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](std::string key, std::string msg) { out.emplace_back(std::move(key), std::move(msg)); };
  bool grid_ok = true;
  if (c.ny < 4 || c.nz < 4) {
    add(c.ny < 4 ? "grid.ny" : "grid.nz", "grid needs ny >= 4 and nz >= 4");
    grid_ok = false;
  }
  if (!(c.l > 0.0) || !std::isfinite(c.l)) add("grid.l", "l must be finite and > 0"), grid_ok = false;
  if (!(c.d > 0.0) || !std::isfinite(c.d)) add("grid.d", "d must be finite and > 0"), grid_ok = false;

  for (auto [name, p] : {std::pair{std::string("theta"), &c.theta}, std::pair{std::string("F"), &c.F}}) {
    if (p->kind == "table" && grid_ok && p->table.size() != static_cast<std::size_t>(c.ny))
      add("forcing." + name + "_table", name + "_table has " + std::to_string(p->table.size()) +
                                            " values, grid has ny=" + std::to_string(c.ny));
    if (p->kind == "cosine" && !p->table.empty())
      add("forcing." + name + "_table", name + "_table is only used with " + name + " = \"table\"");
    if (!std::isfinite(p->amplitude)) add("forcing." + name + "_amplitude", "amplitude must be finite");
  }

  if (grid_ok) {
    const Grid g = config_grid(c);
    bool profiles_ok = true;
    for (const auto* p : {&c.theta, &c.F})
      if (p->kind == "table" && p->table.size() != static_cast<std::size_t>(c.ny)) profiles_ok = false;
    if (profiles_ok) {
      static const std::vector<std::pair<std::string, std::string>> prefix{
          {"nu ", "physics.nu"},         {"kappa_T", "physics.kappa_T"}, {"kappa_S", "physics.kappa_S"},
          {"lambda", "physics.lambda"},  {"g ", "physics.g"},           {"alpha_T", "physics.alpha_T"},
          {"alpha_S", "physics.alpha_S"}, {"k ", "physics.k"},          {"theta", "forcing.theta"},
          {"F ", "forcing.F"},           {"freshwater", "forcing.F"}};
      for (const auto& msg : check_params(config_params(c), g)) {
        std::string key;
        for (const auto& [pre, k] : prefix)
          if (msg.rfind(pre, 0) == 0) {
            key = k;
            break;
          }
        add(key, msg);
      }
    }
    if (c.spectrum == "power") {
      if (!std::isfinite(c.s_q)) add("noise.s_q", "s_q must be finite");
      if (!(c.trace >= 0.0) || !std::isfinite(c.trace)) add("noise.trace", "trace must be finite and >= 0");
      if (c.cutoff < 0) add("noise.cutoff", "cutoff must be >= 0");
      if (!c.modes.empty()) add("noise.modes", "modes is only used with spectrum = \"table\"");
    } else {
      for (const auto& m : c.modes)
        if (m.m < 0 || m.n < 0 || m.m >= c.ny || m.n >= c.nz)
          add("noise.modes", "mode " + std::to_string(m.m) + ":" + std::to_string(m.n) + " is outside the grid");
      try {
        std::vector<ModeWeight> w;
        bool inside = true;
        for (const auto& m : c.modes) {
          inside = inside && m.m >= 0 && m.n >= 0 && m.m < c.ny && m.n < c.nz;
          w.push_back({m.m, m.n, m.q});
        }
        if (inside) validate_spectrum(table_spectrum(g, w), g);
      } catch (const ValidationError& e) {
        add("noise.modes", e.what());
      }
    }
  }
  if (c.substeps < 1) add("noise.substeps", "substeps must be >= 1");
  if (!(c.burn_in >= 0.0) || !std::isfinite(c.burn_in)) add("noise.burn_in", "burn_in must be finite and >= 0");

  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) {
    add("time.dt", "dt must be finite and > 0");
  } else {
    if (!is_multiple(c.t0, c.dt)) add("time.t0", "t0 must be a multiple of dt");
    if (!is_multiple(c.t1, c.dt)) add("time.t1", "t1 must be a multiple of dt");
    if (!(c.t1 >= c.t0)) add("time.t1", "t1 must not be earlier than t0");
    if (!is_multiple(c.window, c.dt) || !(c.window > 0.0))
      add("experiment.window", "window must be a positive multiple of dt");
    double prev = 0.0;
    for (double t : c.pullback_times) {
      if (!(t >= prev) || !is_multiple(t, c.dt)) {
        add("experiment.pullback_times", "pullback_times must be increasing, nonnegative multiples of dt");
        break;
      }
      prev = t;
    }
  }
  if (c.snapshot_every < 0) add("time.snapshot_every", "snapshot_every must be >= 0");
  if (!(c.initial_amplitude >= 0.0) || !std::isfinite(c.initial_amplitude))
    add("initial.amplitude", "amplitude must be finite and >= 0");

  if (c.mode == "twin" && c.t0 != 0.0) add("time.t0", "twin runs start at t0 = 0");
  if (!(c.poisson_tol > 0.0)) add("experiment.poisson_tol", "poisson_tol must be > 0");
  if (!(c.perturb_scale >= 0.0) || !std::isfinite(c.perturb_scale))
    add("experiment.perturb_scale", "perturb_scale must be finite and >= 0");
  if (c.functionals < 1) add("experiment.functionals", "functionals must be >= 1");
  if (grid_ok) {
    const long total = static_cast<long>(c.ny - 2) * (c.nz - 2) + 2L * c.ny * c.nz - 1;
    if (c.functionals > total)
      add("experiment.functionals", "functionals exceeds the " + std::to_string(total) + " available modes");
  }
  if (!(c.smoothness > 0.0 && c.smoothness < 0.25)) add("experiment.smoothness", "smoothness must lie in (0, 1/4)");
  if (!(c.decay_ratio > 0.0 && c.decay_ratio < 1.0)) add("experiment.decay_ratio", "decay_ratio must lie in (0, 1)");
  if (c.samples < 2) add("experiment.samples", "samples must be >= 2");
  if (c.splits < 1) add("experiment.splits", "splits must be >= 1");
  if (std::isfinite(c.nu) && c.nu > 0.0 && std::isfinite(c.d) && c.d > 0.0) {
    const double cap = std::pow(std::numbers::pi / c.d, 2) * c.nu / 2;
    if (!(c.epsilon >= 0.0 && c.epsilon < cap))
      add("experiment.epsilon", "epsilon must lie in [0, lambda1 nu / 2) = [0, " + fmt(cap) + ")");
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : ValidationError(join_issues(issues)), issues_(std::move(issues)) {}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::vector<ConfigIssue> issues;
  std::map<std::string, int> seen;  // section.key -> line
  std::set<std::string> sections;
  for (const auto& f : fields()) sections.insert(f.section);

  std::istringstream in(text);
  std::string line, section;
  bool section_ok = false;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (s.front() == '[' && eq == std::string::npos) {
      if (s.back() != ']') {
        issues.push_back({no, "malformed section header '" + s + "'"});
        section_ok = false;
        continue;
      }
      section = trim(s.substr(1, s.size() - 2));
      section_ok = sections.count(section) > 0;
      if (!section_ok) issues.push_back({no, "unknown section [" + section + "]"});
      continue;
    }
    if (eq == std::string::npos) {
      issues.push_back({no, "expected 'key = value', got '" + s + "'"});
      continue;
    }
    const std::string key = trim(s.substr(0, eq));
    if (section.empty()) {
      issues.push_back({no, "key '" + key + "' appears before any [section]"});
      continue;
    }
    if (!section_ok) continue;  // already reported
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const FieldDef& f) { return f.section == section && f.key == key; });
    if (it == fields().end()) {
      issues.push_back({no, "unknown key '" + key + "' in [" + section + "]"});
      continue;
    }
    const std::string full = section + "." + key;
    if (auto prev = seen.find(full); prev != seen.end()) {
      issues.push_back({no, "duplicate key " + full + " at lines " + std::to_string(prev->second) + " and " +
                                std::to_string(no)});
      continue;
    }
    seen[full] = no;
    std::string err;
    auto raw = parse_value(s.substr(eq + 1), no, err);
    if (!raw) {
      issues.push_back({no, full + ": " + err});
      continue;
    }
    if (auto e = it->set(c, *raw)) issues.push_back({no, full + ": " + *e});
  }
  for (const auto& f : fields())
    if (f.required && !seen.count(f.section + "." + f.key))
      issues.push_back({0, "missing required key " + f.section + "." + f.key});

  if (issues.empty()) {
    for (auto& [key, msg] : constraint_issues(c)) {
      auto it = seen.find(key);
      issues.push_back({it == seen.end() ? 0 : it->second, (key.empty() ? "" : key + ": ") + msg});
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

std::string render_config(const RunConfig& c) {
  std::string out, section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.render(c) + "\n";
  }
  return out;
}

std::vector<std::string> check_config(const RunConfig& c) {
  std::vector<std::string> out;
  for (auto& [key, msg] : constraint_issues(c)) out.push_back((key.empty() ? "" : key + ": ") + msg);
  return out;
}

Grid config_grid(const RunConfig& c) { return make_grid(c.ny, c.nz, c.l, c.d); }

PhysParams config_params(const RunConfig& c) {
  const Grid g = config_grid(c);
  PhysParams p;
  p.nu = c.nu;
  p.kappa_T = c.kappa_T;
  p.kappa_S = c.kappa_S;
  p.g = c.g;
  p.alpha_T = c.alpha_T;
  p.alpha_S = c.alpha_S;
  p.lambda = c.lambda;
  p.k = c.k;
  p.theta_profile = c.theta.kind == "table" ? c.theta.table : cosine_theta_profile(g, c.theta.amplitude);
  p.F_profile = c.F.kind == "table" ? c.F.table : cosine_freshwater_profile(g, c.F.amplitude);
  return p;
}

Setup config_setup(const RunConfig& c) {
  if (auto errs = check_config(c); !errs.empty()) {
    std::vector<ConfigIssue> issues;
    for (auto& e : errs) issues.push_back({0, e});
    throw ConfigError(std::move(issues));
  }
  Setup s;
  s.grid = config_grid(c);
  s.params = config_params(c);
  if (c.spectrum == "power") {
    s.spectrum = power_law_spectrum(s.grid, c.s_q, c.trace, c.cutoff);
  } else {
    std::vector<ModeWeight> w;
    for (const auto& m : c.modes) w.push_back({m.m, m.n, m.q});
    s.spectrum = table_spectrum(s.grid, w);
  }
  s.dt = c.dt;
  s.path = NoisePath{c.seed, c.dt / c.substeps, 0};
  s.options.substeps = c.substeps;
  s.options.burn_in = c.burn_in;
  s.options.poisson_tol = c.poisson_tol;
  s.options.coupling = c.coupling == "as-published" ? Coupling::AsPublished : Coupling::Consistent;
  s.options.ou_scheme = c.ou_scheme == "scheme" ? OUScheme::Scheme : OUScheme::Exact;
  validate_setup(s);
  return s;
}

System config_system(const RunConfig& c) { return c.system == "random-ode" ? System::RandomOde : System::Spde; }

State config_initial_state(const RunConfig& c) {
  return make_initial_state(config_grid(c), c.initial == "random", c.initial_amplitude, c.initial_seed,
                            Stream::Initial, c.poisson_tol);
}

}  // namespace thc
