#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thc/error.hpp"
#include "thc/solver.hpp"

namespace thc {

/// One problem found while reading a config; line 0 means "not tied to a line".
struct ConfigIssue {
  int line = 0;
  std::string message;
};

/// Carries every issue found, not only the first.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Surface profile: "cosine" preset scaled by amplitude, or an explicit node table.
struct ProfileSpec {
  std::string kind = "cosine";
  double amplitude = 0.0;
  std::vector<double> table;
  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

struct ModeEntry {
  int m = 0, n = 0;
  double q = 0.0;
  friend bool operator==(const ModeEntry&, const ModeEntry&) = default;
};

/// Everything a run needs. Defaults are the values documented in the README.
struct RunConfig {
  // [grid]
  int ny = 64, nz = 32;
  double l = 1.0, d = 1.0;
  // [physics]
  double nu = 1.0, kappa_T = 1.0, kappa_S = 1.0, g = 1.0, alpha_T = 1.0, alpha_S = 1.0, lambda = 2.0, k = 0.0;
  // [forcing]
  ProfileSpec theta{"cosine", 1.0, {}};
  ProfileSpec F{"cosine", 0.1, {}};
  // [noise]
  std::string spectrum = "power";  // power | table
  double s_q = 2.0, trace = 1.0;
  int cutoff = 0;
  std::vector<ModeEntry> modes;
  std::uint64_t seed = 0;  // required
  int substeps = 1;
  double burn_in = 10.0;
  // [time]
  double t0 = 0.0, t1 = 0.0;  // t1 required
  double dt = 2e-3;
  int snapshot_every = 0;  // steps between snapshots; 0 keeps only the final one
  // [initial]
  std::string initial = "random";  // random | zero
  double initial_amplitude = 1.0;
  std::uint64_t initial_seed = 1;
  // [experiment]
  std::string mode = "simulate";  // simulate | twin | pullback | ou-check | constants | cocycle-check
  std::string system = "spde";    // spde | random-ode
  std::string coupling = "consistent";  // consistent | as-published
  std::string ou_scheme = "exact";      // exact | scheme
  double epsilon = 0.0;                 // 0 selects lambda1 nu / 4
  double poisson_tol = 1e-10;
  double perturb_scale = 1e-3;
  std::uint64_t perturb_seed = 2;
  int functionals = 16;
  double smoothness = 0.2;
  double window = 1.0;
  double decay_ratio = 1e-6;
  std::vector<double> pullback_times{5.0, 10.0, 20.0};
  std::uint64_t pullback_seed = 3;
  int samples = 10000;
  int splits = 10;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Line-oriented "key = value" text with [section] headers and # comments.
/// Values are numbers, bare or double-quoted strings, or [a, b, ...] lists.
/// Throws ConfigError listing every syntax, key and constraint problem.
RunConfig parse_config(const std::string& text);
/// Canonical text; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& c);
/// Re-checks cross-field constraints; empty when valid.
std::vector<std::string> check_config(const RunConfig& c);

Grid config_grid(const RunConfig& c);
PhysParams config_params(const RunConfig& c);
Setup config_setup(const RunConfig& c);
System config_system(const RunConfig& c);
State config_initial_state(const RunConfig& c);

}  // namespace thc
