#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "thc/field.hpp"
#include "thc/noise.hpp"
#include "thc/params.hpp"

namespace thc {

/// Which variables a State holds. Physical: u = (q, T, S) with q = lap psi.
/// Transformed: v = u - Z = (q - eta, T, S); q then carries -eta on the
/// boundary and psi holds the Dirichlet inverse of its interior values.
enum class Variables { Physical, Transformed };

struct State {
  double t = 0.0;
  ScalarField q, psi, T, S;
  Variables vars = Variables::Physical;

  const Grid& grid() const { return T.grid(); }
  bool all_finite() const;
  static State zero(const Grid& grid);
};

/// Largest node-wise absolute difference over q, psi, T, S.
double max_state_difference(const State& a, const State& b);

/// Coupling terms of the transformed vorticity equation.
/// Consistent: expansion of J(psi, q) with psi = psi~ + lap_D^{-1} eta and
/// q = q~ + eta, so that u = v + Z holds for the discrete schemes.
/// AsPublished: J(eta, q~) + J(psi~, lap eta) + J(eta, lap eta), which treats
/// eta as a stream-function perturbation; kept for comparison only.
enum class Coupling { Consistent, AsPublished };

/// How the OU field is advanced alongside the transformed system.
/// Exact: per-mode exact transition with the fine increments.
/// Scheme: the implicit-Euler recursion matching the vorticity step.
enum class OUScheme { Exact, Scheme };

enum class System { Spde, RandomOde };

struct StepOptions {
  bool advection = true;
  double poisson_tol = 1e-10;
  int substeps = 1;  // fine noise increments per time step
  Coupling coupling = Coupling::Consistent;
  OUScheme ou_scheme = OUScheme::Exact;
  double burn_in = 10.0;  // OU spin-up before a run start, in time units
};

/// Everything a trajectory depends on besides its initial state.
struct Setup {
  Grid grid;
  PhysParams params;
  CovarianceSpectrum spectrum;
  NoisePath path;  // path.dt is the fine step: dt / substeps
  double dt = 2e-3;
  StepOptions options;
};

/// Throws ValidationError when the pieces of a setup disagree.
void validate_setup(const Setup& s);

/// Semi-implicit Euler-Maruyama stepper. Diffusion and the Robin heat flux
/// are implicit; advection, buoyancy, the freshwater flux and the noise are
/// explicit. Cached factorizations make repeated steps cheap.
class Integrator {
 public:
  explicit Integrator(Setup setup);
  const Setup& setup() const { return setup_; }

  /// u_{n+1} from u_n using fine increments step*substeps ... +substeps-1.
  State step_spde(const State& u, std::int64_t step) const;
  /// v_{n+1} from v_n given eta at both time levels.
  State step_random_ode(const State& v, const OUState& eta_n, const OUState& eta_next) const;
  /// Advances eta over time step `step` with the configured OU scheme.
  OUState advance_ou(const OUState& eta, std::int64_t step) const;
  /// Stationary-in-law eta at the start of coarse step `step`: a stationary
  /// draw burn_in earlier, carried forward along the path.
  OUState initial_ou(std::int64_t step) const;

  State to_transformed(const State& u, const OUState& eta) const;
  State to_physical(const State& v, const OUState& eta) const;

 private:
  ScalarField solve_temperature(const ScalarField& rhs) const;
  void finish(State& s, std::int64_t step) const;

  Setup setup_;
  struct Cache;
  std::shared_ptr<const Cache> cache_;
};

/// One-step entry points; each builds a throwaway Integrator.
State step_spde(const State& u, const Setup& setup, std::int64_t step);
State step_random_ode(const State& v, const OUState& eta_n, const OUState& eta_next, const Setup& setup);

/// Initial states. Random fields are smooth, keyed by (seed, stream), with
/// node amplitude of order `amplitude`; S always has zero mean.
State make_initial_state(const Grid& grid, bool random, double amplitude, std::uint64_t seed,
                         Stream stream = Stream::Initial, double poisson_tol = 1e-10);

/// A trajectory of either system with its OU companion.
class Propagator {
 public:
  /// u0 is physical; for RandomOde it is converted with eta at `start_step`.
  Propagator(std::shared_ptr<const Integrator> integ, System system, const State& u0, std::int64_t start_step,
             std::optional<OUState> eta0 = std::nullopt);
  void advance();
  std::int64_t step() const { return step_; }
  const State& state() const { return state_; }
  const std::optional<OUState>& eta() const { return eta_; }
  State physical() const;
  System system() const { return system_; }

 private:
  std::shared_ptr<const Integrator> integ_;
  System system_;
  State state_;
  std::optional<OUState> eta_;
  std::int64_t step_;
};

/// Called after every step (and once for the initial state with step = start).
using StepObserver = std::function<void(const Propagator&)>;

/// Integrates from t0 to t1 (both multiples of dt). Global step = round(t/dt).
State run(const Setup& setup, System system, const State& u0, double t0, double t1,
          const StepObserver& observe = {});

/// Twins from u0 and u0 + perturbation on one noise path, stepped in
/// parallel; `observe` sees both after each step, in step order.
using TwinObserver = std::function<void(const Propagator&, const Propagator&)>;
void twin_run(const Setup& setup, System system, const State& u0, const State& perturbation, std::int64_t steps,
              const TwinObserver& observe);

/// For each duration t_back, integrates u0 from -t_back to 0 on
/// shift_path(path, -t_back/dt * substeps). Returns physical end states.
std::vector<State> pullback_run(const Setup& setup, const State& u0, const std::vector<double>& t_back);

/// phi(s+t, w, u) in one piece versus phi(t, theta_s w, phi(s, w, u)).
/// mis_shift offsets the second leg's path by that many fine increments.
struct CocycleResult {
  double max_difference = 0.0;
  State one_piece, composed;
};
CocycleResult cocycle_check(const Setup& setup, System system, const State& u0, double s, double t,
                            std::int64_t mis_shift = 0);

/// Number of steps of length dt in a duration, rejecting non-multiples.
std::int64_t steps_in(double duration, double dt);

}  // namespace thc
