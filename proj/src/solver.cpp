#include "thc/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "thc/error.hpp"
#include "thc/operators.hpp"
#include "thc/parallel.hpp"
#include "thc/spectral.hpp"

namespace thc {

bool State::all_finite() const {
  return q.all_finite() && psi.all_finite() && T.all_finite() && S.all_finite();
}

State State::zero(const Grid& grid) {
  return {0.0,
          ScalarField(grid, BcKind::DirichletZero),
          ScalarField(grid, BcKind::DirichletZero),
          ScalarField(grid, BcKind::NeumannZero),
          ScalarField(grid, BcKind::NeumannZero),
          Variables::Physical};
}

double max_state_difference(const State& a, const State& b) {
  double m = 0.0;
  for (auto [x, y] : {std::pair{&a.q, &b.q}, {&a.psi, &b.psi}, {&a.T, &b.T}, {&a.S, &b.S}}) {
    require_same_grid(*x, *y, "max_state_difference");
    for (std::size_t i = 0; i < x->size(); ++i) m = std::max(m, std::abs((*x)[i] - (*y)[i]));
  }
  return m;
}

std::int64_t steps_in(double duration, double dt) {
  const double r = duration / dt;
  const auto n = static_cast<std::int64_t>(std::llround(r));
  if (!std::isfinite(r) || n < 0 || std::abs(static_cast<double>(n) - r) > 1e-9 * std::max(1.0, std::abs(r))) {
    std::ostringstream os;
    os << "duration " << duration << " is not a non-negative multiple of dt = " << dt;
    throw ValidationError(os.str());
  }
  return n;
}

void validate_setup(const Setup& s) {
  validate_params(s.params, s.grid);
  validate_spectrum(s.spectrum, s.grid);
  const auto& o = s.options;
  if (!(s.dt > 0.0) || !std::isfinite(s.dt)) throw ValidationError("dt must be finite and > 0");
  if (o.substeps < 1) throw ValidationError("substeps must be >= 1");
  if (std::abs(s.path.dt * o.substeps - s.dt) > 1e-12 * s.dt) {
    std::ostringstream os;
    os << "noise path step " << s.path.dt << " times substeps " << o.substeps << " does not equal dt " << s.dt;
    throw ValidationError(os.str());
  }
  if (!(o.poisson_tol > 0.0)) throw ValidationError("poisson_tol must be > 0");
  if (!(o.burn_in >= 0.0) || !std::isfinite(o.burn_in)) throw ValidationError("burn_in must be finite and >= 0");
}

struct Integrator::Cache {
  std::shared_ptr<const SpectralOps> ops;
  double robin = 0.0;  // 2 kappa_T lambda / dz
  Eigen::PartialPivLU<Eigen::MatrixXd> capacitance;
  ScalarField salt_source;
};

Integrator::Integrator(Setup setup) : setup_(std::move(setup)) {
  validate_setup(setup_);
  const Grid& g = setup_.grid;
  const auto& p = setup_.params;
  auto c = std::make_shared<Cache>();
  c->ops = SpectralOps::for_grid(g);
  c->robin = 2.0 * p.kappa_T * p.lambda / g.dz;

  // Woodbury capacitance for the implicit Robin term on the surface row:
  // (A + U C U^T)^{-1} with A = I - dt kappa_T Lap_N, C = dt*robin*I.
  if (c->robin > 0.0) {
    const int ny = g.ny, top = g.nz - 1;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(ny, ny) / (setup_.dt * c->robin);
    ScalarField e(g, BcKind::NeumannZero);
    for (int j = 0; j < ny; ++j) {
      e(j, top) = 1.0;
      const ScalarField col = c->ops->solve_neumann(e, 1.0, setup_.dt * p.kappa_T);
      for (int i = 0; i < ny; ++i) M(i, j) += col(i, top);
      e(j, top) = 0.0;
    }
    c->capacitance.compute(M);
  }
  ScalarField zero(g, BcKind::NeumannZero);
  c->salt_source = surface_flux_sources(zero, zero, p).S;
  cache_ = std::move(c);
}

ScalarField Integrator::solve_temperature(const ScalarField& rhs) const {
  const auto& c = *cache_;
  const double scale = setup_.dt * setup_.params.kappa_T;
  ScalarField y = c.ops->solve_neumann(rhs, 1.0, scale);
  if (c.robin == 0.0) return y;
  const Grid& g = setup_.grid;
  const int top = g.nz - 1;
  Eigen::VectorXd yt(g.ny);
  for (int j = 0; j < g.ny; ++j) yt(j) = y(j, top);
  const Eigen::VectorXd s = c.capacitance.solve(yt);
  ScalarField us(g, BcKind::NeumannZero);
  for (int j = 0; j < g.ny; ++j) us(j, top) = s(j);
  y -= c.ops->solve_neumann(us, 1.0, scale);
  return y;
}

void Integrator::finish(State& s, std::int64_t step) const {
  if (!s.all_finite()) {
    std::ostringstream os;
    os << "non-finite state values after step " << step << " (t = " << s.t << ")";
    throw BlowUpError(step, os.str());
  }
}

namespace {

// Right-hand sides of the T and S equations shared by both systems.
void tracer_rhs(const State& u, const ScalarField& psi, const Setup& s, const ScalarField& salt_source,
                double robin, ScalarField& rT, ScalarField& rS) {
  const double dt = s.dt;
  rT = u.T;
  rS = u.S;
  if (s.options.advection) {
    rT.axpy(-dt, arakawa_jacobian(psi, u.T));
    rS.axpy(-dt, arakawa_jacobian(psi, u.S));
  }
  const Grid& g = s.grid;
  for (int j = 0; j < g.ny; ++j) rT(j, g.nz - 1) += dt * robin * s.params.theta_profile[j];
  rS.axpy(dt, salt_source);
}

}  // namespace

State Integrator::step_spde(const State& u, std::int64_t step) const {
  if (u.vars != Variables::Physical) throw ValidationError("step_spde needs a physical state");
  const auto& s = setup_;
  const auto& p = s.params;
  const double dt = s.dt;
  const int M = s.options.substeps;

  ScalarField rq = u.q;
  if (s.options.advection) rq.axpy(-dt, arakawa_jacobian(u.psi, u.q));
  rq.axpy(dt, buoyancy_torque(u.T, u.S, p));
  if (!s.spectrum.is_zero()) rq += wiener_increment_sum(s.path, step * M, M, s.spectrum, s.grid);
  rq.set_bc(BcKind::DirichletZero);
  rq.enforce_bc();

  ScalarField rT, rS;
  tracer_rhs(u, u.psi, s, cache_->salt_source, cache_->robin, rT, rS);

  State n;
  n.t = u.t + dt;
  n.vars = Variables::Physical;
  n.q = cache_->ops->solve_dirichlet(rq, 1.0, dt * p.nu);
  n.T = solve_temperature(rT);
  n.S = cache_->ops->solve_neumann(rS, 1.0, dt * p.kappa_S);
  finish(n, step);
  n.psi = poisson_solve_dirichlet(n.q, s.options.poisson_tol);
  return n;
}

State Integrator::step_random_ode(const State& v, const OUState& eta_n, const OUState& eta_next) const {
  if (v.vars != Variables::Transformed) throw ValidationError("step_random_ode needs a transformed state");
  const auto& s = setup_;
  const auto& p = s.params;
  const Grid& g = s.grid;
  const double dt = s.dt;
  const ScalarField& eta = eta_n.eta;

  const ScalarField psi_eta = poisson_solve_dirichlet(eta, s.options.poisson_tol);
  ScalarField rq = v.q;
  if (s.options.advection) {
    ScalarField J = arakawa_jacobian(v.psi, v.q);
    if (s.options.coupling == Coupling::Consistent) {
      J += arakawa_jacobian(v.psi, eta);
      J += arakawa_jacobian(psi_eta, v.q);
      J += arakawa_jacobian(psi_eta, eta);
    } else {
      const ScalarField lap_eta = laplacian(eta);
      J += arakawa_jacobian(eta, v.q);
      J += arakawa_jacobian(v.psi, lap_eta);
      J += arakawa_jacobian(eta, lap_eta);
    }
    rq.axpy(-dt, J);
  }
  rq.axpy(dt, buoyancy_torque(v.T, v.S, p));
  if (p.k != 0.0) rq.axpy(-dt * p.nu * p.k, laplacian(eta));

  // Boundary values of q~ at the new level are -eta_next; move them to the
  // right-hand side of the interior Helmholtz problem.
  const ScalarField& en = eta_next.eta;
  const double cy = dt * p.nu / (g.dy * g.dy), cz = dt * p.nu / (g.dz * g.dz);
  for (int k = 1; k < g.nz - 1; ++k) {
    rq(1, k) -= cy * en(0, k);
    rq(g.ny - 2, k) -= cy * en(g.ny - 1, k);
  }
  for (int j = 1; j < g.ny - 1; ++j) {
    rq(j, 1) -= cz * en(j, 0);
    rq(j, g.nz - 2) -= cz * en(j, g.nz - 1);
  }
  rq.set_bc(BcKind::DirichletZero);
  rq.enforce_bc();

  ScalarField psi = v.psi;
  psi += psi_eta;
  ScalarField rT, rS;
  tracer_rhs(v, psi, s, cache_->salt_source, cache_->robin, rT, rS);

  State n;
  n.t = v.t + dt;
  n.vars = Variables::Transformed;
  n.q = cache_->ops->solve_dirichlet(rq, 1.0, dt * p.nu);
  n.psi = poisson_solve_dirichlet(n.q, s.options.poisson_tol);
  n.q.set_bc(BcKind::NeumannZero);
  for (auto i : g.boundary_indices()) n.q[i] = -en[i];
  n.T = solve_temperature(rT);
  n.S = cache_->ops->solve_neumann(rS, 1.0, dt * p.kappa_S);
  finish(n, -1);
  return n;
}

OUState Integrator::advance_ou(const OUState& eta, std::int64_t step) const {
  const auto& s = setup_;
  const int M = s.options.substeps;
  if (s.options.ou_scheme == OUScheme::Exact)
    return ou_exact_advance(eta, s.params, s.spectrum, s.path, step * M, M);
  return ou_scheme_step(eta, s.dt, s.params, s.spectrum, s.path, step * M, M);
}

OUState Integrator::initial_ou(std::int64_t step) const {
  const auto& s = setup_;
  const auto burn = static_cast<std::int64_t>(std::llround(s.options.burn_in / s.path.dt));
  const std::int64_t anchor = step * s.options.substeps - burn;
  OUState eta = ou_stationary_sample(s.spectrum, s.params, s.grid, s.path.seed, s.path.origin_step + anchor);
  if (burn > 0) eta = ou_exact_advance(eta, s.params, s.spectrum, s.path, anchor, static_cast<int>(burn));
  return eta;
}

State Integrator::to_transformed(const State& u, const OUState& eta) const {
  if (u.vars != Variables::Physical) throw ValidationError("to_transformed needs a physical state");
  State v = u;
  v.vars = Variables::Transformed;
  v.q -= eta.eta;
  v.q.set_bc(BcKind::NeumannZero);
  v.psi = poisson_solve_dirichlet(v.q, setup_.options.poisson_tol);
  return v;
}

State Integrator::to_physical(const State& v, const OUState& eta) const {
  if (v.vars != Variables::Transformed) throw ValidationError("to_physical needs a transformed state");
  State u = v;
  u.vars = Variables::Physical;
  u.q += eta.eta;
  u.q.set_bc(BcKind::DirichletZero);
  u.q.enforce_bc();
  u.psi = poisson_solve_dirichlet(u.q, setup_.options.poisson_tol);
  return u;
}

State step_spde(const State& u, const Setup& setup, std::int64_t step) {
  return Integrator(setup).step_spde(u, step);
}

State step_random_ode(const State& v, const OUState& eta_n, const OUState& eta_next, const Setup& setup) {
  return Integrator(setup).step_random_ode(v, eta_n, eta_next);
}

State make_initial_state(const Grid& grid, bool random, double amplitude, std::uint64_t seed, Stream stream,
                         double poisson_tol) {
  State s = State::zero(grid);
  if (!random || amplitude == 0.0) return s;
  const auto ops = SpectralOps::for_grid(grid);
  constexpr int kModes = 6;
  auto scaled = [&](ScalarField f) {
    const double m = f.max_abs();
    if (m > 0.0) f *= amplitude / m;
    return f;
  };
  std::vector<double> sq(ops->dirichlet_mode_count(), 0.0);
  for (int n = 1; n <= std::min(kModes, grid.nz - 2); ++n)
    for (int m = 1; m <= std::min(kModes, grid.ny - 2); ++m) {
      const auto i = static_cast<std::size_t>(n - 1) * (grid.ny - 2) + (m - 1);
      sq[i] = keyed_normal(seed, 0, static_cast<std::uint32_t>(i), stream) / (m * m + n * n);
    }
  s.q = scaled(ops->sine_synthesis(sq));
  for (int field = 1; field <= 2; ++field) {
    std::vector<double> c(grid.size(), 0.0);
    for (int n = 0; n < std::min(kModes, grid.nz); ++n)
      for (int m = 0; m < std::min(kModes, grid.ny); ++m) {
        if (field == 2 && m == 0 && n == 0) continue;  // zero-mean salinity
        const auto i = grid.index(m, n);
        c[i] = keyed_normal(seed, field, static_cast<std::uint32_t>(i), stream) / (1 + m * m + n * n);
      }
    (field == 1 ? s.T : s.S) = scaled(ops->cosine_synthesis(c));
  }
  s.psi = poisson_solve_dirichlet(s.q, poisson_tol);
  return s;
}

Propagator::Propagator(std::shared_ptr<const Integrator> integ, System system, const State& u0,
                       std::int64_t start_step, std::optional<OUState> eta0)
    : integ_(std::move(integ)), system_(system), step_(start_step) {
  eta_ = eta0 ? std::move(eta0) : integ_->initial_ou(start_step);
  if (u0.vars == Variables::Physical && system_ == System::RandomOde)
    state_ = integ_->to_transformed(u0, *eta_);
  else if (u0.vars == Variables::Transformed && system_ == System::Spde)
    state_ = integ_->to_physical(u0, *eta_);
  else
    state_ = u0;
}

void Propagator::advance() {
  OUState next = integ_->advance_ou(*eta_, step_);
  try {
    if (system_ == System::Spde)
      state_ = integ_->step_spde(state_, step_);
    else
      state_ = integ_->step_random_ode(state_, *eta_, next);
  } catch (const BlowUpError& e) {
    throw BlowUpError(step_, e.what());
  }
  eta_ = std::move(next);
  ++step_;
}

State Propagator::physical() const {
  return system_ == System::RandomOde ? integ_->to_physical(state_, *eta_) : state_;
}

State run(const Setup& setup, System system, const State& u0, double t0, double t1, const StepObserver& observe) {
  const std::int64_t n0 = static_cast<std::int64_t>(std::llround(t0 / setup.dt));
  const std::int64_t n = steps_in(t1 - t0, setup.dt);
  auto integ = std::make_shared<const Integrator>(setup);
  State start = u0;
  start.t = t0;
  Propagator p(integ, system, start, n0);
  if (observe) observe(p);
  for (std::int64_t i = 0; i < n; ++i) {
    p.advance();
    if (observe) observe(p);
  }
  return p.physical();
}

void twin_run(const Setup& setup, System system, const State& u0, const State& perturbation, std::int64_t steps,
              const TwinObserver& observe) {
  auto integ = std::make_shared<const Integrator>(setup);
  State u1 = u0;
  u1.q += perturbation.q;
  u1.q.enforce_bc();
  u1.T += perturbation.T;
  u1.S += perturbation.S;
  u1.psi = poisson_solve_dirichlet(u1.q, setup.options.poisson_tol);
  // Both twins share eta so the noise gap is zero by construction.
  const OUState eta0 = integ->initial_ou(0);
  std::vector<Propagator> twins{Propagator(integ, system, u0, 0, eta0), Propagator(integ, system, u1, 0, eta0)};
  if (observe) observe(twins[0], twins[1]);
  constexpr std::int64_t kChunk = 32;
  for (std::int64_t done = 0; done < steps;) {
    const std::int64_t len = std::min(kChunk, steps - done);
    std::vector<std::vector<Propagator>> hist(2);
    parallel_for(2, [&](std::size_t i) {
      for (std::int64_t c = 0; c < len; ++c) {
        twins[i].advance();
        if (observe) hist[i].push_back(twins[i]);
      }
    });
    if (observe)
      for (std::int64_t c = 0; c < len; ++c) observe(hist[0][c], hist[1][c]);
    done += len;
  }
}

std::vector<State> pullback_run(const Setup& setup, const State& u0, const std::vector<double>& t_back) {
  for (std::size_t i = 1; i < t_back.size(); ++i)
    if (t_back[i] < t_back[i - 1]) throw ValidationError("pullback durations must be sorted ascending");
  std::vector<std::int64_t> n(t_back.size());
  for (std::size_t i = 0; i < t_back.size(); ++i) n[i] = steps_in(t_back[i], setup.dt);
  std::vector<State> out(t_back.size());
  parallel_for(t_back.size(), [&](std::size_t i) {
    Setup s = setup;
    s.path = shift_path(setup.path, -n[i] * setup.options.substeps);
    auto integ = std::make_shared<const Integrator>(s);
    State start = u0;
    start.t = -static_cast<double>(n[i]) * setup.dt;
    Propagator p(integ, System::Spde, start, 0);
    for (std::int64_t k = 0; k < n[i]; ++k) p.advance();
    out[i] = p.physical();
    out[i].t = 0.0;
  });
  return out;
}

CocycleResult cocycle_check(const Setup& setup, System system, const State& u0, double s, double t,
                            std::int64_t mis_shift) {
  const std::int64_t ns = steps_in(s, setup.dt), nt = steps_in(t, setup.dt);
  auto integ = std::make_shared<const Integrator>(setup);
  const OUState eta0 = integ->initial_ou(0);
  Propagator whole(integ, system, u0, 0, eta0);
  for (std::int64_t i = 0; i < ns + nt; ++i) whole.advance();

  Propagator first(integ, system, u0, 0, eta0);
  for (std::int64_t i = 0; i < ns; ++i) first.advance();
  Setup shifted = setup;
  shifted.path = shift_path(setup.path, ns * setup.options.substeps + mis_shift);
  auto integ2 = std::make_shared<const Integrator>(shifted);
  Propagator second(integ2, system, first.state(), 0, first.eta());
  for (std::int64_t i = 0; i < nt; ++i) second.advance();

  CocycleResult r{0.0, whole.state(), second.state()};
  r.max_difference = max_state_difference(r.one_piece, r.composed);
  if (whole.eta()->modal != second.eta()->modal) {
    double d = 0.0;
    for (std::size_t i = 0; i < whole.eta()->modal.size(); ++i)
      d = std::max(d, std::abs(whole.eta()->modal[i] - second.eta()->modal[i]));
    r.max_difference = std::max(r.max_difference, d);
  }
  return r;
}

}  // namespace thc
