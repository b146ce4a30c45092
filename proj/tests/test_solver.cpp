#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "thc/error.hpp"
#include "thc/operators.hpp"
#include "thc/solver.hpp"

using namespace thc;

namespace {

Setup make_setup(int ny, int nz, double dt, double trace, std::uint64_t seed = 1, int substeps = 1) {
  Setup s;
  s.grid = make_grid(ny, nz, 1.0, 1.0);
  s.params.theta_profile = cosine_theta_profile(s.grid, 1.0);
  s.params.F_profile = cosine_freshwater_profile(s.grid, 0.1);
  s.spectrum = power_law_spectrum(s.grid, 2.0, trace);
  s.dt = dt;
  s.path = NoisePath{seed, dt / substeps, 0};
  s.options.substeps = substeps;
  s.options.burn_in = 1.0;
  return s;
}

void unforced(Setup& s) {
  std::fill(s.params.theta_profile.begin(), s.params.theta_profile.end(), 0.0);
  std::fill(s.params.F_profile.begin(), s.params.F_profile.end(), 0.0);
}

double ts_energy(const State& u) { return inner(u.T, u.T) + inner(u.S, u.S); }

double state_gap(const State& a, const State& b) {
  return std::sqrt(inner(a.q - b.q, a.q - b.q) + inner(a.T - b.T, a.T - b.T) + inner(a.S - b.S, a.S - b.S));
}

}  // namespace

TEST_CASE("zero state without noise or forcing stays identically zero") {
  auto s = make_setup(16, 12, 1e-2, 0.0);
  unforced(s);
  Integrator integ(s);
  State u = State::zero(s.grid);
  for (int n = 0; n < 20; ++n) u = integ.step_spde(u, n);
  CHECK(u.q.max_abs() == 0.0);
  CHECK(u.psi.max_abs() == 0.0);
  CHECK(u.T.max_abs() == 0.0);
  CHECK(u.S.max_abs() == 0.0);
}

TEST_CASE("pure dissipation: tracer energy and (without buoyancy) vorticity decay monotonically") {
  auto s = make_setup(20, 16, 5e-3, 0.0);
  unforced(s);
  Integrator integ(s);
  State u = make_initial_state(s.grid, true, 1.0, 7);
  double e = ts_energy(u);
  for (int n = 0; n < 200; ++n) {
    u = integ.step_spde(u, n);
    const double en = ts_energy(u);
    REQUIRE(en < e);
    e = en;
  }
  s.params.g = 0.0;
  Integrator calm(s);
  State w = make_initial_state(s.grid, true, 1.0, 8);
  double qn = norm_l2(w.q);
  for (int n = 0; n < 200; ++n) {
    w = calm.step_spde(w, n);
    REQUIRE(norm_l2(w.q) < qn);
    qn = norm_l2(w.q);
  }
}

TEST_CASE("implicit diffusion is stable for very large steps without advection") {
  auto s = make_setup(16, 12, 10.0, 0.0);
  unforced(s);
  s.options.advection = false;
  Integrator integ(s);
  State u = make_initial_state(s.grid, true, 1.0, 3);
  double e = ts_energy(u);
  for (int n = 0; n < 10; ++n) {
    u = integ.step_spde(u, n);
    CHECK(u.all_finite());
    CHECK(ts_energy(u) <= e);
    e = ts_energy(u);
  }
}

TEST_CASE("salinity mean is conserved") {
  auto s = make_setup(24, 16, 2e-3, 1.0);
  Integrator integ(s);
  State u = make_initial_state(s.grid, true, 1.0, 5);
  const double m0 = mean(u.S);
  const double scale = u.S.max_abs();
  for (int n = 0; n < 500; ++n) u = integ.step_spde(u, n);
  const double t = 500 * s.dt;
  CHECK(std::abs(mean(u.S) - m0) / t <= 1e-10 * scale);
}

TEST_CASE("discrete tracer energy identity") {
  // |T'|^2 - |T|^2 + |T'-T|^2 = 2 dt [-k_T G(T') + k_T lam <theta - T'_s, T'_s>_G - <J(psi,T), T'>]
  auto s = make_setup(24, 16, 1e-3, 0.5);
  Integrator integ(s);
  const auto& p = s.params;
  State u = make_initial_state(s.grid, true, 1.0, 9);
  ScalarField theta(s.grid, BcKind::NeumannZero);
  for (int j = 0; j < s.grid.ny; ++j) theta(j, s.grid.nz - 1) = p.theta_profile[j];
  ScalarField F(s.grid, BcKind::NeumannZero);
  for (int j = 0; j < s.grid.ny; ++j) F(j, s.grid.nz - 1) = p.F_profile[j];
  std::vector<double> remainders;
  for (int n = 0; n < 30; ++n) {
    State w = integ.step_spde(u, n);
    const auto dT = w.T - u.T;
    const auto dS = w.S - u.S;
    const double lhsT = inner(w.T, w.T) - inner(u.T, u.T) + inner(dT, dT);
    const double rhsT = 2 * s.dt *
                        (-p.kappa_T * gradient_energy(w.T) + p.kappa_T * p.lambda * surface_inner(theta - w.T, w.T) -
                         inner(arakawa_jacobian(u.psi, u.T), w.T));
    CHECK(std::abs(lhsT - rhsT) <= 1e-10 * std::max(1.0, std::abs(lhsT)));
    const double lhsS = inner(w.S, w.S) - inner(u.S, u.S) + inner(dS, dS);
    const double rhsS = 2 * s.dt *
                        (-p.kappa_S * gradient_energy(w.S) + p.kappa_S * surface_inner(F, w.S) -
                         inner(arakawa_jacobian(u.psi, u.S), w.S));
    CHECK(std::abs(lhsS - rhsS) <= 1e-10 * std::max(1.0, std::abs(lhsS)));
    u = w;
  }
}

TEST_CASE("continuous energy balance holds to O(dt)") {
  // (E' - E)/dt + 2k_T G_T' + 2k_S G_S' - surface terms: residual shrinks linearly in dt.
  auto residual = [](double dt) {
    auto s = make_setup(24, 16, dt, 0.0);
    Integrator integ(s);
    const auto& p = s.params;
    State u = make_initial_state(s.grid, true, 1.0, 9);
    ScalarField theta(s.grid, BcKind::NeumannZero), F(s.grid, BcKind::NeumannZero);
    for (int j = 0; j < s.grid.ny; ++j) {
      theta(j, s.grid.nz - 1) = p.theta_profile[j];
      F(j, s.grid.nz - 1) = p.F_profile[j];
    }
    State w = integ.step_spde(u, 0);
    const double dE = (ts_energy(w) - ts_energy(u)) / dt;
    const double rhs = -2 * p.kappa_T * gradient_energy(w.T) - 2 * p.kappa_S * gradient_energy(w.S) +
                       2 * p.kappa_T * p.lambda * surface_inner(theta - w.T, w.T) +
                       2 * p.kappa_S * surface_inner(F, w.S);
    return std::abs(dE - rhs);
  };
  const double r1 = residual(1e-3), r2 = residual(5e-4), r3 = residual(2.5e-4);
  CHECK(r1 / r2 > 1.7);
  CHECK(r2 / r3 > 1.7);
}

TEST_CASE("random ODE with eta = 0 reproduces the noise-free vorticity step") {
  auto s = make_setup(20, 14, 2e-3, 0.0);
  Integrator integ(s);
  State u = make_initial_state(s.grid, true, 1.0, 11);
  const OUState z = OUState::zero(s.grid);
  State v = integ.to_transformed(u, z);
  for (int n = 0; n < 5; ++n) {
    u = integ.step_spde(u, n);
    v = integ.step_random_ode(v, z, z);
    CHECK(max_state_difference(u, v) == 0.0);
  }
}

TEST_CASE("linear dynamics: u and v + Z agree to 1e-10 after one step") {
  auto s = make_setup(24, 16, 2e-3, 2.0, 21, 4);
  s.params.k = 1.5;
  s.options.advection = false;
  s.options.ou_scheme = OUScheme::Scheme;
  Integrator integ(s);
  State u = make_initial_state(s.grid, true, 1.0, 12);
  OUState eta = integ.initial_ou(3);
  State v = integ.to_transformed(u, eta);
  State u1 = integ.step_spde(u, 3);
  OUState eta1 = integ.advance_ou(eta, 3);
  State v1 = integ.step_random_ode(v, eta, eta1);
  State back = integ.to_physical(v1, eta1);
  CHECK(max_state_difference(u1, back) <= 1e-10);
  // The boundary of q~ carries -eta.
  for (auto i : s.grid.boundary_indices()) CHECK(v1.q[i] == -eta1.eta[i]);
}

TEST_CASE("consistent coupling with the matching OU recursion keeps u = v + Z with advection on") {
  auto s = make_setup(24, 16, 2e-3, 2.0, 22);
  s.options.ou_scheme = OUScheme::Scheme;
  auto integ = std::make_shared<const Integrator>(s);
  State u0 = make_initial_state(s.grid, true, 1.0, 13);
  Propagator pu(integ, System::Spde, u0, 0), pv(integ, System::RandomOde, u0, 0);
  for (int n = 0; n < 50; ++n) {
    pu.advance();
    pv.advance();
  }
  CHECK(max_state_difference(pu.state(), pv.physical()) <= 1e-9);

  // The coupling exactly as printed does not satisfy the identity.
  Setup pub = s;
  pub.options.coupling = Coupling::AsPublished;
  auto integ2 = std::make_shared<const Integrator>(pub);
  Propagator pw(integ2, System::RandomOde, u0, 0);
  for (int n = 0; n < 50; ++n) pw.advance();
  CHECK(max_state_difference(pu.state(), pw.physical()) > 1e-6);
}

TEST_CASE("transform gap with the exact OU process vanishes at first order") {
  const double t_end = 0.128, base = 2.5e-4;
  std::vector<double> dts{4e-3, 2e-3, 1e-3}, gaps;
  for (double dt : dts) {
    auto s = make_setup(20, 12, dt, 2.0, 31, static_cast<int>(std::lround(dt / base)));
    State u0 = make_initial_state(s.grid, true, 1.0, 14);
    State u = run(s, System::Spde, u0, 0.0, t_end);
    State v = run(s, System::RandomOde, u0, 0.0, t_end);
    gaps.push_back(state_gap(u, v));
  }
  CHECK(thc::testing::fitted_order(dts, gaps) >= 0.9);
}

TEST_CASE("strong order of the semi-implicit scheme against a fine reference") {
  const double t_end = 0.128, dt0 = 4e-3;
  auto solve = [&](double dt) {
    auto s = make_setup(20, 12, dt, 4.0, 41, static_cast<int>(std::lround(dt / (dt0 / 64))));
    State u0 = make_initial_state(s.grid, true, 1.0, 15);
    return run(s, System::Spde, u0, 0.0, t_end);
  };
  const State ref = solve(dt0 / 64);
  std::vector<double> dts{dt0, dt0 / 2, dt0 / 4}, errs;
  for (double dt : dts) errs.push_back(state_gap(solve(dt), ref));
  CHECK(thc::testing::fitted_order(dts, errs) >= 0.9);
}

TEST_CASE("run: empty interval, determinism, blow-up reporting") {
  auto s = make_setup(16, 12, 1e-2, 1.0);
  State u0 = make_initial_state(s.grid, true, 1.0, 16);
  State same = run(s, System::Spde, u0, 0.5, 0.5);
  CHECK(max_state_difference(same, u0) == 0.0);
  int calls = 0;
  run(s, System::Spde, u0, 0.0, 0.0, [&](const Propagator&) { ++calls; });
  CHECK(calls == 1);

  State a = run(s, System::Spde, u0, 0.0, 0.3);
  State b = run(s, System::Spde, u0, 0.0, 0.3);
  CHECK(max_state_difference(a, b) == 0.0);
  State c = run(s, System::RandomOde, u0, 0.0, 0.3);
  State d = run(s, System::RandomOde, u0, 0.0, 0.3);
  CHECK(max_state_difference(c, d) == 0.0);

  CHECK_THROWS_AS(run(s, System::Spde, u0, 0.0, 0.015), ValidationError);

  State bad = u0;
  bad.T(3, 3) = std::nan("");
  try {
    run(s, System::Spde, bad, 0.0, 0.1);
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.step() == 0);
  }
}

TEST_CASE("setup validation") {
  auto s = make_setup(16, 12, 1e-2, 1.0);
  s.path.dt = 3e-3;
  CHECK_THROWS_AS(Integrator{s}, ValidationError);
  auto t = make_setup(16, 12, 1e-2, 1.0);
  t.spectrum.q[0] = 1.0;
  CHECK_THROWS_AS(Integrator{t}, ValidationError);
  auto r = make_setup(16, 12, 1e-2, 1.0);
  r.params.nu = -1.0;
  CHECK_THROWS_AS(Integrator{r}, ValidationError);
}

TEST_CASE("cocycle property holds bitwise and the check detects a mis-shift") {
  auto s = make_setup(16, 12, 1e-2, 1.0, 51, 2);
  State u0 = make_initial_state(s.grid, true, 1.0, 17);
  for (System sys : {System::Spde, System::RandomOde}) {
    CHECK(cocycle_check(s, sys, u0, 0.0, 0.2).max_difference == 0.0);
    CHECK(cocycle_check(s, sys, u0, 0.1, 0.2).max_difference == 0.0);
    CHECK(cocycle_check(s, sys, u0, 0.3, 0.05).max_difference == 0.0);
    CHECK(cocycle_check(s, sys, u0, 0.1, 0.2, 1).max_difference > 0.0);
    CHECK(cocycle_check(s, sys, u0, 0.1, 0.2, -1).max_difference > 0.0);
  }
}

TEST_CASE("twin runs: zero perturbation, shared noise, contraction") {
  auto s = make_setup(16, 12, 1e-2, 0.5, 61);
  State u0 = make_initial_state(s.grid, true, 1.0, 18);
  State zero = State::zero(s.grid);
  int n = 0;
  twin_run(s, System::RandomOde, u0, zero, 40, [&](const Propagator& a, const Propagator& b) {
    CHECK(max_state_difference(a.state(), b.state()) == 0.0);
    CHECK(a.eta()->modal == b.eta()->modal);
    ++n;
  });
  CHECK(n == 41);

  State pert = make_initial_state(s.grid, true, 0.1, 19, Stream::Perturbation);
  double first = -1.0, last = 0.0;
  twin_run(s, System::RandomOde, u0, pert, 1500, [&](const Propagator& a, const Propagator& b) {
    const double g = state_gap(a.state(), b.state());
    if (first < 0) first = g;
    last = g;
  });
  CHECK(last < 1e-6 * first);
}

TEST_CASE("pullback runs converge onto a single fiber") {
  auto s = make_setup(16, 12, 1e-2, 0.5, 71);
  State a = make_initial_state(s.grid, true, 1.0, 20);
  State b = make_initial_state(s.grid, true, 1.0, 21);
  auto zero_back = pullback_run(s, a, {0.0});
  CHECK(max_state_difference(zero_back[0], a) == 0.0);

  const std::vector<double> tb{2.0, 4.0, 6.0, 8.0, 16.0};
  auto ea = pullback_run(s, a, tb);
  auto eb = pullback_run(s, b, tb);
  const double init_gap = state_gap(a, b);
  CHECK(state_gap(ea.back(), eb.back()) < 1e-6 * init_gap);
  for (std::size_t i = 0; i + 2 < tb.size(); ++i)
    CHECK(state_gap(ea[i + 1], ea[i + 2]) < state_gap(ea[i], ea[i + 1]));
  CHECK_THROWS_AS(pullback_run(s, a, {2.0, 1.0}), ValidationError);
}
