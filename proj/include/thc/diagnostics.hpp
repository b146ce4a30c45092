#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thc/noise.hpp"
#include "thc/params.hpp"
#include "thc/solver.hpp"

namespace thc {

/// Constants of the dissipativity estimates, derived on the discrete grid.
///
/// Chain for the tracers (E = |T|^2 + |S - mean S|^2, G = |grad T|^2 + |grad S|^2):
///   2 lam <theta,T_s> - 2 lam |T_s|^2 <= (lam/a)|theta|^2 - (2-a) lam |T_s|^2
///   |T|^2 <= c_P (|T_s|^2 + |grad T|^2)           (Poincare with surface term)
///   |S_s|^2 <= c3 (|S|^2 + |grad S|^2),  |S|^2 <= |grad S|^2 / mu_S
/// giving dE/dt + alpha (G + E) <= c5 with
///   beta = min(2 kappa_T, (2-a) kappa_T lam), alpha_T = beta / (1 + c_P),
///   eps_F = 1 / (c3 (1 + 1/mu_S)), alpha_S = kappa_S / (1 + 1/mu_S),
///   c5 = (kappa_T lam / a)|theta|_G^2 + kappa_S |F|_G^2 / eps_F.
struct DerivedConstants {
  double lambda1 = 0.0;     // (pi/d)^2, used in the formulas
  double lambda1_2d = 0.0;  // first nonzero Neumann eigenvalue of the rectangle
  bool lambda1_differs = false;
  double a = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
  double c_P = 0.0;
  double mu_S = 0.0;
  double c3 = 0.0;
  double eps_F = 0.0;
  double alpha_T_env = 0.0;
  double alpha_S_env = 0.0;
  double alpha_env = 0.0;
  double c5_env = 0.0;
  double c6 = 0.0;  // Poincare constant for W^1_2 functions vanishing at both ends of (0,d)
  double c7 = 0.0;
  double c8 = 0.0;
  double g_tilde = 0.0;
  double delta_eps = 0.0;  // c7 g_tilde^2
  double R1_sq = 0.0;      // 2 c5 / alpha
  double nu = 0.0, k = 0.0;
};

/// epsilon <= 0 selects the default lambda1 nu / 4. Throws ValidationError
/// for invalid parameters, lambda <= 0, or epsilon outside (0, lambda1 nu / 2).
DerivedConstants derive_constants(const PhysParams& params, const Grid& grid, double epsilon = 0.0);

/// Name/value rows for printing.
std::vector<std::pair<std::string, double>> constants_table(const DerivedConstants& c);

struct EnergyRecord {
  double t = 0.0;
  double ts_energy = 0.0;  // |T|^2 + |S - mean S|^2
  double q_energy = 0.0;   // |q~|^2
  double grad_ts = 0.0;
  double eta_w12 = 0.0;    // |eta|^2 + |grad eta|^2
  double gamma_sample = 0.0;
  double r_sample = 0.0;
};

double eta_w12_sq(const ScalarField& eta);
double gamma_of(double eta_w12, const DerivedConstants& c);
double r_of(double eta_w12, const DerivedConstants& c);
double tracer_energy(const State& s);
/// (|q1-q2|^2 + |T1-T2|^2 + |S1-S2|^2)^{1/2}.
double state_distance(const State& a, const State& b);

/// For a physical state q~ = q - eta; for a transformed state q~ = q.
EnergyRecord energy_record(const State& s, const OUState* eta, const DerivedConstants& c);

/// E0 exp(-alpha t) + c5 / alpha.
double gronwall_envelope(double E0, double t, const DerivedConstants& c);

/// Per-step check of dE/dt + alpha (G' + E') <= c5 + slack. The slack is
/// the exact remainder of the explicit advection,
///   -2 <J(psi,T), T'-T> - |T'-T|^2 / dt  (and the same for S),
/// which is O(dt) and vanishes without flow.
struct AuditStep {
  std::int64_t step = 0;
  double lhs = 0.0, bound = 0.0, slack = 0.0;
};
struct AuditReport {
  std::int64_t steps = 0;
  std::vector<AuditStep> violations;
  double max_ratio = 0.0;  // max lhs / (c5 + slack) over audited steps
};

class EnvelopeAuditor {
 public:
  EnvelopeAuditor(DerivedConstants c, double dt) : c_(c), dt_(dt) {}
  /// psi_adv: stream function advecting the tracers over the step.
  AuditStep add(const State& before, const ScalarField& psi_adv, const State& after, std::int64_t step);
  const AuditReport& report() const { return report_; }

 private:
  DerivedConstants c_;
  double dt_;
  AuditReport report_;
};

/// Stream function that advected the tracers of a trajectory's current state.
ScalarField advecting_stream_function(const Propagator& p);

/// R2^2 as the discretised pullback integral
///   int_{-T}^0 (r(s) + (delta/alpha)(c5/alpha) gamma(s)) exp(-int_s^0 gamma) ds
/// over a series of |eta|^2_W12 values ending at time 0 (oldest first).
struct RadiusEstimate {
  double R1_sq = 0.0, R2_sq = 0.0, R_sq = 0.0;
  double mean_gamma = 0.0;
  double horizon = 0.0;
  bool converged = false;  // tail of the integral below 1%
  bool gamma_positive = false;
};
RadiusEstimate absorbing_radius(const std::vector<double>& eta_w12_series, double dt, const DerivedConstants& c);

/// Forward form of the same integral: X' = f - gamma X, f = r + (delta/alpha)(c5/alpha) gamma.
class RadiusTracker {
 public:
  RadiusTracker(DerivedConstants c, double dt) : c_(c), dt_(dt) {}
  /// Feeds the value over the next step; returns the updated R2^2.
  double add(double eta_w12);
  double R2_sq() const { return x_; }
  double R_sq() const { return c_.R1_sq + x_; }

 private:
  DerivedConstants c_;
  double dt_;
  double x_ = 0.0;
};

/// Spectral-projection functionals: the first N eigen-coefficients of
/// A = diag(-nu Lap_D, -kappa_T Lap_N, -kappa_S Lap_N), ordered by eigenvalue
/// (ties by field then mode index). The salinity constant mode is excluded.
struct FunctionalSet {
  struct Entry {
    int field = 0;  // 0 q, 1 T, 2 S
    std::size_t mode = 0;
    double eigenvalue = 0.0;
  };
  std::vector<Entry> all;  // complete ordered basis
  std::size_t count = 0;   // N
  double s = 0.2;
  std::string describe() const;
};

FunctionalSet spectral_functionals(const Grid& grid, const PhysParams& params, std::size_t N, double s = 0.2);

/// Every modal coefficient of a state (q, T, S minus its mean) in FunctionalSet::all order.
std::vector<double> modal_coefficients(const State& s, const FunctionalSet& f);

struct EpsilonL {
  double epsilon_L = 0.0;
  double C_L = 0.0;
  std::vector<double> eigenvalues;  // ordered table
};
/// eps_L = lambda_{N+1}^{-s/2}, C_L = sqrt(N). Throws ValidationError for N
/// beyond the mode count.
EpsilonL epsilon_L_for_modes(const FunctionalSet& f);

/// |u|_H with S taken modulo its mean, |u|_X = (sum lambda^s |u_i|^2)^{1/2},
/// and max over the first N functionals.
struct FunctionalNorms {
  double h = 0.0, x = 0.0, max_l = 0.0;
};
FunctionalNorms functional_norms(const State& s, const FunctionalSet& f);

enum class Verdict { BothDecay, FunctionalsDecayStateDoesNot, Neither };
std::string verdict_name(Verdict v);

struct DeterminingReport {
  std::string functionals;
  double epsilon_L = 0.0, C_L = 0.0;
  std::vector<double> t;
  std::vector<double> max_l_sq;   // per step
  std::vector<double> windowed;   // int_t^{t+1} max_j |l_j|^2, one per start step with a full window
  std::vector<double> state_gap;  // |v1 - v2|_H per step
  double functional_rate = 0.0, state_rate = 0.0;  // fitted exponential decay rates
  double functional_ratio = 0.0, state_ratio = 0.0;  // last / first
  Verdict verdict = Verdict::Neither;
};

/// Accumulates twin differences step by step.
class DeterminingTracker {
 public:
  DeterminingTracker(FunctionalSet f, double dt, double window = 1.0);
  void add(double t, const State& a, const State& b);
  /// Both series decay when last/first <= decay_ratio.
  DeterminingReport report(double decay_ratio = 1e-6) const;

 private:
  FunctionalSet f_;
  double dt_, window_;
  std::vector<double> t_, max_l_sq_, gap_;
};

}  // namespace thc
