#include "thc/diagnostics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "thc/error.hpp"
#include "thc/operators.hpp"
#include "thc/spectral.hpp"

namespace thc {

namespace {

// 1D operators on the z nodes of the grid (the worst-case y mode is the constant one).
struct ZOperators {
  Eigen::MatrixXd K;  // s^T K s = sum (s_{i+1} - s_i)^2 / dz
  Eigen::VectorXd m;  // trapezoid mass diagonal
};

ZOperators z_operators(const Grid& g) {
  const int n = g.nz;
  ZOperators z{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Constant(n, g.dz)};
  z.m(0) = z.m(n - 1) = 0.5 * g.dz;
  for (int i = 0; i + 1 < n; ++i) {
    z.K(i, i) += 1.0 / g.dz;
    z.K(i + 1, i + 1) += 1.0 / g.dz;
    z.K(i, i + 1) -= 1.0 / g.dz;
    z.K(i + 1, i) -= 1.0 / g.dz;
  }
  return z;
}

double least_squares_rate(const std::vector<double>& t, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) continue;
    const double ly = std::log(y[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  const double den = n * sxx - sx * sx;
  return den > 0.0 ? -(n * sxy - sx * sy) / den : 0.0;
}

}  // namespace

DerivedConstants derive_constants(const PhysParams& p, const Grid& g, double epsilon) {
  validate_params(p, g);
  if (!(p.lambda > 0.0)) throw ValidationError("derived constants need lambda > 0");
  DerivedConstants c;
  const double pi = std::numbers::pi;
  c.nu = p.nu;
  c.k = p.k;
  c.lambda1 = (pi / g.d) * (pi / g.d);
  c.lambda1_2d = std::min((pi / (2 * g.l)) * (pi / (2 * g.l)), c.lambda1);
  c.lambda1_differs = c.lambda1_2d != c.lambda1;
  c.epsilon = epsilon > 0.0 ? epsilon : c.lambda1 * p.nu / 4.0;
  if (!(c.epsilon < c.lambda1 * p.nu / 2.0)) {
    std::ostringstream os;
    os << "epsilon = " << c.epsilon << " must be below lambda1*nu/2 = " << c.lambda1 * p.nu / 2.0;
    throw ValidationError(os.str());
  }

  const double lo = std::max(0.0, 2.0 - 2.0 * p.kappa_T / p.lambda);
  c.a = 0.5 * (lo + 2.0);
  c.beta = std::min(2.0 * p.kappa_T, (2.0 - c.a) * p.kappa_T * p.lambda);

  const ZOperators z = z_operators(g);
  const int top = g.nz - 1;
  {
    Eigen::MatrixXd A = z.K;
    A(top, top) += 1.0;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::MatrixXd(z.m.asDiagonal()),
                                                                  Eigen::EigenvaluesOnly);
    c.c_P = 1.0 / es.eigenvalues().minCoeff();
  }
  {
    Eigen::MatrixXd B = z.K;
    B.diagonal() += z.m;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(g.nz);
    e(top) = 1.0;
    c.c3 = B.ldlt().solve(e)(top);
  }
  c.mu_S = std::min(SpectralOps::eigenvalue_1d(1, g.ny, g.dy), SpectralOps::eigenvalue_1d(1, g.nz, g.dz));
  c.eps_F = 1.0 / (c.c3 * (1.0 + 1.0 / c.mu_S));
  c.alpha_T_env = c.beta / (1.0 + c.c_P);
  c.alpha_S_env = p.kappa_S / (1.0 + 1.0 / c.mu_S);
  c.alpha_env = std::min(c.alpha_T_env, c.alpha_S_env);
  const double th = profile_norm(p.theta_profile, g), fw = profile_norm(p.F_profile, g);
  c.c5_env = p.kappa_T * p.lambda / c.a * th * th + p.kappa_S * fw * fw / c.eps_F;

  c.c6 = 1.0 / SpectralOps::eigenvalue_1d(1, g.nz, g.dz);
  c.c7 = 1.0 / c.epsilon;
  c.c8 = 1.0 / c.epsilon;
  c.g_tilde = p.g * std::hypot(p.alpha_T, p.alpha_S);
  c.delta_eps = c.c7 * c.g_tilde * c.g_tilde;
  c.R1_sq = 2.0 * c.c5_env / c.alpha_env;
  return c;
}

std::vector<std::pair<std::string, double>> constants_table(const DerivedConstants& c) {
  return {{"lambda1", c.lambda1},
          {"lambda1_2d", c.lambda1_2d},
          {"lambda1_differs", c.lambda1_differs ? 1.0 : 0.0},
          {"a", c.a},
          {"epsilon", c.epsilon},
          {"beta", c.beta},
          {"c_P", c.c_P},
          {"mu_S", c.mu_S},
          {"c3", c.c3},
          {"eps_F", c.eps_F},
          {"alpha_T_env", c.alpha_T_env},
          {"alpha_S_env", c.alpha_S_env},
          {"alpha_env", c.alpha_env},
          {"c5_env", c.c5_env},
          {"c6", c.c6},
          {"c7", c.c7},
          {"c8", c.c8},
          {"g_tilde", c.g_tilde},
          {"delta_eps", c.delta_eps},
          {"R1_sq", c.R1_sq}};
}

double eta_w12_sq(const ScalarField& eta) { return inner(eta, eta) + gradient_energy(eta); }

double gamma_of(double w, const DerivedConstants& c) { return c.lambda1 * c.nu - c.epsilon - w / c.nu; }

double r_of(double w, const DerivedConstants& c) {
  return (2.0 * c.lambda1 * c.c8 * c.k * c.k * c.nu * c.nu + c.nu) * w + c.c6 / (4.0 * c.nu) * w * w;
}

namespace {

ScalarField without_mean(const ScalarField& f) {
  ScalarField out = f;
  const double m = mean(f);
  for (double& x : out.values()) x -= m;
  return out;
}

}  // namespace

double tracer_energy(const State& s) {
  const ScalarField S = without_mean(s.S);
  return inner(s.T, s.T) + inner(S, S);
}

double state_distance(const State& a, const State& b) {
  const ScalarField dq = a.q - b.q, dT = a.T - b.T, dS = a.S - b.S;
  return std::sqrt(inner(dq, dq) + inner(dT, dT) + inner(dS, dS));
}

EnergyRecord energy_record(const State& s, const OUState* eta, const DerivedConstants& c) {
  EnergyRecord r;
  r.t = s.t;
  r.ts_energy = tracer_energy(s);
  if (s.vars == Variables::Physical && eta != nullptr) {
    const ScalarField qt = s.q - eta->eta;
    r.q_energy = inner(qt, qt);
  } else {
    r.q_energy = inner(s.q, s.q);
  }
  r.grad_ts = gradient_energy(s.T) + gradient_energy(s.S);
  r.eta_w12 = eta != nullptr ? eta_w12_sq(eta->eta) : 0.0;
  r.gamma_sample = gamma_of(r.eta_w12, c);
  r.r_sample = r_of(r.eta_w12, c);
  return r;
}

double gronwall_envelope(double E0, double t, const DerivedConstants& c) {
  return E0 * std::exp(-c.alpha_env * t) + c.c5_env / c.alpha_env;
}

AuditStep EnvelopeAuditor::add(const State& before, const ScalarField& psi, const State& after, std::int64_t step) {
  const double E = tracer_energy(before), E1 = tracer_energy(after);
  const double G1 = gradient_energy(after.T) + gradient_energy(after.S);
  const double lhs = (E1 - E) / dt_ + c_.alpha_env * (G1 + E1);

  const ScalarField S0 = without_mean(before.S), S1 = without_mean(after.S);
  const ScalarField dT = after.T - before.T, dS = S1 - S0;
  const double remainder = -2.0 * inner(arakawa_jacobian(psi, before.T), after.T) -
                           2.0 * inner(arakawa_jacobian(psi, S0), S1) - (inner(dT, dT) + inner(dS, dS)) / dt_;
  const double slack = std::max(0.0, remainder);
  const double bound = c_.c5_env + slack;
  const double tol = 1e-10 * (1.0 + (E + E1) / dt_ + c_.alpha_env * (G1 + E1) + c_.c5_env);
  ++report_.steps;
  if (bound > 0.0) report_.max_ratio = std::max(report_.max_ratio, lhs / bound);
  const AuditStep rec{step, lhs, bound, slack};
  if (lhs > bound + tol) report_.violations.push_back(rec);
  return rec;
}

ScalarField advecting_stream_function(const Propagator& p) {
  const State& s = p.state();
  if (s.vars == Variables::Physical || !p.eta()) return s.psi;
  return s.psi + poisson_solve_dirichlet(p.eta()->eta);
}

RadiusEstimate absorbing_radius(const std::vector<double>& w, double dt, const DerivedConstants& c) {
  RadiusEstimate est;
  est.R1_sq = c.R1_sq;
  est.horizon = dt * static_cast<double>(w.size());
  const double kf = c.delta_eps / c.alpha_env * c.c5_env / c.alpha_env;
  std::vector<double> contrib(w.size());
  double decay = 0.0, gsum = 0.0;
  for (std::size_t i = w.size(); i-- > 0;) {
    const double g = gamma_of(w[i], c);
    contrib[i] = dt * (r_of(w[i], c) + kf * g) * std::exp(-decay);
    decay += g * dt;
    gsum += g;
  }
  est.R2_sq = std::accumulate(contrib.begin(), contrib.end(), 0.0);
  est.mean_gamma = w.empty() ? gamma_of(0.0, c) : gsum / static_cast<double>(w.size());
  est.gamma_positive = est.mean_gamma > 0.0;
  const std::size_t tail = std::max<std::size_t>(1, w.size() / 10);
  double tail_sum = 0.0;
  for (std::size_t i = 0; i < std::min(tail, w.size()); ++i) tail_sum += std::abs(contrib[i]);
  est.converged = est.gamma_positive && !w.empty() && tail_sum <= 0.01 * std::abs(est.R2_sq);
  if (est.R2_sq == 0.0 && est.gamma_positive) est.converged = true;
  est.R_sq = est.R1_sq + est.R2_sq;
  return est;
}

double RadiusTracker::add(double w) {
  const double g = gamma_of(w, c_);
  const double f = r_of(w, c_) + c_.delta_eps / c_.alpha_env * c_.c5_env / c_.alpha_env * g;
  x_ = x_ * std::exp(-g * dt_) + dt_ * f;
  return x_;
}

std::string FunctionalSet::describe() const {
  std::ostringstream os;
  os << "first " << count << " eigen-coefficients of A (s = " << s << ")";
  return os.str();
}

FunctionalSet spectral_functionals(const Grid& g, const PhysParams& p, std::size_t N, double s) {
  if (!(s > 0.0 && s < 0.25)) throw ValidationError("functional exponent s must lie in (0, 1/4)");
  const auto ops = SpectralOps::for_grid(g);
  FunctionalSet f;
  f.s = s;
  const auto de = ops->dirichlet_eigenvalues();
  const auto ne = ops->neumann_eigenvalues();
  for (std::size_t i = 0; i < de.size(); ++i) f.all.push_back({0, i, p.nu * de[i]});
  for (std::size_t i = 0; i < ne.size(); ++i) f.all.push_back({1, i, p.kappa_T * ne[i]});
  for (std::size_t i = 1; i < ne.size(); ++i) f.all.push_back({2, i, p.kappa_S * ne[i]});
  std::stable_sort(f.all.begin(), f.all.end(), [](const auto& a, const auto& b) {
    if (a.eigenvalue != b.eigenvalue) return a.eigenvalue < b.eigenvalue;
    if (a.field != b.field) return a.field < b.field;
    return a.mode < b.mode;
  });
  if (N < 1 || N > f.all.size()) {
    std::ostringstream os;
    os << "functional count " << N << " must lie in [1, " << f.all.size() << "]";
    throw ValidationError(os.str());
  }
  f.count = N;
  return f;
}

std::vector<double> modal_coefficients(const State& s, const FunctionalSet& f) {
  const auto ops = SpectralOps::for_grid(s.grid());
  const auto cq = ops->sine_analysis(s.q);
  const auto cT = ops->cosine_analysis(s.T);
  const auto cS = ops->cosine_analysis(s.S);
  std::vector<double> out(f.all.size());
  for (std::size_t i = 0; i < f.all.size(); ++i) {
    const auto& e = f.all[i];
    out[i] = e.field == 0 ? cq[e.mode] : e.field == 1 ? cT[e.mode] : cS[e.mode];
  }
  return out;
}

EpsilonL epsilon_L_for_modes(const FunctionalSet& f) {
  EpsilonL e;
  e.C_L = std::sqrt(static_cast<double>(f.count));
  for (const auto& x : f.all) e.eigenvalues.push_back(x.eigenvalue);
  e.epsilon_L = f.count >= f.all.size() ? 0.0 : std::pow(f.all[f.count].eigenvalue, -f.s / 2.0);
  return e;
}

FunctionalNorms functional_norms(const State& s, const FunctionalSet& f) {
  const auto c = modal_coefficients(s, f);
  FunctionalNorms n;
  double h = 0.0, x = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    h += c[i] * c[i];
    x += std::pow(f.all[i].eigenvalue, f.s) * c[i] * c[i];
    if (i < f.count) n.max_l = std::max(n.max_l, std::abs(c[i]));
  }
  n.h = std::sqrt(h);
  n.x = std::sqrt(x);
  return n;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::BothDecay:
      return "both-decay";
    case Verdict::FunctionalsDecayStateDoesNot:
      return "functionals-decay-state-does-not";
    case Verdict::Neither:
      return "neither";
  }
  return "neither";
}

DeterminingTracker::DeterminingTracker(FunctionalSet f, double dt, double window)
    : f_(std::move(f)), dt_(dt), window_(window) {}

void DeterminingTracker::add(double t, const State& a, const State& b) {
  State d = a;
  d.q -= b.q;
  d.T -= b.T;
  d.S -= b.S;
  const auto n = functional_norms(d, f_);
  t_.push_back(t);
  max_l_sq_.push_back(n.max_l * n.max_l);
  gap_.push_back(n.h);
}

DeterminingReport DeterminingTracker::report(double decay_ratio) const {
  DeterminingReport r;
  r.functionals = f_.describe();
  const auto eps = epsilon_L_for_modes(f_);
  r.epsilon_L = eps.epsilon_L;
  r.C_L = eps.C_L;
  r.t = t_;
  r.max_l_sq = max_l_sq_;
  r.state_gap = gap_;
  const auto w = static_cast<std::size_t>(std::llround(window_ / dt_));
  for (std::size_t i = 0; i + w < max_l_sq_.size(); ++i) {
    double s = 0.5 * (max_l_sq_[i] + max_l_sq_[i + w]);
    for (std::size_t k = i + 1; k < i + w; ++k) s += max_l_sq_[k];
    r.windowed.push_back(s * dt_);
  }
  std::vector<double> tw(t_.begin(), t_.begin() + static_cast<std::ptrdiff_t>(r.windowed.size()));
  r.functional_rate = least_squares_rate(tw, r.windowed);
  r.state_rate = least_squares_rate(t_, gap_);
  auto ratio = [](const std::vector<double>& v) {
    if (v.empty() || v.front() == 0.0) return 0.0;
    return v.back() / v.front();
  };
  r.functional_ratio = ratio(r.windowed);
  r.state_ratio = ratio(gap_);
  const bool fd = !r.windowed.empty() && r.functional_ratio <= decay_ratio;
  const bool sd = !gap_.empty() && r.state_ratio <= decay_ratio;
  r.verdict = fd && sd ? Verdict::BothDecay : fd ? Verdict::FunctionalsDecayStateDoesNot : Verdict::Neither;
  return r;
}

}  // namespace thc
