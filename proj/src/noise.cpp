#include "thc/noise.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "thc/error.hpp"
#include "thc/spectral.hpp"

namespace thc {

double CovarianceSpectrum::trace() const {
  double s = 0.0;
  for (double x : q) s += x;
  return s;
}

bool CovarianceSpectrum::is_zero() const {
  for (double x : q)
    if (x != 0.0) return false;
  return true;
}

void validate_spectrum(const CovarianceSpectrum& s, const Grid& grid) {
  if (s.ny != grid.ny || s.nz != grid.nz || s.q.size() != grid.size()) {
    std::ostringstream os;
    os << "noise spectrum shape " << s.ny << "x" << s.nz << " does not match grid " << grid.ny << "x"
       << grid.nz;
    throw ValidationError(os.str());
  }
  for (int n = 0; n < s.nz; ++n)
    for (int m = 0; m < s.ny; ++m) {
      const double q = s.at(m, n);
      if (!std::isfinite(q) || q < 0.0) {
        std::ostringstream os;
        os << "noise weight q(" << m << "," << n << ") = " << q << " must be finite and >= 0";
        throw ValidationError(os.str());
      }
    }
  if (s.q[0] != 0.0)
    throw ValidationError("noise weight on the constant mode (0,0) must be 0: it has no stationary OU law");
}

CovarianceSpectrum power_law_spectrum(const Grid& grid, double s_q, double trace, int cutoff) {
  if (!std::isfinite(s_q)) throw ValidationError("noise exponent s_q must be finite");
  if (!std::isfinite(trace) || trace < 0.0) throw ValidationError("noise trace must be finite and >= 0");
  if (cutoff < 0) throw ValidationError("noise cutoff must be >= 0");
  const auto eig = SpectralOps::for_grid(grid)->neumann_eigenvalues();
  CovarianceSpectrum s{grid.ny, grid.nz, std::vector<double>(grid.size(), 0.0)};
  double sum = 0.0;
  for (int n = 0; n < grid.nz; ++n)
    for (int m = 0; m < grid.ny; ++m) {
      if ((m == 0 && n == 0) || (cutoff > 0 && std::max(m, n) > cutoff)) continue;
      const std::size_t i = grid.index(m, n);
      s.q[i] = std::pow(eig[i], -s_q);
      sum += s.q[i];
    }
  for (double& q : s.q) q = sum > 0.0 ? q * trace / sum : 0.0;
  return s;
}

CovarianceSpectrum table_spectrum(const Grid& grid, const std::vector<ModeWeight>& modes) {
  CovarianceSpectrum s{grid.ny, grid.nz, std::vector<double>(grid.size(), 0.0)};
  for (const auto& w : modes) {
    if (w.m < 0 || w.m >= grid.ny || w.n < 0 || w.n >= grid.nz) {
      std::ostringstream os;
      os << "noise mode (" << w.m << "," << w.n << ") outside the " << grid.ny << "x" << grid.nz << " basis";
      throw ValidationError(os.str());
    }
    s.q[grid.index(w.m, w.n)] = w.q;
  }
  validate_spectrum(s, grid);
  return s;
}

NoisePath shift_path(NoisePath path, std::int64_t steps) {
  path.origin_step += steps;
  return path;
}

std::vector<double> wiener_increment_modal(const NoisePath& path, std::int64_t step,
                                           const CovarianceSpectrum& spectrum) {
  std::vector<double> a(spectrum.q.size(), 0.0);
  const std::int64_t key = path.origin_step + step;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (spectrum.q[i] > 0.0)
      a[i] = std::sqrt(spectrum.q[i] * path.dt) *
             keyed_normal(path.seed, key, static_cast<std::uint32_t>(i), Stream::Wiener);
  return a;
}

ScalarField wiener_increment(const NoisePath& path, std::int64_t step, const CovarianceSpectrum& spectrum,
                             const Grid& grid) {
  validate_spectrum(spectrum, grid);
  return SpectralOps::for_grid(grid)->cosine_synthesis(wiener_increment_modal(path, step, spectrum));
}

ScalarField wiener_increment_sum(const NoisePath& path, std::int64_t first, int count,
                                 const CovarianceSpectrum& spectrum, const Grid& grid) {
  validate_spectrum(spectrum, grid);
  std::vector<double> sum(grid.size(), 0.0);
  for (int c = 0; c < count; ++c) {
    const auto a = wiener_increment_modal(path, first + c, spectrum);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += a[i];
  }
  return SpectralOps::for_grid(grid)->cosine_synthesis(sum);
}

OUState OUState::zero(const Grid& grid) {
  return {ScalarField(grid, BcKind::NeumannZero), std::vector<double>(grid.size(), 0.0)};
}

OUState OUState::from_modal(const Grid& grid, std::vector<double> modal) {
  OUState s{SpectralOps::for_grid(grid)->cosine_synthesis(modal), std::move(modal)};
  return s;
}

std::vector<double> ou_rates(const Grid& grid, const PhysParams& params) {
  if (!(params.k >= 0.0)) throw ValidationError("OU control parameter k must be >= 0");
  const auto eig = SpectralOps::for_grid(grid)->neumann_eigenvalues();
  std::vector<double> mu(eig.begin(), eig.end());
  for (double& x : mu) x *= params.nu * (params.k + 1.0);
  return mu;
}

namespace {

// In-place exact transition of every mode over a step of length dt.
void exact_update(std::vector<double>& a, const std::vector<double>& mu, double dt,
                  const CovarianceSpectrum& spectrum, const NoisePath& path, std::int64_t step) {
  const std::int64_t key = path.origin_step + step;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double q = spectrum.q[i];
    if (mu[i] == 0.0) continue;  // constant mode: q = 0 and no dissipation
    const double decay = std::exp(-mu[i] * dt);
    a[i] *= decay;
    if (q > 0.0) {
      const double sigma = std::sqrt(q * -std::expm1(-2.0 * mu[i] * dt) / (2.0 * mu[i]));
      a[i] += sigma * keyed_normal(path.seed, key, static_cast<std::uint32_t>(i), Stream::Wiener);
    }
  }
}

}  // namespace

OUState ou_exact_step(const OUState& state, double dt, const PhysParams& params,
                      const CovarianceSpectrum& spectrum, const NoisePath& path, std::int64_t step) {
  const Grid& grid = state.eta.grid();
  validate_spectrum(spectrum, grid);
  auto a = state.modal;
  exact_update(a, ou_rates(grid, params), dt, spectrum, path, step);
  return OUState::from_modal(grid, std::move(a));
}

OUState ou_exact_advance(const OUState& state, const PhysParams& params, const CovarianceSpectrum& spectrum,
                         const NoisePath& path, std::int64_t first, int count) {
  const Grid& grid = state.eta.grid();
  validate_spectrum(spectrum, grid);
  const auto mu = ou_rates(grid, params);
  auto a = state.modal;
  for (int c = 0; c < count; ++c) exact_update(a, mu, path.dt, spectrum, path, first + c);
  return OUState::from_modal(grid, std::move(a));
}

OUState ou_scheme_step(const OUState& state, double dt, const PhysParams& params,
                       const CovarianceSpectrum& spectrum, const NoisePath& path, std::int64_t first,
                       int count) {
  const Grid& grid = state.eta.grid();
  validate_spectrum(spectrum, grid);
  const auto eig = SpectralOps::for_grid(grid)->neumann_eigenvalues();
  auto a = state.modal;
  std::vector<double> dw(a.size(), 0.0);
  for (int c = 0; c < count; ++c) {
    const auto inc = wiener_increment_modal(path, first + c, spectrum);
    for (std::size_t i = 0; i < a.size(); ++i) dw[i] += inc[i];
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double l = eig[i];
    a[i] = (a[i] * (1.0 - dt * params.nu * params.k * l) + dw[i]) / (1.0 + dt * params.nu * l);
  }
  return OUState::from_modal(grid, std::move(a));
}

OUState ou_stationary_sample(const CovarianceSpectrum& spectrum, const PhysParams& params, const Grid& grid,
                             std::uint64_t seed, std::int64_t step) {
  validate_spectrum(spectrum, grid);
  const auto mu = ou_rates(grid, params);
  std::vector<double> a(grid.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (spectrum.q[i] > 0.0)
      a[i] = std::sqrt(spectrum.q[i] / (2.0 * mu[i])) *
             keyed_normal(seed, step, static_cast<std::uint32_t>(i), Stream::Stationary);
  return OUState::from_modal(grid, std::move(a));
}

OUMoments ou_moments(const CovarianceSpectrum& spectrum, const PhysParams& params, const Grid& grid) {
  validate_spectrum(spectrum, grid);
  const auto mu = ou_rates(grid, params);
  const auto eig = SpectralOps::for_grid(grid)->neumann_eigenvalues();
  OUMoments m;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (spectrum.q[i] == 0.0) continue;
    const double var = spectrum.q[i] / (2.0 * mu[i]);
    m.eta_l2 += var;
    m.grad_eta += eig[i] * var;
  }
  return m;
}

MeanGammaCheck mean_gamma_check(const CovarianceSpectrum& spectrum, const PhysParams& params, const Grid& grid,
                                double epsilon) {
  MeanGammaCheck r;
  r.lambda1 = std::pow(std::numbers::pi / grid.d, 2);
  if (!(epsilon > 0.0) || !(epsilon < r.lambda1 * params.nu / 2.0)) {
    std::ostringstream os;
    os << "epsilon = " << epsilon << " must lie in (0, lambda1*nu/2) = (0, " << r.lambda1 * params.nu / 2.0
       << ")";
    throw ValidationError(os.str());
  }
  const double trq = spectrum.trace();
  const double nu3 = params.nu * params.nu * params.nu;
  r.threshold = trq / ((params.k + 1.0) * nu3);
  r.pass = r.lambda1 > r.threshold;
  r.deficit = r.pass ? 0.0 : r.threshold - r.lambda1;
  const auto m = ou_moments(spectrum, params, grid);
  r.expected_gamma = r.lambda1 * params.nu - epsilon - (m.eta_l2 + m.grad_eta) / params.nu;
  r.minimal_k = static_cast<int>(std::floor(trq / (r.lambda1 * nu3)));
  return r;
}

}  // namespace thc
