#pragma once

#include <cstdint>
#include <vector>

#include "thc/field.hpp"
#include "thc/params.hpp"
#include "thc/rng.hpp"

namespace thc {

/// Variance weights q_mn over the Neumann cosine basis, mode (m,n) at n*ny+m.
struct CovarianceSpectrum {
  int ny = 0, nz = 0;
  std::vector<double> q;

  double trace() const;
  double at(int m, int n) const { return q[static_cast<std::size_t>(n) * ny + m]; }
  bool is_zero() const;
};

struct ModeWeight {
  int m = 0, n = 0;
  double q = 0.0;
};

/// q_mn proportional to lambda_mn^(-s_q), normalised so the weights sum to
/// `trace`. cutoff > 0 keeps only modes with max(m,n) <= cutoff.
CovarianceSpectrum power_law_spectrum(const Grid& grid, double s_q, double trace, int cutoff = 0);
/// Explicit table; unlisted modes get zero weight.
CovarianceSpectrum table_spectrum(const Grid& grid, const std::vector<ModeWeight>& modes);
/// Throws ValidationError on shape mismatch, negative or non-finite weights,
/// or mass on the constant mode.
void validate_spectrum(const CovarianceSpectrum& s, const Grid& grid);

/// Replayable Wiener path. Increment i is a pure function of
/// (seed, origin_step + i); dt is the fine step the increments belong to.
struct NoisePath {
  std::uint64_t seed = 0;
  double dt = 1e-3;
  std::int64_t origin_step = 0;

  friend bool operator==(const NoisePath&, const NoisePath&) = default;
};

NoisePath shift_path(NoisePath path, std::int64_t steps);

/// Modal amplitudes sqrt(q_mn dt) xi_mn of fine increment `step`.
std::vector<double> wiener_increment_modal(const NoisePath& path, std::int64_t step,
                                           const CovarianceSpectrum& spectrum);
ScalarField wiener_increment(const NoisePath& path, std::int64_t step, const CovarianceSpectrum& spectrum,
                             const Grid& grid);
/// Sum of `count` consecutive fine increments starting at `first`.
ScalarField wiener_increment_sum(const NoisePath& path, std::int64_t first, int count,
                                 const CovarianceSpectrum& spectrum, const Grid& grid);

/// Ornstein-Uhlenbeck field eta (Neumann) with its cosine coefficients.
struct OUState {
  ScalarField eta;
  std::vector<double> modal;

  static OUState zero(const Grid& grid);
  static OUState from_modal(const Grid& grid, std::vector<double> modal);
};

/// Decay rate nu (k+1) lambda_mn of every mode.
std::vector<double> ou_rates(const Grid& grid, const PhysParams& params);

/// Exact transition over one fine increment of length dt, driven by the
/// same normal draw as wiener_increment(path, step).
OUState ou_exact_step(const OUState& state, double dt, const PhysParams& params,
                      const CovarianceSpectrum& spectrum, const NoisePath& path, std::int64_t step);
/// `count` exact fine steps of length path.dt starting at increment `first`.
OUState ou_exact_advance(const OUState& state, const PhysParams& params, const CovarianceSpectrum& spectrum,
                         const NoisePath& path, std::int64_t first, int count);
/// Implicit-Euler discretisation matching the semi-implicit vorticity step:
/// (1 + dt nu lambda) a' = (1 - dt nu k lambda) a + sum of `count` increments.
OUState ou_scheme_step(const OUState& state, double dt, const PhysParams& params,
                       const CovarianceSpectrum& spectrum, const NoisePath& path, std::int64_t first,
                       int count);
/// Independent stationary draw, variance q_mn / (2 nu (k+1) lambda_mn),
/// keyed by (seed, step) on its own stream.
OUState ou_stationary_sample(const CovarianceSpectrum& spectrum, const PhysParams& params, const Grid& grid,
                             std::uint64_t seed, std::int64_t step = 0);

/// Stationary moments implied by the spectrum.
struct OUMoments {
  double eta_l2 = 0.0;    // E|eta|^2
  double grad_eta = 0.0;  // E|grad eta|^2 = trQ / (2 nu (k+1))
};
OUMoments ou_moments(const CovarianceSpectrum& spectrum, const PhysParams& params, const Grid& grid);

struct MeanGammaCheck {
  bool pass = false;
  double lambda1 = 0.0;
  double threshold = 0.0;        // trQ / ((k+1) nu^3)
  double deficit = 0.0;          // threshold - lambda1 when failing, else 0
  double expected_gamma = 0.0;   // lambda1 nu - epsilon - E|eta|^2_{W12} / nu
  int minimal_k = 0;             // smallest integer k that passes
};

/// Smallness condition on the noise for the chosen k. lambda1 = (pi/d)^2.
/// Throws ValidationError unless 0 < epsilon < lambda1 nu / 2.
MeanGammaCheck mean_gamma_check(const CovarianceSpectrum& spectrum, const PhysParams& params, const Grid& grid,
                                double epsilon);

}  // namespace thc
