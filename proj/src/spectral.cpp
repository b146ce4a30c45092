#include "thc/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "thc/error.hpp"

namespace thc {

namespace {

constexpr int kSine = 0;
constexpr int kCosine = 1;

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan get_plan(int kind, int n0, int n1) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard lock(plan_mutex());
  auto key = std::make_tuple(kind, n0, n1);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<double> in(static_cast<std::size_t>(n0) * n1), out(in.size());
  const fftw_r2r_kind k = kind == kSine ? FFTW_RODFT00 : FFTW_REDFT00;
  fftw_plan p = fftw_plan_r2r_2d(n0, n1, in.data(), out.data(), k, k,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) throw SolverError("FFTW failed to create an r2r plan");
  cache.emplace(key, p);
  return p;
}

}  // namespace

double SpectralOps::eigenvalue_1d(int mode, int nodes, double h) {
  const double s = std::sin(std::numbers::pi * mode / (2.0 * (nodes - 1)));
  return 4.0 / (h * h) * s * s;
}

SpectralOps::SpectralOps(const Grid& grid) : grid_(grid) {
  const int ny = grid.ny, nz = grid.nz;
  dir_eig_.resize(static_cast<std::size_t>(ny - 2) * (nz - 2));
  for (int n = 1; n <= nz - 2; ++n)
    for (int m = 1; m <= ny - 2; ++m)
      dir_eig_[static_cast<std::size_t>(n - 1) * (ny - 2) + (m - 1)] =
          eigenvalue_1d(m, ny, grid.dy) + eigenvalue_1d(n, nz, grid.dz);
  neu_eig_.resize(grid.size());
  for (int n = 0; n < nz; ++n)
    for (int m = 0; m < ny; ++m)
      neu_eig_[grid.index(m, n)] = eigenvalue_1d(m, ny, grid.dy) + eigenvalue_1d(n, nz, grid.dz);

  // Trapezoid norms: sum' cos^2 = (N-1)/2 for interior modes, N-1 at the ends.
  auto cos_norms = [](int nodes, double h) {
    std::vector<double> c(nodes);
    for (int m = 0; m < nodes; ++m) {
      const double sq = (m == 0 || m == nodes - 1) ? (nodes - 1) * h : 0.5 * (nodes - 1) * h;
      c[m] = 1.0 / std::sqrt(sq);
    }
    return c;
  };
  cos_norm_y_ = cos_norms(ny, grid.dy);
  cos_norm_z_ = cos_norms(nz, grid.dz);
  sin_norm_y_ = 1.0 / std::sqrt(0.5 * (ny - 1) * grid.dy);
  sin_norm_z_ = 1.0 / std::sqrt(0.5 * (nz - 1) * grid.dz);
}

std::shared_ptr<const SpectralOps> SpectralOps::for_grid(const Grid& grid) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const SpectralOps>> cache;
  std::lock_guard lock(m);
  auto key = std::make_tuple(grid.ny, grid.nz, grid.l, grid.d);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto ops = std::make_shared<const SpectralOps>(grid);
  cache.emplace(key, ops);
  return ops;
}

void SpectralOps::r2r(int kind, int n0, int n1, const double* in, double* out) const {
  fftw_plan p = get_plan(kind, n0, n1);
  fftw_execute_r2r(p, const_cast<double*>(in), out);
}

std::vector<double> SpectralOps::sine_analysis(const ScalarField& f) const {
  const int ny = grid_.ny, nz = grid_.nz;
  const int my = ny - 2, mz = nz - 2;
  std::vector<double> in(static_cast<std::size_t>(my) * mz), out(in.size());
  for (int k = 1; k <= mz; ++k)
    for (int j = 1; j <= my; ++j) in[static_cast<std::size_t>(k - 1) * my + (j - 1)] = f(j, k);
  r2r(kSine, mz, my, in.data(), out.data());
  // RODFT00 yields 2*sum per dimension.
  const double s = 0.25 * sin_norm_y_ * sin_norm_z_ * grid_.dy * grid_.dz;
  for (double& x : out) x *= s;
  return out;
}

ScalarField SpectralOps::sine_synthesis(std::span<const double> coeff) const {
  const int my = grid_.ny - 2, mz = grid_.nz - 2;
  if (coeff.size() != static_cast<std::size_t>(my) * mz)
    throw ValidationError("sine_synthesis: coefficient count does not match grid");
  std::vector<double> in(coeff.begin(), coeff.end()), out(in.size());
  const double s = 0.25 * sin_norm_y_ * sin_norm_z_;
  for (double& x : in) x *= s;
  r2r(kSine, mz, my, in.data(), out.data());
  ScalarField f(grid_, BcKind::DirichletZero);
  for (int k = 1; k <= mz; ++k)
    for (int j = 1; j <= my; ++j) f(j, k) = out[static_cast<std::size_t>(k - 1) * my + (j - 1)];
  return f;
}

std::vector<double> SpectralOps::cosine_analysis(const ScalarField& f) const {
  const int ny = grid_.ny, nz = grid_.nz;
  std::vector<double> out(grid_.size());
  r2r(kCosine, nz, ny, f.values().data(), out.data());
  // REDFT00 yields 2*sum' (trapezoid) per dimension.
  const double s = 0.25 * grid_.dy * grid_.dz;
  for (int n = 0; n < nz; ++n)
    for (int m = 0; m < ny; ++m) out[grid_.index(m, n)] *= s * cos_norm_y_[m] * cos_norm_z_[n];
  return out;
}

void SpectralOps::cosine_synthesis_into(std::span<const double> coeff, ScalarField& out) const {
  const int ny = grid_.ny, nz = grid_.nz;
  if (coeff.size() != grid_.size())
    throw ValidationError("cosine_synthesis: coefficient count does not match grid");
  std::vector<double> in(grid_.size());
  for (int n = 0; n < nz; ++n)
    for (int m = 0; m < ny; ++m) {
      // Undo the half weights REDFT00 applies to the end coefficients.
      const double wy = (m == 0 || m == ny - 1) ? 1.0 : 0.5;
      const double wz = (n == 0 || n == nz - 1) ? 1.0 : 0.5;
      in[grid_.index(m, n)] = coeff[grid_.index(m, n)] * cos_norm_y_[m] * cos_norm_z_[n] * wy * wz;
    }
  r2r(kCosine, nz, ny, in.data(), out.values().data());
}

ScalarField SpectralOps::cosine_synthesis(std::span<const double> coeff) const {
  ScalarField f(grid_, BcKind::NeumannZero);
  cosine_synthesis_into(coeff, f);
  return f;
}

ScalarField SpectralOps::solve_dirichlet(const ScalarField& rhs, double shift, double scale) const {
  auto c = sine_analysis(rhs);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] /= shift + scale * dir_eig_[i];
  return sine_synthesis(c);
}

ScalarField SpectralOps::solve_neumann(const ScalarField& rhs, double shift, double scale) const {
  auto c = cosine_analysis(rhs);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double den = shift + scale * neu_eig_[i];
    c[i] = den == 0.0 ? 0.0 : c[i] / den;
  }
  return cosine_synthesis(c);
}

}  // namespace thc
