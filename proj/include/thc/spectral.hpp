#pragma once

#include <memory>
#include <span>
#include <vector>

#include "thc/field.hpp"

namespace thc {

/// Orthonormal discrete eigenbases of the two grid Laplacians.
///
/// Dirichlet: sine modes on the (ny-2) x (nz-2) interior nodes, which
/// diagonalise the 5-point Laplacian with zero boundary values.
/// Neumann: cosine modes on all ny x nz nodes, which diagonalise the
/// 5-point Laplacian with even-reflection ghosts. Both bases are
/// orthonormal in the trapezoid inner product, so analysis coefficients
/// are L2 projections and Parseval holds exactly.
///
/// Mode arrays are row-major with the y-mode fastest. Neumann mode (m, n)
/// sits at n*ny + m; Dirichlet mode (m, n), m,n >= 1, at (n-1)*(ny-2) + (m-1).
class SpectralOps {
 public:
  explicit SpectralOps(const Grid& grid);

  /// Shared instance per grid shape; plans are created once.
  static std::shared_ptr<const SpectralOps> for_grid(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::size_t dirichlet_mode_count() const { return dir_eig_.size(); }
  std::size_t neumann_mode_count() const { return neu_eig_.size(); }

  /// Eigenvalues of -Laplacian, same ordering as the mode arrays.
  std::span<const double> dirichlet_eigenvalues() const { return dir_eig_; }
  std::span<const double> neumann_eigenvalues() const { return neu_eig_; }
  static double eigenvalue_1d(int mode, int nodes, double h);

  /// Coefficients of the interior values of f in the sine basis.
  std::vector<double> sine_analysis(const ScalarField& f) const;
  /// Field (DirichletZero) from sine coefficients.
  ScalarField sine_synthesis(std::span<const double> coeff) const;
  std::vector<double> cosine_analysis(const ScalarField& f) const;
  ScalarField cosine_synthesis(std::span<const double> coeff) const;
  /// Adds the synthesis into an existing field without allocating a new one.
  void cosine_synthesis_into(std::span<const double> coeff, ScalarField& out) const;

  /// Solves (shift - scale * Laplacian_D) x = rhs on interior nodes, x = 0 on
  /// the boundary. rhs boundary values are ignored.
  ScalarField solve_dirichlet(const ScalarField& rhs, double shift, double scale) const;
  /// Solves (shift - scale * Laplacian_N) x = rhs on all nodes. With shift = 0
  /// the constant mode is left at zero (rhs mean is discarded).
  ScalarField solve_neumann(const ScalarField& rhs, double shift, double scale) const;

 private:
  void r2r(int kind, int n0, int n1, const double* in, double* out) const;

  Grid grid_;
  std::vector<double> dir_eig_;
  std::vector<double> neu_eig_;
  std::vector<double> cos_norm_y_, cos_norm_z_;  // orthonormalisation factors
  double sin_norm_y_ = 0.0, sin_norm_z_ = 0.0;
};

}  // namespace thc
