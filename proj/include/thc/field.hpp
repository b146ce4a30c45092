#pragma once

#include <span>
#include <vector>

#include "thc/grid.hpp"

namespace thc {

/// Boundary condition family carried by a field.
enum class BcKind { DirichletZero, NeumannZero };

/// Nodal values of one scalar on a grid.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(const Grid& grid, BcKind bc, double fill = 0.0);

  template <class Fn>
  static ScalarField from_function(const Grid& grid, BcKind bc, Fn&& fn) {
    ScalarField f(grid, bc);
    for (int k = 0; k < grid.nz; ++k)
      for (int j = 0; j < grid.ny; ++j) f(j, k) = fn(grid.y(j), grid.z(k));
    return f;
  }

  const Grid& grid() const { return grid_; }
  BcKind bc() const { return bc_; }
  void set_bc(BcKind bc) { bc_ = bc; }

  double& operator()(int j, int k) { return values_[grid_.index(j, k)]; }
  double operator()(int j, int k) const { return values_[grid_.index(j, k)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  /// Zeroes the boundary nodes of a DirichletZero field; no-op for Neumann.
  void enforce_bc();
  bool all_finite() const;
  double max_abs() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  /// this += s * x
  ScalarField& axpy(double s, const ScalarField& x);

  friend bool operator==(const ScalarField& a, const ScalarField& b) {
    return a.grid_ == b.grid_ && a.bc_ == b.bc_ && a.values_ == b.values_;
  }

 private:
  Grid grid_{};
  BcKind bc_ = BcKind::NeumannZero;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Throws ValidationError unless both fields live on the same grid.
void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where);

// Trapezoid-rule quadratures over D.
double inner(const ScalarField& a, const ScalarField& b);
double norm_l2(const ScalarField& f);
double integral(const ScalarField& f);
double mean(const ScalarField& f);
/// Trapezoid inner product of the surface rows (z = d) of two fields.
double surface_inner(const ScalarField& a, const ScalarField& b);
/// L2 norm of the field restricted to the boundary curve.
double boundary_norm(const ScalarField& f);

}  // namespace thc
