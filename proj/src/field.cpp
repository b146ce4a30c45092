#include "thc/field.hpp"

#include <algorithm>
#include <cmath>

#include "thc/error.hpp"

namespace thc {

ScalarField::ScalarField(const Grid& grid, BcKind bc, double fill)
    : grid_(grid), bc_(bc), values_(grid.size(), fill) {}

void ScalarField::enforce_bc() {
  if (bc_ != BcKind::DirichletZero) return;
  const int ny = grid_.ny, nz = grid_.nz;
  for (int j = 0; j < ny; ++j) {
    (*this)(j, 0) = 0.0;
    (*this)(j, nz - 1) = 0.0;
  }
  for (int k = 0; k < nz; ++k) {
    (*this)(0, k) = 0.0;
    (*this)(ny - 1, k) = 0.0;
  }
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double x) { return std::isfinite(x); });
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*this, o, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*this, o, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& x) {
  require_same_grid(*this, x, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * x.values_[i];
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where) {
  if (!(a.grid() == b.grid()) || a.size() != b.size()) {
    throw ValidationError(std::string(where) + ": fields live on different grids");
  }
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "inner");
  const Grid& g = a.grid();
  double sum = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j) sum += g.relative_weight(j, k) * a(j, k) * b(j, k);
  return sum * g.dy * g.dz;
}

double norm_l2(const ScalarField& f) { return std::sqrt(inner(f, f)); }

double integral(const ScalarField& f) {
  const Grid& g = f.grid();
  double sum = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j) sum += g.relative_weight(j, k) * f(j, k);
  return sum * g.dy * g.dz;
}

double mean(const ScalarField& f) {
  const Grid& g = f.grid();
  return integral(f) / (2.0 * g.l * g.d);
}

double surface_inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "surface_inner");
  const Grid& g = a.grid();
  const int top = g.nz - 1;
  double sum = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double w = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
    sum += w * a(j, top) * b(j, top);
  }
  return sum * g.dy;
}

double boundary_norm(const ScalarField& f) {
  const Grid& g = f.grid();
  double sum = 0.0;
  // Bottom and top edges.
  for (int k : {0, g.nz - 1})
    for (int j = 0; j < g.ny; ++j) {
      const double w = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
      sum += w * f(j, k) * f(j, k) * g.dy;
    }
  // Side walls.
  for (int j : {0, g.ny - 1})
    for (int k = 0; k < g.nz; ++k) {
      const double w = (k == 0 || k == g.nz - 1) ? 0.5 : 1.0;
      sum += w * f(j, k) * f(j, k) * g.dz;
    }
  return std::sqrt(sum);
}

}  // namespace thc
