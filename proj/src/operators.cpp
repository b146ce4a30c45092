#include "thc/operators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "thc/error.hpp"
#include "thc/spectral.hpp"

namespace thc {

namespace {

// Copy with a one-node ring of zeros around the grid.
struct Padded {
  int nyp, nzp;
  std::vector<double> v;
  explicit Padded(const ScalarField& f)
      : nyp(f.grid().ny + 2), nzp(f.grid().nz + 2),
        v(static_cast<std::size_t>(nyp) * nzp, 0.0) {
    const Grid& g = f.grid();
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j) v[static_cast<std::size_t>(k + 1) * nyp + j + 1] = f(j, k);
  }
  double operator()(int j, int k) const { return v[static_cast<std::size_t>(k + 1) * nyp + j + 1]; }
};

// Raw Arakawa stencil sum scaled to a Jacobian, at every node.
std::vector<double> arakawa_raw(const Padded& u, const Padded& w, const Grid& g) {
  std::vector<double> out(g.size());
  const double scale = 1.0 / (12.0 * g.dy * g.dz);
  for (int k = 0; k < g.nz; ++k) {
    for (int j = 0; j < g.ny; ++j) {
      const double uE = u(j + 1, k), uW = u(j - 1, k), uN = u(j, k + 1), uS = u(j, k - 1);
      const double uNE = u(j + 1, k + 1), uNW = u(j - 1, k + 1);
      const double uSE = u(j + 1, k - 1), uSW = u(j - 1, k - 1);
      const double vE = w(j + 1, k), vW = w(j - 1, k), vN = w(j, k + 1), vS = w(j, k - 1);
      const double vNE = w(j + 1, k + 1), vNW = w(j - 1, k + 1);
      const double vSE = w(j + 1, k - 1), vSW = w(j - 1, k - 1);

      const double jpp = (uE - uW) * (vN - vS) - (uN - uS) * (vE - vW);
      const double jpx = uE * (vNE - vSE) - uW * (vNW - vSW) - uN * (vNE - vNW) + uS * (vSE - vSW);
      const double jxp = uNE * (vN - vE) - uSW * (vW - vS) - uNW * (vN - vW) + uSE * (vE - vS);
      out[g.index(j, k)] = (jpp + jpx + jxp) * scale / g.relative_weight(j, k);
    }
  }
  return out;
}

}  // namespace

ScalarField arakawa_jacobian(const ScalarField& psi, const ScalarField& f) {
  require_same_grid(psi, f, "arakawa_jacobian");
  const Grid& g = f.grid();
  const Padded a(psi), b(f);
  const auto kab = arakawa_raw(a, b, g);
  const auto kba = arakawa_raw(b, a, g);
  ScalarField out(g, f.bc());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (kab[i] - kba[i]);
  out.enforce_bc();
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  const Grid& g = f.grid();
  const int ny = g.ny, nz = g.nz;
  const double iy = 1.0 / (g.dy * g.dy), iz = 1.0 / (g.dz * g.dz);
  ScalarField out(g, f.bc());
  if (f.bc() == BcKind::DirichletZero) {
    for (int k = 1; k < nz - 1; ++k)
      for (int j = 1; j < ny - 1; ++j)
        out(j, k) = (f(j + 1, k) - 2.0 * f(j, k) + f(j - 1, k)) * iy +
                    (f(j, k + 1) - 2.0 * f(j, k) + f(j, k - 1)) * iz;
    return out;
  }
  for (int k = 0; k < nz; ++k) {
    const int kn = k == nz - 1 ? nz - 2 : k + 1;
    const int ks = k == 0 ? 1 : k - 1;
    for (int j = 0; j < ny; ++j) {
      const int je = j == ny - 1 ? ny - 2 : j + 1;
      const int jw = j == 0 ? 1 : j - 1;
      out(j, k) = (f(je, k) - 2.0 * f(j, k) + f(jw, k)) * iy +
                  (f(j, kn) - 2.0 * f(j, k) + f(j, ks)) * iz;
    }
  }
  return out;
}

double gradient_energy(const ScalarField& f) { return -inner(laplacian(f), f); }

ScalarField poisson_solve_dirichlet(const ScalarField& q, double tol) {
  const auto ops = SpectralOps::for_grid(q.grid());
  ScalarField psi = ops->solve_dirichlet(q, 0.0, -1.0);
  ScalarField qi = q;
  qi.set_bc(BcKind::DirichletZero);
  qi.enforce_bc();
  const double qn = norm_l2(qi);
  if (qn > 0.0) {
    ScalarField res = laplacian(psi);
    res -= qi;
    const double rel = norm_l2(res) / qn;
    if (!(rel <= tol)) {
      throw SolverError("Poisson solve residual " + std::to_string(rel) +
                        " exceeds tolerance " + std::to_string(tol));
    }
  }
  return psi;
}

Velocity velocity(const ScalarField& psi) {
  const Grid& g = psi.grid();
  const int ny = g.ny, nz = g.nz;
  ScalarField v(g, BcKind::NeumannZero), w(g, BcKind::NeumannZero);
  auto d_dz = [&](int j, int k) {
    if (k == 0) return (-3.0 * psi(j, 0) + 4.0 * psi(j, 1) - psi(j, 2)) / (2.0 * g.dz);
    if (k == nz - 1)
      return (3.0 * psi(j, nz - 1) - 4.0 * psi(j, nz - 2) + psi(j, nz - 3)) / (2.0 * g.dz);
    return (psi(j, k + 1) - psi(j, k - 1)) / (2.0 * g.dz);
  };
  auto d_dy = [&](int j, int k) {
    if (j == 0) return (-3.0 * psi(0, k) + 4.0 * psi(1, k) - psi(2, k)) / (2.0 * g.dy);
    if (j == ny - 1)
      return (3.0 * psi(ny - 1, k) - 4.0 * psi(ny - 2, k) + psi(ny - 3, k)) / (2.0 * g.dy);
    return (psi(j + 1, k) - psi(j - 1, k)) / (2.0 * g.dy);
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      v(j, k) = -d_dz(j, k);
      w(j, k) = d_dy(j, k);
    }
  return {std::move(v), std::move(w)};
}

ScalarField buoyancy_torque(const ScalarField& T, const ScalarField& S, const PhysParams& p) {
  require_same_grid(T, S, "buoyancy_torque");
  const Grid& g = T.grid();
  ScalarField out(g, BcKind::DirichletZero);
  const double c = p.g / (2.0 * g.dy);
  for (int k = 1; k < g.nz - 1; ++k)
    for (int j = 1; j < g.ny - 1; ++j)
      out(j, k) = c * (p.alpha_T * (T(j + 1, k) - T(j - 1, k)) -
                       p.alpha_S * (S(j + 1, k) - S(j - 1, k)));
  return out;
}

FluxSources surface_flux_sources(const ScalarField& T, const ScalarField& S, const PhysParams& p) {
  require_same_grid(T, S, "surface_flux_sources");
  const Grid& g = T.grid();
  const auto ny = static_cast<std::size_t>(g.ny);
  if (p.theta_profile.size() != ny || p.F_profile.size() != ny)
    throw ValidationError("surface_flux_sources: forcing profiles must have ny values");
  double fmax = 0.0;
  for (double f : p.F_profile) fmax = std::max(fmax, std::abs(f));
  const double fint = trapezoid_integral_y(p.F_profile, g);
  if (std::abs(fint) > 1e-12 * fmax)
    throw ValidationError("surface_flux_sources: freshwater flux integral " +
                          std::to_string(fint) + " is not zero");

  FluxSources src{ScalarField(g, BcKind::NeumannZero), ScalarField(g, BcKind::NeumannZero)};
  const int top = g.nz - 1;
  const double cT = 2.0 * p.kappa_T * p.lambda / g.dz;
  const double cS = 2.0 * p.kappa_S / g.dz;
  for (int j = 0; j < g.ny; ++j) {
    src.T(j, top) = cT * (p.theta_profile[j] - T(j, top));
    src.S(j, top) = cS * p.F_profile[j];
  }
  return src;
}

}  // namespace thc
