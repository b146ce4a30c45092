#include "thc/grid.hpp"

#include <cmath>
#include <string>

#include "thc/error.hpp"

namespace thc {

Grid make_grid(int ny, int nz, double l, double d) {
  if (ny < 4 || nz < 4) {
    throw ValidationError("grid needs at least 4 nodes per direction, got ny=" +
                          std::to_string(ny) + " nz=" + std::to_string(nz));
  }
  if (!std::isfinite(l) || l <= 0.0) {
    throw ValidationError("grid half-width l must be finite and positive");
  }
  if (!std::isfinite(d) || d <= 0.0) {
    throw ValidationError("grid depth d must be finite and positive");
  }
  Grid g;
  g.ny = ny;
  g.nz = nz;
  g.l = l;
  g.d = d;
  g.dy = 2.0 * l / (ny - 1);
  g.dz = d / (nz - 1);
  return g;
}

std::vector<std::size_t> Grid::interior_indices() const {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(ny - 2) * (nz - 2));
  for (int k = 1; k < nz - 1; ++k)
    for (int j = 1; j < ny - 1; ++j) out.push_back(index(j, k));
  return out;
}

std::vector<std::size_t> Grid::boundary_indices() const {
  std::vector<std::size_t> out;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      if (is_boundary(j, k)) out.push_back(index(j, k));
  return out;
}

}  // namespace thc
