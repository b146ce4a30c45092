#pragma once

#include <cstddef>
#include <vector>

namespace thc {

/// Uniform node-centred mesh on [-l, l] x [0, d].
///
/// Node (j, k) sits at y = -l + j*dy, z = k*dz. Storage is row-major with
/// y fastest: index = k*ny + j. Row k = nz-1 is the air-sea surface.
struct Grid {
  int ny = 0;
  int nz = 0;
  double l = 0.0;
  double d = 0.0;
  double dy = 0.0;
  double dz = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(ny) * nz; }
  std::size_t index(int j, int k) const {
    return static_cast<std::size_t>(k) * ny + j;
  }
  double y(int j) const { return -l + j * dy; }
  double z(int k) const { return k * dz; }
  bool is_boundary(int j, int k) const {
    return j == 0 || k == 0 || j == ny - 1 || k == nz - 1;
  }
  /// Relative trapezoid weight of a node: 1 inside, 1/2 on edges, 1/4 at corners.
  double relative_weight(int j, int k) const {
    double w = 1.0;
    if (j == 0 || j == ny - 1) w *= 0.5;
    if (k == 0 || k == nz - 1) w *= 0.5;
    return w;
  }
  /// Quadrature weight (trapezoid rule) of a node, including dy*dz.
  double weight(int j, int k) const { return relative_weight(j, k) * dy * dz; }

  std::vector<std::size_t> interior_indices() const;
  std::vector<std::size_t> boundary_indices() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Validates and builds a grid. Throws ValidationError when ny or nz < 4 or
/// l, d are not finite and positive.
Grid make_grid(int ny, int nz, double l, double d);

}  // namespace thc
