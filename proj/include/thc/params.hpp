#pragma once

#include <span>
#include <string>
#include <vector>

#include "thc/grid.hpp"

namespace thc {

/// Physical and control constants of the circulation model.
///
/// lambda is the surface heat-exchange rate entering T_z = lambda*(theta - T)
/// at z = d. theta_profile and F_profile hold one value per y-node.
struct PhysParams {
  double nu = 1.0;
  double kappa_T = 1.0;
  double kappa_S = 1.0;
  double g = 1.0;
  double alpha_T = 1.0;
  double alpha_S = 1.0;
  double lambda = 2.0;
  double k = 0.0;  // Ornstein-Uhlenbeck control parameter
  std::vector<double> theta_profile;
  std::vector<double> F_profile;
};

/// Lists every violated constraint (empty when valid).
std::vector<std::string> check_params(const PhysParams& p, const Grid& grid);
/// Throws ValidationError carrying all messages from check_params.
void validate_params(const PhysParams& p, const Grid& grid);

/// Trapezoid rule over [-l, l] for a per-node profile.
double trapezoid_integral_y(std::span<const double> profile, const Grid& grid);
/// Trapezoid L2 norm over [-l, l] for a per-node profile.
double profile_norm(std::span<const double> profile, const Grid& grid);

/// theta0 * cos(pi y / (2l)): warm equator, cold poles.
std::vector<double> cosine_theta_profile(const Grid& grid, double theta0);
/// F0 * cos(pi y / l): zero mean over [-l, l].
std::vector<double> cosine_freshwater_profile(const Grid& grid, double F0);

}  // namespace thc
