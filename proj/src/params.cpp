#include "thc/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "thc/error.hpp"

namespace thc {

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }
bool nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

double trapezoid_integral_y(std::span<const double> profile, const Grid& grid) {
  double sum = 0.0;
  const std::size_t n = profile.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    sum += w * profile[j];
  }
  return sum * grid.dy;
}

double profile_norm(std::span<const double> profile, const Grid& grid) {
  double sum = 0.0;
  const std::size_t n = profile.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    sum += w * profile[j] * profile[j];
  }
  return std::sqrt(sum * grid.dy);
}

std::vector<std::string> check_params(const PhysParams& p, const Grid& grid) {
  std::vector<std::string> errs;
  auto need_pos = [&](double x, const char* name) {
    if (!positive(x)) errs.push_back(std::string(name) + " must be finite and > 0");
  };
  auto need_nonneg = [&](double x, const char* name) {
    if (!nonnegative(x)) errs.push_back(std::string(name) + " must be finite and >= 0");
  };
  need_pos(p.nu, "nu");
  need_pos(p.kappa_T, "kappa_T");
  need_pos(p.kappa_S, "kappa_S");
  need_pos(p.lambda, "lambda");
  need_nonneg(p.g, "g");
  need_nonneg(p.alpha_T, "alpha_T");
  need_nonneg(p.alpha_S, "alpha_S");
  need_nonneg(p.k, "k");

  const auto ny = static_cast<std::size_t>(grid.ny);
  if (p.theta_profile.size() != ny) {
    errs.push_back("theta profile has " + std::to_string(p.theta_profile.size()) +
                   " values, grid has ny=" + std::to_string(ny));
  }
  if (p.F_profile.size() != ny) {
    errs.push_back("F profile has " + std::to_string(p.F_profile.size()) +
                   " values, grid has ny=" + std::to_string(ny));
  } else {
    double fmax = 0.0;
    bool finite = true;
    for (double f : p.F_profile) {
      finite = finite && std::isfinite(f);
      fmax = std::max(fmax, std::abs(f));
    }
    const double integral = trapezoid_integral_y(p.F_profile, grid);
    if (!finite) {
      errs.push_back("F profile contains non-finite values");
    } else if (std::abs(integral) > 1e-12 * fmax) {
      std::ostringstream os;
      os.precision(17);
      os << "freshwater flux must integrate to zero over [-l, l]: trapezoid integral = "
         << integral << " exceeds 1e-12*max|F| = " << 1e-12 * fmax;
      errs.push_back(os.str());
    }
  }
  for (double t : p.theta_profile) {
    if (!std::isfinite(t)) {
      errs.push_back("theta profile contains non-finite values");
      break;
    }
  }
  return errs;
}

void validate_params(const PhysParams& p, const Grid& grid) {
  const auto errs = check_params(p, grid);
  if (errs.empty()) return;
  std::string msg = "invalid physical parameters:";
  for (const auto& e : errs) msg += "\n  " + e;
  throw ValidationError(msg);
}

std::vector<double> cosine_theta_profile(const Grid& grid, double theta0) {
  std::vector<double> out(grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    out[j] = theta0 * std::cos(std::numbers::pi * grid.y(j) / (2.0 * grid.l));
  return out;
}

std::vector<double> cosine_freshwater_profile(const Grid& grid, double F0) {
  std::vector<double> out(grid.ny);
  for (int j = 0; j < grid.ny; ++j)
    out[j] = F0 * std::cos(std::numbers::pi * grid.y(j) / grid.l);
  return out;
}

}  // namespace thc
