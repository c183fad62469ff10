#pragma once

#include <Eigen/Dense>
#include <string>

#include "mixlap/errors.hpp"

namespace mixlap {

enum class KernelFamily { tent, truncated_gaussian, bump, truncated_fractional };

const char* kernel_family_name(KernelFamily f);

// Radial convolution kernel with compact support. The three compact families
// are normalized to unit mass; `weight` rescales the whole kernel (used for
// local/nonlocal interpolation sweeps, at the cost of the unit-mass property).
//
// The truncated_fractional family approximates the kernel |x|^-(dim+p*s) by
// cutting it to epsilon <= |x| <= radius. It is neither normalized nor
// radially decreasing from the origin; modules that need those properties
// reject it.
struct Kernel {
  KernelFamily family = KernelFamily::tent;
  int dim = 1;
  double radius = 1.0;      // support radius (outer cutoff for fractional)
  double norm_const = 1.0;  // profile scaling making the mass 1 (compact families)
  double weight = 1.0;

  double s = 0.0;        // fractional order
  double order_p = 0.0;  // p in |x|^-(dim+p*s)
  double epsilon = 0.0;  // inner cutoff

  // J at distance |x| (0 beyond the support).
  double eval_radial(double dist) const;
  double eval(const Eigen::Vector2d& displacement) const;

  bool radially_decreasing() const { return family != KernelFamily::truncated_fractional; }
  bool unit_mass_family() const { return family != KernelFamily::truncated_fractional; }

  Kernel scaled(double w) const {
    Kernel k = *this;
    k.weight = weight * w;
    return k;
  }
};

Kernel make_kernel(KernelFamily family, int dim, double radius, double weight = 1.0);

// |x|^-(dim + p*s) on epsilon <= |x| <= r_cut, zero elsewhere.
// Requires 0 < s < 1, dim > p*s, 0 < epsilon < r_cut.
Kernel fractional_kernel(int dim, double s, double p, double epsilon, double r_cut,
                         double weight = 1.0);

struct NormalizationReport {
  double value = 0.0;       // Riemann mass of the kernel over its support
  bool normalizable = true; // false for the fractional family
  bool within_tol = false;  // |value - 1| <= 1e-4 (compact families only)
};

// Midpoint Riemann mass over the support; quadrature_h must be <= radius/8.
NormalizationReport normalization_check(const Kernel& k, double quadrature_h);

}  // namespace mixlap
