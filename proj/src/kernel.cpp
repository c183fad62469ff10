#include "mixlap/kernel.hpp"

#include <cmath>
#include <functional>

namespace mixlap {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Unnormalized radial profiles on [0, r].
double profile(KernelFamily f, double rho, double r) {
  switch (f) {
    case KernelFamily::tent:
      return 1.0 - rho / r;
    case KernelFamily::truncated_gaussian: {
      // sigma = r/3, shifted down so the profile is continuous at the edge
      const double t = 3.0 * rho / r;
      return std::exp(-0.5 * t * t) - std::exp(-4.5);
    }
    case KernelFamily::bump: {
      const double t = rho / r;
      return std::exp(-1.0 / (1.0 - t * t));
    }
    case KernelFamily::truncated_fractional:
      raise(Errc::internal, "fractional kernels are evaluated directly");
  }
  return 0.0;
}

// Adaptive Simpson to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Mass of the unnormalized profile over R^dim.
double profile_mass(KernelFamily f, int dim, double r) {
  if (f == KernelFamily::tent) {
    // closed forms: 1D int = r, 2D int = pi r^2 / 3
    return dim == 1 ? r : kPi * r * r / 3.0;
  }
  auto radial = [&](double rho) {
    const double j = profile(f, std::min(rho, r), r);
    return dim == 1 ? 2.0 * j : 2.0 * kPi * rho * j;
  };
  return integrate(radial, 0.0, r, 1e-8);
}

}  // namespace

const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::tent: return "tent";
    case KernelFamily::truncated_gaussian: return "truncated_gaussian";
    case KernelFamily::bump: return "bump";
    case KernelFamily::truncated_fractional: return "truncated_fractional";
  }
  return "?";
}

double Kernel::eval_radial(double dist) const {
  dist = std::abs(dist);
  if (dist > radius) return 0.0;
  if (family == KernelFamily::truncated_fractional) {
    if (dist < epsilon) return 0.0;
    return weight * std::pow(dist, -(dim + order_p * s));
  }
  if (dist >= radius) return 0.0;
  return weight * norm_const * profile(family, dist, radius);
}

double Kernel::eval(const Eigen::Vector2d& d) const {
  return eval_radial(dim == 1 ? std::abs(d[0]) : d.norm());
}

Kernel make_kernel(KernelFamily family, int dim, double radius, double weight) {
  require(family != KernelFamily::truncated_fractional, Errc::invalid_spec,
          "use fractional_kernel for the fractional family");
  require(dim == 1 || dim == 2, Errc::invalid_spec, "dim must be 1 or 2");
  require(radius > 0.0, Errc::invalid_spec, "radius must be positive");
  Kernel k;
  k.family = family;
  k.dim = dim;
  k.radius = radius;
  k.weight = weight;
  k.norm_const = 1.0 / profile_mass(family, dim, radius);
  return k;
}

Kernel fractional_kernel(int dim, double s, double p, double epsilon, double r_cut,
                         double weight) {
  require(dim == 1 || dim == 2, Errc::invalid_spec, "dim must be 1 or 2");
  require(s > 0.0 && s < 1.0, Errc::invalid_order, "fractional order needs 0 < s < 1");
  require(static_cast<double>(dim) > p * s, Errc::invalid_order,
          "fractional kernel needs dim > p*s");
  require(epsilon > 0.0 && epsilon < r_cut, Errc::invalid_spec,
          "need 0 < epsilon < r_cut");
  Kernel k;
  k.family = KernelFamily::truncated_fractional;
  k.dim = dim;
  k.radius = r_cut;
  k.norm_const = 1.0;
  k.weight = weight;
  k.s = s;
  k.order_p = p;
  k.epsilon = epsilon;
  return k;
}

NormalizationReport normalization_check(const Kernel& k, double quadrature_h) {
  require(quadrature_h > 0.0 && quadrature_h <= k.radius / 8.0, Errc::invalid_spec,
          "quadrature_h must be in (0, radius/8]");
  const int m = static_cast<int>(std::ceil(k.radius / quadrature_h)) + 1;
  double sum = 0.0;
  if (k.dim == 1) {
    for (int i = -m; i < m; ++i) {
      const double x = (i + 0.5) * quadrature_h;
      sum += k.eval_radial(std::abs(x));
    }
    sum *= quadrature_h;
  } else {
    for (int j = -m; j < m; ++j)
      for (int i = -m; i < m; ++i) {
        const double x = (i + 0.5) * quadrature_h;
        const double y = (j + 0.5) * quadrature_h;
        sum += k.eval_radial(std::hypot(x, y));
      }
    sum *= quadrature_h * quadrature_h;
  }
  NormalizationReport rep;
  rep.value = sum;
  rep.normalizable = k.unit_mass_family();
  rep.within_tol = rep.normalizable && std::abs(sum - 1.0) <= 1e-4;
  return rep;
}

}  // namespace mixlap
