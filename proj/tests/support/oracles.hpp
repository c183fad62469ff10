#pragma once

// Test-only reference implementations, deliberately independent of the library
// code paths they are used to check: plain double loops over all cell pairs,
// closed-form tridiagonal spectra, central differences, permutation searches.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mixlap/energy.hpp"
#include "mixlap/grid.hpp"
#include "mixlap/kernel.hpp"
#include "mixlap/rng.hpp"

namespace oracle {

// Double integral sum over all ordered cell pairs, direct kernel evaluation.
inline double nonlocal_energy(const mixlap::Grid& g, const mixlap::Kernel& k,
                              const Eigen::ArrayXd& u, double p) {
  const int cells = g.cells();
  const double w_scale = std::pow(g.cell_volume(), 2);
  double sum = 0.0;
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      if (i == j) continue;
      const Eigen::Vector2d d = g.center(i) - g.center(j);
      const double w = k.eval(d) * w_scale;
      if (w == 0.0) continue;
      sum += std::pow(std::abs(u[i] - u[j]), p) * w;
    }
  return sum;
}

// Forward-difference gradient energy, written out directly.
inline double local_energy(const mixlap::Grid& g, const Eigen::ArrayXd& u, double p) {
  double sum = 0.0;
  const double h = g.h;
  for (int id = 0; id < g.cells(); ++id) {
    const int ix = g.ix(id), iy = g.iy(id);
    const double ux = ((ix + 1 < g.n) ? u[g.index(ix + 1, iy)] : 0.0) - u[id];
    double gsq = (ux / h) * (ux / h);
    if (g.dim == 2) {
      const double uy = ((iy + 1 < g.n) ? u[g.index(ix, iy + 1)] : 0.0) - u[id];
      gsq += (uy / h) * (uy / h);
    }
    sum += std::pow(gsq, 0.5 * p) * g.cell_volume();
  }
  return sum;
}

// Eigenvalues of the size-m Dirichlet tridiagonal (2,-1)/h^2 matrix.
inline double tridiag_eigenvalue(int m, double h, int k) {
  const double s = std::sin(0.5 * k * M_PI / (m + 1));
  return 4.0 * s * s / (h * h);
}

// Central difference of a functional along a direction.
template <class F>
double central_difference(F&& f, const mixlap::Field& u, const mixlap::Field& dir,
                          double eps) {
  mixlap::Field up = u, dn = u;
  up.values += eps * dir.values;
  dn.values -= eps * dir.values;
  return (f(up) - f(dn)) / (2.0 * eps);
}

// Random field supported on the mask, values in (lo, hi).
inline mixlap::Field random_field(const mixlap::Grid& g, const mixlap::Mask& mask,
                                  mixlap::SplitMix64& rng, double lo = -1.0,
                                  double hi = 1.0) {
  Eigen::ArrayXd v(g.cells());
  for (int i = 0; i < g.cells(); ++i) v[i] = mask[i] ? rng.uniform(lo, hi) : 0.0;
  return mixlap::make_field(g, mask, std::move(v));
}

// Minimum of sum |v_{k+1}-v_k|^p (zero-padded ends) over all permutations.
inline double min_path_energy_over_permutations(std::vector<double> vals, double p) {
  std::sort(vals.begin(), vals.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double e = std::pow(std::abs(vals.front()), p) + std::pow(std::abs(vals.back()), p);
    for (size_t k = 0; k + 1 < vals.size(); ++k)
      e += std::pow(std::abs(vals[k + 1] - vals[k]), p);
    best = std::min(best, e);
  } while (std::next_permutation(vals.begin(), vals.end()));
  return best;
}

}  // namespace oracle
