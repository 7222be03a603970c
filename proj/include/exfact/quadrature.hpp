#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature and radially reduced integrals.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace exfact {

using Integrand = std::function<double(double)>;

struct QuadratureOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  std::size_t max_panels = 20000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // Kronrod error estimate, summed over panels
  std::size_t evaluations = 0;
  std::size_t panels = 0;
};

/// Integral over [a, b]; `breaks` (inside (a, b), any order) seed the initial
/// panels. b = +inf is mapped to [0, 1) by s = a + x / (1 - x).
/// Throws ConvergenceError when the panel budget is exhausted.
QuadratureResult integrate(const Integrand& f, double a, double b, std::span<const double> breaks = {},
                           const QuadratureOptions& opt = {});

/// Area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

/// Breakpoints a q^k, k = 1, 2, ... strictly inside (a, b), for a > 0, q > 1.
std::vector<double> geometric_breaks(double a, double b, double q = 2.0);

/// Radially symmetric integrand u(s) on R^d.
struct RadialProfile {
  int dimension = 1;
  Integrand integrand;          // u(s), integrated against |S^{d-1}| s^{d-1} ds
  std::vector<double> breaks;   // kinks or bump transitions of u
};

/// |S^{d-1}| int_eps^outer u(s) s^{d-1} ds. Geometric panels are added on
/// (eps, outer) when eps > 0 so power laws at the cutoff stay resolved.
QuadratureResult radial_integral(const RadialProfile& profile, double eps,
                                 double outer = std::numeric_limits<double>::infinity(),
                                 const QuadratureOptions& opt = {});

}  // namespace exfact
