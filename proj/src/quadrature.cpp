#include "exfact/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

#include "exfact/error.hpp"

namespace exfact {

namespace {

// Kronrod 15-point nodes on [-1, 1] (non-negative half) and weights; every
// odd-index node is a 7-point Gauss node.
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kKronrod[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kGauss[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                              0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const Integrand& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kKronrod[7];
  double g = fc * kGauss[3];
  for (int i = 0; i < 7; ++i) {
    const double x = h * kNodes[i];
    const double s = f(c - x) + f(c + x);
    k += kKronrod[i] * s;
    if (i % 2 == 1) g += kGauss[i / 2] * s;
  }
  Panel p{a, b, k * h, std::abs((k - g) * h)};
  if (!std::isfinite(p.value)) throw Error("integrand is not finite on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  return p;
}

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b, std::span<const double> breaks,
                           const QuadratureOptions& opt) {
  if (!(a <= b)) throw Error("integrate: lower bound exceeds upper bound");
  QuadratureResult out;
  if (a == b) return out;
  if (std::isinf(b)) {
    const Integrand g = [&](double x) {
      const double y = 1.0 - x;
      return f(a + x / y) / (y * y);
    };
    std::vector<double> mapped;
    for (double s : breaks) {
      if (s > a && std::isfinite(s)) mapped.push_back((s - a) / (1.0 + s - a));
    }
    return integrate(g, 0.0, 1.0, mapped, opt);
  }

  std::vector<double> cuts{a, b};
  for (double s : breaks) {
    if (s > a && s < b) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Panel> queue;
  double value = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Panel p = gk15(f, cuts[i], cuts[i + 1]);
    value += p.value;
    error += p.error;
    queue.push(p);
  }
  std::size_t panels = queue.size();
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value))) {
    if (panels >= opt.max_panels) {
      throw ConvergenceError("integrate: panel budget exhausted (error estimate " + std::to_string(error) +
                                 ", value " + std::to_string(value) + ")",
                             error, panels);
    }
    const Panel worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw ConvergenceError("integrate: panel at machine resolution near " + std::to_string(mid) +
                                 " (error estimate " + std::to_string(error) + ")",
                             error, panels);
    }
    queue.pop();
    const Panel l = gk15(f, worst.a, mid);
    const Panel r = gk15(f, mid, worst.b);
    value += l.value + r.value - worst.value;
    error += l.error + r.error - worst.error;
    queue.push(l);
    queue.push(r);
    ++panels;
  }
  // Re-sum to shed the drift of the running totals.
  value = 0.0;
  error = 0.0;
  while (!queue.empty()) {
    value += queue.top().value;
    error += queue.top().error;
    queue.pop();
  }
  out.value = value;
  out.error = error;
  out.panels = panels;
  out.evaluations = 15 * (2 * panels - (cuts.size() - 1));
  return out;
}

double sphere_area(int d) {
  if (d < 1) throw Error("sphere_area needs d >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

std::vector<double> geometric_breaks(double a, double b, double q) {
  if (!(a > 0.0) || !(q > 1.0)) throw Error("geometric_breaks needs a > 0 and q > 1");
  std::vector<double> out;
  for (double s = a * q; s < b && std::isfinite(s); s *= q) out.push_back(s);
  return out;
}

QuadratureResult radial_integral(const RadialProfile& profile, double eps, double outer, const QuadratureOptions& opt) {
  if (profile.dimension < 1) throw Error("radial_integral needs dimension >= 1");
  if (!(eps >= 0.0) || !(outer > eps)) throw Error("radial_integral needs 0 <= eps < outer");
  const int d = profile.dimension;
  const Integrand g = [&](double s) {
    const double u = profile.integrand(s);
    return u == 0.0 ? 0.0 : u * std::pow(s, d - 1);
  };
  std::vector<double> breaks = profile.breaks;
  if (eps > 0.0) {
    const double top = std::isfinite(outer) ? outer : std::max(1.0, 2.0 * eps);
    for (double s : geometric_breaks(eps, top)) breaks.push_back(s);
  }
  QuadratureResult r = integrate(g, eps, outer, breaks, opt);
  const double area = sphere_area(d);
  r.value *= area;
  r.error *= area;
  return r;
}

}  // namespace exfact
