#include "exfact/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace exfact {

namespace {

bool touches_outside(const Grid& g, std::size_t flat) {
  for (std::size_t a = 0; a < g.rank(); ++a) {
    const Axis& ax = g.axis(a);
    const std::size_t i = g.index_along(flat, a);
    if (ax.kind() == AxisKind::cartesian && (i <= 1 || i + 2 >= ax.size())) return true;
    if (ax.kind() == AxisKind::radial && i + 1 == ax.size()) return true;
  }
  return false;
}

double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace

ZeroReport chi_zero_report(const NuclearFunction& chi, const std::vector<bool>& sigma_n, double theta) {
  const Grid& g = chi.grid();
  if (!sigma_n.empty() && sigma_n.size() != g.size()) throw ShapeError("tube mask does not match the nuclear grid");
  ZeroReport rep;
  double mx = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_boundary(i)) mx = std::max(mx, std::abs(chi[i]));
  }
  std::vector<unsigned char> zero(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_boundary(i) && std::abs(chi[i]) <= theta * mx) zero[i] = 1;
  }
  // Flood fill from near-zeros adjacent to the Dirichlet layer.
  std::vector<unsigned char> tail(g.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (zero[i] && touches_outside(g, i)) {
      tail[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t a = 0; a < g.rank(); ++a) {
      const std::size_t k = g.index_along(i, a);
      const std::size_t s = g.stride(a);
      const std::size_t nb[2] = {k > 0 ? i - s : i, k + 1 < g.axis(a).size() ? i + s : i};
      for (std::size_t j : nb) {
        if (j != i && zero[j] && !tail[j]) {
          tail[j] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  bool outside = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!zero[i]) continue;
    if (tail[i]) {
      rep.tail_underflow.push_back(i);
      continue;
    }
    const bool in = !sigma_n.empty() && sigma_n[i];
    rep.indices.push_back(i);
    rep.coordinates.push_back(g.coordinate(i, 0));
    rep.inside_tube.push_back(in);
    outside = outside || !in;
  }
  rep.consistent = !outside;
  if (rep.indices.empty()) {
    rep.verdict = "consistent: no near-zeros of chi";
  } else if (rep.consistent) {
    rep.verdict = "consistent: near-zeros of chi only inside the nuclear collision tube";
  } else {
    rep.verdict =
        "inconsistent: near-zeros of chi outside the nuclear collision tube "
        "(excited state or state not factorizable away from collisions)";
  }
  return rep;
}

NuclearFunction marginal_chi(const Field& psi, const std::vector<double>& phase) {
  NuclearFunction n = marginal_norm(psi);
  if (!phase.empty()) {
    if (phase.size() != n.size()) throw ShapeError("phase length does not match the nuclear grid");
    for (std::size_t i = 0; i < n.size(); ++i) n[i] *= std::polar(1.0, phase[i]);
  }
  return n;
}

Conditional conditional_phi(const Field& psi, const NuclearFunction& chi, double theta) {
  if (!(theta > 0.0)) throw Error("theta_zero must be positive");
  const Grid& g = psi.grid();
  if (!(*g.subgrid(AxisLabel::nuclear) == chi.grid())) throw ShapeError("chi lives on another nuclear grid");
  const double mx = max_abs(chi.values());
  Conditional out{Field(psi.grid_ptr()), std::vector<bool>(chi.size(), false)};
  bool any = false;
  for (std::size_t k = 0; k < chi.size(); ++k) {
    out.valid[k] = std::abs(chi[k]) > theta * mx;
    any = any || out.valid[k];
  }
  if (!any) throw Error("conditional_phi: valid set is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t k = g.project(i, AxisLabel::nuclear);
    if (out.valid[k]) out.phi[i] = psi[i] / chi[k];
  }
  return out;
}

NuclearFunction agmon_chi(const GridPtr& nuclear_grid, double c_prime) {
  if (!(c_prime > 0.0)) throw Error("agmon_chi needs c' > 0");
  NuclearFunction chi(Field::sample(nuclear_grid, [c_prime](const Point& p) {
    double s = 1.0;
    for (double x : p.R) s += x * x;
    return cplx(std::exp(-c_prime * std::sqrt(s)));
  }));
  chi *= 1.0 / norm(chi);
  return chi;
}

namespace {

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (x.size() < 2 || den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

}  // namespace

DecayEstimate decay_rate_estimate(const Field& psi) {
  const Grid& g = psi.grid();
  double L = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < g.rank(); ++a) {
    const AxisSpec& s = g.axis(a).spec();
    L = std::min(L, std::max(std::abs(s.lower), std::abs(s.upper)));
  }
  std::vector<double> x, y, xi, yi, xo, yo;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    double r2 = 0.0;
    for (std::size_t a = 0; a < g.rank(); ++a) r2 += g.coordinate(i, a) * g.coordinate(i, a);
    const double r = std::sqrt(r2);
    const double v = std::abs(psi[i]);
    if (r < 0.75 * L || r >= L || !(v > 1e-280)) continue;
    x.push_back(r);
    y.push_back(std::log(v));
    (r < 0.875 * L ? xi : xo).push_back(r);
    (r < 0.875 * L ? yi : yo).push_back(std::log(v));
  }
  DecayEstimate d;
  d.rate = -fit_slope(x, y);
  if (!(d.rate > 0.0)) throw Error("decay_rate_estimate: tail does not decay (log-slope >= 0)");
  d.inner_rate = -fit_slope(xi, yi);
  d.outer_rate = -fit_slope(xo, yo);
  d.super_exponential = d.inner_rate > 0.0 && d.outer_rate > 1.08 * d.inner_rate;
  d.recommended_c_prime = d.rate / std::sqrt(2.0);
  return d;
}

void diagnose(FactorizationResult& f, const Field& psi, double theta, const std::vector<bool>& sigma_n) {
  const Grid& g = psi.grid();
  const NuclearFunction n = marginal_norm(f.phi);
  double dev = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (f.valid[k]) dev = std::max(dev, std::abs(n[k].real() - 1.0));
  }
  f.diagnostics.max_normalization_deviation = dev;
  const double mx = max_abs(psi.values());
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t k = g.project(i, AxisLabel::nuclear);
    if (f.valid[k]) err = std::max(err, std::abs(psi[i] - f.phi[i] * f.chi[k]));
  }
  f.diagnostics.reconstruction_error = mx > 0.0 ? err / mx : err;
  f.diagnostics.zeros = chi_zero_report(f.chi, sigma_n, theta);
}

FactorizationResult renormalize_pair(const Field& phibar, const NuclearFunction& chibar, const std::vector<bool>& valid,
                                     double theta) {
  const Grid& g = phibar.grid();
  if (valid.size() != chibar.size()) throw ShapeError("valid mask does not match the nuclear grid");
  const NuclearFunction n = marginal_norm(phibar);
  const double mx = max_abs(n.values());
  if (!(mx > 0.0)) throw Error("renormalize_pair: phibar vanishes everywhere");
  // Fibers where phibar vanishes (the Dirichlet layer, nodes of Psi) leave
  // the valid set.
  std::vector<bool> keep = valid;
  for (std::size_t k = 0; k < n.size(); ++k) keep[k] = valid[k] && n[k].real() > theta * mx;
  FactorizationResult out{NuclearFunction(chibar.grid_ptr()), Field(phibar.grid_ptr()), keep, {}, {}};
  for (std::size_t k = 0; k < n.size(); ++k) out.chi[k] = keep[k] ? chibar[k] * n[k].real() : chibar[k];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t k = g.project(i, AxisLabel::nuclear);
    if (keep[k]) out.phi[i] = phibar[i] / n[k].real();
  }
  Field prod = multiply(phibar, chibar);
  diagnose(out, prod, theta);
  return out;
}

FactorizationResult factorize_marginal(const Field& psi, const std::vector<double>& phase, double theta,
                                       const std::vector<bool>& sigma_n) {
  FactorizationResult f;
  f.chi = marginal_chi(psi, phase);
  auto c = conditional_phi(psi, f.chi, theta);
  f.phi = std::move(c.phi);
  f.valid = std::move(c.valid);
  f.phase = phase;
  diagnose(f, psi, theta, sigma_n);
  return f;
}

FactorizationResult factorize_agmon(const Field& psi, double c_prime, double theta) {
  FactorizationResult f;
  f.chi = agmon_chi(psi.grid().subgrid(AxisLabel::nuclear), c_prime);
  auto c = conditional_phi(psi, f.chi, theta);
  f.phi = std::move(c.phi);
  f.valid = std::move(c.valid);
  diagnose(f, psi, theta);
  return f;
}

std::vector<bool> excluded_points(const Grid& grid, const std::vector<bool>& valid,
                                  const std::vector<bool>& collision) {
  std::vector<bool> ex(grid.size(), false);
  if (!collision.empty() && collision.size() != grid.size()) throw ShapeError("collision mask does not match grid");
  const bool split = grid.has(AxisLabel::nuclear) && !valid.empty();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    bool e = !collision.empty() && collision[i];
    if (split && !valid[grid.project(i, AxisLabel::nuclear)]) e = true;
    ex[i] = e;
  }
  return ex;
}

}  // namespace exfact
