#include "exfact/sobolev.hpp"

#include <algorithm>
#include <cmath>

namespace exfact {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::converging: return "converging";
    case Verdict::diverging: return "diverging";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

Point point_at(const Grid& g, std::size_t flat) {
  Point p;
  for (std::size_t a = 0; a < g.rank(); ++a) {
    const double x = g.coordinate(flat, a);
    p.coords.push_back(x);
    (g.axis(a).label() == AxisLabel::electronic ? p.r : p.R).push_back(x);
  }
  return p;
}

// Quadrature weight of the edge from node i to node i+1 along axis a, times
// the node weights of the remaining axes. Radial axes include the outer face.
double edge_weight(const Grid& g, std::size_t flat, std::size_t a) {
  const Axis& ax = g.axis(a);
  const std::size_t i = g.index_along(flat, a);
  double w = 1.0;
  for (std::size_t b = 0; b < g.rank(); ++b) {
    if (b != a) w *= g.axis(b).weight(g.index_along(flat, b));
  }
  if (ax.kind() == AxisKind::cartesian) return i + 1 < ax.size() ? w * ax.spacing() : 0.0;
  return w * ax.face_area(i + 1) * ax.spacing();
}

double weighted_norm(const Field& f, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::norm(f[i]);
  return std::sqrt(s);
}

}  // namespace

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope needs at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error("loglog_slope needs positive data");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SobolevLevel sobolev_level(const Field& u, const Window& window) {
  const Grid& g = u.grid();
  std::vector<unsigned char> in(g.size(), 1);
  if (window) {
    for (std::size_t i = 0; i < g.size(); ++i) in[i] = window(point_at(g, i)) ? 1 : 0;
  }
  SobolevLevel lv;
  for (std::size_t a = 0; a < g.rank(); ++a) lv.h = std::max(lv.h, g.axis(a).spacing());

  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = in[i] ? g.weight(i) : 0.0;
  lv.l2 = weighted_norm(u, w);

  for (std::size_t a = 0; a < g.rank(); ++a) {
    std::vector<double> we(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) we[i] = in[i] ? edge_weight(g, i, a) : 0.0;
    lv.h1 += weighted_norm(forward_difference(u, a), we);
  }

  for (std::size_t a = 0; a < g.rank(); ++a) {
    for (std::size_t b = 0; b < g.rank(); ++b) {
      if (a == b) {
        lv.h2 += weighted_norm(second_difference(u, a), w);
      } else if (g.axis(a).kind() == AxisKind::cartesian && g.axis(b).kind() == AxisKind::cartesian) {
        lv.h2 += weighted_norm(mixed_difference(u, a, b), w);
      } else {
        lv.h2 += weighted_norm(forward_difference(forward_difference(u, a), b), w);
      }
    }
  }
  return lv;
}

Verdict ladder_verdict(std::span<const double> h, std::span<const double> norms, const SobolevThresholds& t) {
  const std::size_t n = norms.size();
  if (n < 2 || h.size() != n) throw Error("ladder_verdict needs at least two matching levels");
  const double a = norms[n - 2];
  const double b = norms[n - 1];
  if (a == 0.0 && b == 0.0) return Verdict::converging;
  if (a > 0.0 && b > 0.0) {
    const double slope = std::log(b / a) / std::log(h[n - 2] / h[n - 1]);
    if (slope > t.diverging_slope) return Verdict::diverging;
  }
  if (std::abs(b - a) < t.converging_change * std::max(std::abs(a), std::abs(b))) return Verdict::converging;
  return Verdict::inconclusive;
}

SobolevReport sobolev_report(std::span<const Field> family, const Window& window, const SobolevThresholds& t) {
  if (family.size() < 3) throw Error("sobolev_report needs at least 3 refinement levels");
  SobolevReport rep;
  for (const auto& f : family) rep.levels.push_back(sobolev_level(f, window));
  for (std::size_t k = 1; k < rep.levels.size(); ++k) {
    if (!(rep.levels[k].h < rep.levels[k - 1].h)) throw Error("sobolev_report levels must have decreasing h");
  }
  std::vector<double> h, l2, h1, h2;
  for (const auto& lv : rep.levels) {
    h.push_back(lv.h);
    l2.push_back(lv.l2);
    h1.push_back(lv.h1);
    h2.push_back(lv.h2);
  }
  rep.l2 = ladder_verdict(h, l2, t);
  rep.h1 = ladder_verdict(h, h1, t);
  rep.h2 = ladder_verdict(h, h2, t);
  return rep;
}

}  // namespace exfact
