#include "exfact/counterexamples.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exfact/error.hpp"
#include "exfact/grid.hpp"
#include "exfact/sobolev.hpp"

namespace exfact {

std::string to_string(Mollifier m) {
  return m == Mollifier::exp_reciprocal ? "exp_reciprocal" : "exp_reciprocal_square";
}

Mollifier parse_mollifier(const std::string& s) {
  if (s == "exp_reciprocal") return Mollifier::exp_reciprocal;
  if (s == "exp_reciprocal_square") return Mollifier::exp_reciprocal_square;
  throw Error("unknown mollifier '" + s + "'");
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::finite: return "finite";
    case Membership::divergent: return "divergent";
    case Membership::marginal: return "marginal";
    case Membership::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(WindmillMode m) { return m == WindmillMode::origin ? "origin" : "infinity"; }

WindmillMode parse_windmill_mode(const std::string& s) {
  if (s == "origin") return WindmillMode::origin;
  if (s == "infinity") return WindmillMode::infinity;
  throw Error("unknown windmill mode '" + s + "'");
}

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// psi and its first two derivatives; zero for x <= 0.
Jet mollifier_jet(Mollifier m, double x) {
  if (!(x > 0.0)) return {};
  if (m == Mollifier::exp_reciprocal) {
    const double p = std::exp(-1.0 / x);
    const double i = 1.0 / x;
    return {p, p * i * i, p * (i * i * i * i - 2.0 * i * i * i)};
  }
  const double i = 1.0 / x;
  const double p = std::exp(-i * i);
  const double i3 = i * i * i;
  return {p, 2.0 * p * i3, p * (4.0 * i3 * i3 - 6.0 * i3 * i)};
}

Membership from_power(double p) {
  if (std::abs(p) <= 1e-12) return Membership::marginal;
  return p > 0.0 ? Membership::finite : Membership::divergent;
}

std::vector<double> default_kappa(double base, int first, int last) {
  std::vector<double> k;
  for (int i = first; i <= last; ++i) k.push_back(std::pow(base, i));
  return k;
}

const QuadratureOptions kOuter{1e-11, 0.0, 200000};
const QuadratureOptions kInner{1e-12, 0.0, 20000};

}  // namespace

Jet SmoothBump::jet(double t) const {
  const double a = std::abs(t);
  if (a <= 0.5) return {1.0, 0.0, 0.0};
  if (a >= 1.0) return {};
  const double x = 2.0 - 2.0 * a;
  const Jet A = mollifier_jet(mollifier_, x);
  const Jet b = mollifier_jet(mollifier_, 1.0 - x);
  const Jet B{b.value, -b.d1, b.d2};
  const double S = A.value + B.value;
  const double N = A.d1 * B.value - A.value * B.d1;
  const double Np = A.d2 * B.value - A.value * B.d2;
  const double s = A.value / S;
  const double s1 = N / (S * S);
  const double s2 = Np / (S * S) - 2.0 * N * (A.d1 + B.d1) / (S * S * S);
  const double sign = t > 0.0 ? 1.0 : -1.0;
  return {s, -2.0 * sign * s1, 4.0 * s2};
}

double smooth_bump(double t, Mollifier m) { return SmoothBump(m)(t); }

LadderFit classify_ladder(std::span<const double> kappa, std::span<const double> value, double delta) {
  const std::size_t n = value.size();
  if (n < 3 || kappa.size() != n) throw Error("classify_ladder needs at least 3 matching ladder points");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(kappa[i] > kappa[i - 1])) throw Error("classify_ladder needs an increasing refinement parameter");
  }
  LadderFit fit;
  fit.kappa.assign(kappa.begin(), kappa.end());
  fit.value.assign(value.begin(), value.end());

  const double scale = std::max(std::abs(value[n - 1]), std::abs(value[n - 2]));
  const double d_last = value[n - 1] - value[n - 2];
  const double d_prev = value[n - 2] - value[n - 3];
  if (std::abs(d_last) <= 1e-10 * scale || std::abs(d_prev) <= 1e-10 * scale) {
    fit.verdict = Membership::finite;
    return fit;
  }
  if ((d_last > 0.0) != (d_prev > 0.0)) {
    fit.verdict = Membership::finite;  // oscillating at quadrature noise
    return fit;
  }
  auto local = [&](std::size_t k) {  // exponent from increments ending at k
    const double r = (value[k] - value[k - 1]) / (value[k - 1] - value[k - 2]);
    const double q = std::sqrt((kappa[k] / kappa[k - 1]) * (kappa[k - 1] / kappa[k - 2]));
    return std::log(r) / std::log(q);
  };
  const double rho = d_last / d_prev;
  fit.exponent = local(n - 1);
  if (n >= 4) {
    const double prev = (value[n - 2] - value[n - 3]) / (value[n - 3] - value[n - 4]) > 0.0 ? local(n - 2) : fit.exponent;
    fit.half_width = 0.5 * std::abs(fit.exponent - prev);
  }
  if (rho > 1.0 + delta) {
    const bool increasing = value[n - 1] > value[n - 2] && value[n - 2] > value[n - 3];
    const bool stable = fit.half_width <= 0.125 * std::abs(fit.exponent);
    fit.verdict = increasing && stable ? Membership::divergent : Membership::inconclusive;
  } else if (rho >= 1.0 - delta) {
    fit.verdict = d_last > 0.0 ? Membership::marginal : Membership::inconclusive;
  } else {
    fit.verdict = Membership::finite;
  }
  return fit;
}

// ---------------------------------------------------------------------------

bool ProductReport::matches_printed() const {
  return std::all_of(norms.begin(), norms.end(), [](const NormLadder& l) { return l.matches_printed(); });
}

bool ProductReport::matches_derived() const {
  return std::all_of(norms.begin(), norms.end(), [](const NormLadder& l) { return l.matches_derived(); });
}

namespace {

// Squared L2, H1 and H2 norms of u(s) = tau(s) s^p on {eps <= |x|} in R^d.
struct PowerBump {
  SmoothBump tau;
  double p;
  int d;

  double density(double s, int order) const {
    const Jet t = tau.jet(s);
    const double sp = std::pow(s, p);
    const double u = t.value * sp;
    double out = u * u;
    if (order == 0) return out;
    const double u1 = t.d1 * sp + p * t.value * sp / s;
    out += u1 * u1;
    if (order == 1) return out;
    const double u2 = t.d2 * sp + 2.0 * p * t.d1 * sp / s + p * (p - 1.0) * t.value * sp / (s * s);
    return out + u2 * u2 + (d - 1) * (u1 / s) * (u1 / s);
  }

  double norm_sq(double eps, int order) const {
    RadialProfile prof{d, [this, order](double s) { return density(s, order); }, {0.5}};
    return radial_integral(prof, eps, 1.0, kOuter).value;
  }
};

// ||phi chi||^2 on {|x| >= eps}, polar in the (|r|, |R|) quarter plane.
double product_norm_sq(const SmoothBump& tau, double alpha, double beta, int a, int b, double eps) {
  const double radial_power = 2.0 * alpha + 2.0 * beta + a + b - 1.0;
  const double sin_power = 2.0 * beta + b - 1.0;
  const Integrand outer = [&](double rho) {
    const double t = tau(rho);
    if (t == 0.0) return 0.0;
    const Integrand inner = [&](double th) {
      const double g = tau(rho * std::sin(th));
      return g * g * std::pow(std::cos(th), a - 1) * std::pow(std::sin(th), sin_power);
    };
    std::vector<double> br;
    if (rho > 0.5) br.push_back(std::asin(0.5 / rho));
    const double ang = integrate(inner, 0.0, 0.5 * std::numbers::pi, br, kInner).value;
    return t * t * std::pow(rho, radial_power) * ang;
  };
  std::vector<double> br = geometric_breaks(eps, 1.0);
  br.push_back(0.5);
  return sphere_area(a) * sphere_area(b) * integrate(outer, eps, 1.0, br, kOuter).value;
}

NormLadder run_ladder(const std::string& name, int dim, std::span<const double> kappa,
                      const std::function<double(double)>& value_at_kappa) {
  std::vector<double> v(kappa.size());
  parallel_tasks(kappa.size(), [&](std::size_t i) { v[i] = value_at_kappa(kappa[i]); });
  NormLadder l;
  l.name = name;
  l.dimension = dim;
  l.fit = classify_ladder(kappa, v);
  return l;
}

}  // namespace

ProductReport appendix_b_norms(double alpha, double beta, int n_e, int n_n1, std::span<const double> kappa_in,
                               Mollifier m) {
  if (n_e < 1 || n_n1 < 1) throw Error("appendix_b_norms needs N_e >= 1 and N_n1 >= 1");
  const int b = 3 * n_n1;
  const int a = 3 * n_e;
  const int D = a + b;
  if (!(2.0 * beta + b > 0.0)) throw Error("appendix_b_norms: chi is not locally square integrable (2 beta + 3 N_n1 <= 0)");
  std::vector<double> kappa = kappa_in.empty() ? default_kappa(10.0, 1, 6) : std::vector<double>(kappa_in.begin(), kappa_in.end());

  ProductReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.n_e = n_e;
  rep.n_n1 = n_n1;
  rep.alpha_threshold = 2.0 - 1.5 * D / 3.0;
  rep.beta_threshold = 2.0 - 1.5 * n_n1;
  rep.printed_product_threshold = -3.0 * n_n1;
  rep.derived_product_threshold = -0.5 * D;
  rep.premises_hold = alpha > rep.alpha_threshold && beta > rep.beta_threshold;

  const SmoothBump tau(m);
  const PowerBump phi{tau, alpha, D};
  const PowerBump chi{tau, beta, b};
  const char* order_name[3] = {"L2", "H1", "H2"};
  for (int order = 0; order < 3; ++order) {
    NormLadder l = run_ladder(std::string("phi.") + order_name[order], D, kappa,
                              [&](double k) { return phi.norm_sq(1.0 / k, order); });
    l.derived = from_power(2.0 * alpha - 2.0 * order + D);
    if (order == 2) l.printed = alpha > rep.alpha_threshold ? Membership::finite : Membership::divergent;
    rep.norms.push_back(std::move(l));
  }
  for (int order = 0; order < 3; ++order) {
    NormLadder l = run_ladder(std::string("chi.") + order_name[order], b, kappa,
                              [&](double k) { return chi.norm_sq(1.0 / k, order); });
    l.derived = from_power(2.0 * beta - 2.0 * order + b);
    if (order == 2) l.printed = beta > rep.beta_threshold ? Membership::finite : Membership::divergent;
    rep.norms.push_back(std::move(l));
  }
  NormLadder prod = run_ladder("product.L2", D, kappa,
                               [&](double k) { return product_norm_sq(tau, alpha, beta, a, b, 1.0 / k); });
  prod.derived = from_power(2.0 * (alpha + beta) + D);
  const double s = alpha + beta - rep.printed_product_threshold;
  prod.printed = std::abs(s) <= 1e-12 ? Membership::marginal : (s < 0.0 ? Membership::divergent : Membership::finite);
  rep.norms.push_back(std::move(prod));
  return rep;
}

// ---------------------------------------------------------------------------

DiscontinuityReport appendix_c_sequence(int n_n, std::span<const double> j_list, Mollifier m, int n_e) {
  if (n_n < 3) throw Error("appendix_c_sequence needs N_n >= 3");
  if (n_e < 1) throw Error("appendix_c_sequence needs N_e >= 1");
  if (j_list.size() < 4) throw Error("appendix_c_sequence needs at least 4 values of j");
  for (std::size_t i = 0; i < j_list.size(); ++i) {
    if (!(j_list[i] >= 1.0)) throw Error("appendix_c_sequence needs j >= 1");
    if (i > 0 && !(j_list[i] > j_list[i - 1])) throw Error("appendix_c_sequence needs ascending j");
  }
  const int d = 3 * n_n;
  DiscontinuityReport rep;
  rep.n_n = n_n;
  rep.n_e = n_e;
  rep.mollifier = m;
  rep.beta = 2.0 - 1.5 * n_n + 0.125;
  rep.delta = 1.5 * n_n + rep.beta + 0.125;
  rep.predicted_slope = 2.0 * rep.delta - d - 2.0 * rep.beta;
  rep.premise_h2_decay = 2.0 + rep.delta < 1.5 * n_n;
  rep.j.assign(j_list.begin(), j_list.end());

  const SmoothBump tau(m);
  rep.f_norm_sq = radial_integral({3 * n_e, [&](double s) { const double t = tau(s); return t * t; }, {0.5}}, 0.0, 1.0, kOuter).value;

  const std::size_t n = j_list.size();
  rep.product_sq.resize(n);
  rep.g_l2_sq.resize(n);
  rep.g_h1_sq.resize(n);
  rep.g_h2_sq.resize(n);
  std::vector<char> ok(n, 0);
  parallel_tasks(n, [&](std::size_t i) {
    const double j = j_list[i];
    const double jd = std::pow(j, rep.delta);
    const double top = 1.0 / j;
    try {
      const RadialProfile prod{d, [&](double s) {
        const double g = jd * tau(j * s) * tau(s);
        return g * g * std::pow(s, 2.0 * rep.beta);
      }, {0.5 * top, 0.5}};
      const double pv = rep.f_norm_sq * radial_integral(prod, 0.0, top, kOuter).value;
      double h[3];
      for (int order = 0; order < 3; ++order) {
        const RadialProfile gp{d, [&, order](double s) {
          const Jet t = tau.jet(j * s);
          const double u = jd * t.value, u1 = jd * j * t.d1, u2 = jd * j * j * t.d2;
          double out = u * u;
          if (order >= 1) out += u1 * u1;
          if (order >= 2) out += u2 * u2 + (d - 1) * (u1 / s) * (u1 / s);
          return out;
        }, {0.5 * top}};
        h[order] = radial_integral(gp, 0.0, top, kOuter).value;
      }
      if (std::isfinite(pv) && pv > 0.0 && std::isfinite(h[2]) && h[0] > 0.0) {
        rep.product_sq[i] = pv;
        rep.g_l2_sq[i] = h[0];
        rep.g_h1_sq[i] = h[1];
        rep.g_h2_sq[i] = h[2];
        ok[i] = 1;
      }
    } catch (const Error&) {
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      double usable = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (ok[k]) usable = std::max(usable, j_list[k]);
      }
      throw Error("appendix_c_sequence: j = " + std::to_string(j_list[i]) +
                  " is beyond quadrature resolution; largest usable j in the list is " + std::to_string(usable));
    }
  }

  std::vector<double> fj, fv;
  for (std::size_t i = 0; i < n; ++i) {
    if (j_list[i] >= 2.0) {
      fj.push_back(j_list[i]);
      fv.push_back(rep.product_sq[i]);
    }
  }
  rep.fitted_j = fj;
  if (fj.size() < 2) throw Error("appendix_c_sequence needs at least two j >= 2 for the slope fit");
  rep.slope = loglog_slope(fj, fv);
  for (std::size_t i = 1; i < fj.size(); ++i) {
    const double s = std::log(fv[i] / fv[i - 1]) / std::log(fj[i] / fj[i - 1]);
    rep.slope_half_width = std::max(rep.slope_half_width, std::abs(s - rep.slope));
  }
  rep.g_vanishes_in_h2 = true;
  for (std::size_t i = 1; i < n; ++i) {
    const double ratio = rep.g_l2_sq[i] / rep.g_l2_sq[i - 1];
    const double expect = std::pow(j_list[i] / j_list[i - 1], 2.0 * rep.delta - d);
    rep.l2_scaling_error = std::max(rep.l2_scaling_error, std::abs(std::sqrt(ratio / expect) - 1.0));
    rep.g_vanishes_in_h2 = rep.g_vanishes_in_h2 && rep.g_h2_sq[i] < rep.g_h2_sq[i - 1];
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct Windmill {
  int n;
  int m;
  WindmillMode mode;
  SmoothBump tau;

  // Radial prefactor A(R) = R^n tau(R) or R^n (1 - tau(R)).
  Jet prefactor(double R) const {
    const Jet t = tau.jet(R);
    const Jet c = mode == WindmillMode::origin ? t : Jet{1.0 - t.value, -t.d1, -t.d2};
    const double rn = std::pow(R, n);
    const double dn = static_cast<double>(n);
    return {rn * c.value, dn * rn / R * c.value + rn * c.d1,
            dn * (dn - 1.0) * rn / (R * R) * c.value + 2.0 * dn * rn / R * c.d1 + rn * c.d2};
  }

  double width(double R) const { return std::pow(R, -2 * m); }  // r - R = t width(R)

  double low() const { return mode == WindmillMode::origin ? 0.0 : 0.5; }
  double high() const { return mode == WindmillMode::origin ? 1.0 : std::numeric_limits<double>::infinity(); }

  // int_{-1}^{1} g(t) dt with the plateau edges as breaks.
  static double over_t(const Integrand& g) {
    static const double br[2] = {-0.5, 0.5};
    return integrate(g, -1.0, 1.0, br, kInner).value;
  }

  // F(R)^2 = 4 pi int tau(w)^2 r^2 dr, so that f = |A| F.
  double F_sq(double R) const {
    const double w = width(R);
    return kFourPi * w * over_t([&](double t) {
      const double v = tau(t);
      const double r = R + t * w;
      return v * v * r * r;
    });
  }

  // Squared H2 density of Psi integrated over r, times 4 pi.
  double psi_h2_fiber(double R) const {
    const Jet A = prefactor(R);
    if (A.value == 0.0 && A.d1 == 0.0 && A.d2 == 0.0) return 0.0;
    const double w = width(R);
    const double p2m = 1.0 / w;  // R^{2m}
    const double dm = 2.0 * m;
    return kFourPi * w * over_t([&](double t) {
      const Jet s = tau.jet(t);
      const double r = R + t * w;
      const double wr = p2m;
      const double wR = dm * t / R - p2m;
      const double wRR = dm * (dm - 1.0) * t / (R * R) - 2.0 * dm * p2m / R;
      const double wrR = dm * p2m / R;
      const double u = A.value * s.value;
      const double ur = A.value * s.d1 * wr;
      const double uR = A.d1 * s.value + A.value * s.d1 * wR;
      const double urr = A.value * s.d2 * wr * wr;
      const double uRR = A.d2 * s.value + 2.0 * A.d1 * s.d1 * wR + A.value * (s.d2 * wR * wR + s.d1 * wRR);
      const double urR = A.d1 * s.d1 * wr + A.value * (s.d2 * wR * wr + s.d1 * wrR);
      const double dens = u * u + ur * ur + uR * uR + urr * urr + uRR * uRR + 2.0 * urR * urR +
                          2.0 * (ur / r) * (ur / r) + 2.0 * (uR / R) * (uR / R);
      return dens * r * r;
    });
  }

  // int |phi|^2 dr and int |d_r phi|^2 dr over the fiber, phi = Psi / f.
  double phi_fiber(double R, bool derivative) const {
    const Jet A = prefactor(R);
    if (A.value == 0.0) return 0.0;  // phi = 0 where the radial bump vanishes
    const double w = width(R);
    const double F2 = F_sq(R);
    return kFourPi * w * over_t([&](double t) {
      const Jet s = tau.jet(t);
      const double v = derivative ? s.d1 / w : s.value;
      const double r = R + t * w;
      return v * v * r * r;
    }) / F2;
  }

  // Outer R integral of a fiber quantity with measure 4 pi R^2 dR on [lo, hi].
  double outer(const std::function<double(double)>& fiber, double lo, double hi) const {
    std::vector<double> br{0.5, 1.0};
    if (mode == WindmillMode::origin) {
      for (double s : geometric_breaks(lo, hi)) br.push_back(s);
    } else {
      for (double s : geometric_breaks(1.0, hi)) br.push_back(s);
    }
    return integrate([&](double R) { return kFourPi * R * R * fiber(R); }, lo, hi, br, kOuter).value;
  }

  std::pair<double, double> range(double kappa) const {
    return mode == WindmillMode::origin ? std::pair{1.0 / kappa, 1.0} : std::pair{0.5, kappa};
  }
};

}  // namespace

WindmillReport appendix_d_windmill(int n, int m, std::span<const double> kappa_in, WindmillMode mode,
                                   Mollifier mollifier) {
  if (mode == WindmillMode::origin && !(n > 0 && m < 0)) throw Error("windmill at the origin needs n > 0 and m < 0");
  if (mode == WindmillMode::infinity && !(n < 0 && m > 0)) throw Error("windmill at infinity needs n < 0 and m > 0");
  std::vector<double> kappa = kappa_in.empty() ? default_kappa(2.0, 2, 8) : std::vector<double>(kappa_in.begin(), kappa_in.end());
  // The cutoffs must reach past the transition of the radial bump into its plateau.
  if (!(kappa.front() > (mode == WindmillMode::origin ? 2.0 : 1.0))) {
    throw Error("windmill ladder does not resolve the support of tau(R): first kappa must exceed " +
                std::string(mode == WindmillMode::origin ? "2" : "1"));
  }
  const Windmill wm{n, m, mode, SmoothBump(mollifier)};

  WindmillReport rep;
  rep.n = n;
  rep.m = m;
  rep.mode = mode;
  rep.mollifier = mollifier;
  rep.printed_threshold = -3.5 * m - 2.0;
  rep.derived_threshold = -3.0 * m - 2.5;
  const double p_psi = 2.0 * n + 6.0 * m + 5.0;  // Psi H2 density ~ R^{p - 1} near the cutoff
  const double p_dr = 4.0 * m + 3.0;              // ||d_r phi||^2 density ~ R^{p - 1}
  const bool at_origin = mode == WindmillMode::origin;

  auto ladder = [&](const std::string& name, const std::function<double(double)>& fiber) {
    return run_ladder(name, 6, kappa, [&](double k) {
      const auto [lo, hi] = wm.range(k);
      return wm.outer(fiber, lo, hi);
    });
  };
  rep.psi_h2 = ladder("psi.H2", [&](double R) { return wm.psi_h2_fiber(R); });
  rep.psi_h2.derived = from_power(at_origin ? p_psi : -p_psi);
  if (at_origin) rep.psi_h2.printed = n > rep.printed_threshold ? Membership::finite : Membership::divergent;

  rep.phi_l2 = ladder("phi.L2", [&](double R) { return wm.phi_fiber(R, false); });
  rep.phi_l2.derived = at_origin ? Membership::finite : Membership::divergent;
  if (at_origin) rep.phi_l2.printed = Membership::finite;

  rep.phi_dr = ladder("phi.dr", [&](double R) { return wm.phi_fiber(R, true); });
  rep.phi_dr.derived = from_power(at_origin ? p_dr : -p_dr);
  if (at_origin) rep.phi_dr.printed = Membership::divergent;

  rep.f_R = at_origin ? std::vector<double>{0.3, 0.45, 0.6, 0.75, 0.9} : std::vector<double>{1.5, 2.0, 3.0, 4.0};
  for (double R : rep.f_R) {
    const Jet A = wm.prefactor(R);
    const double w = wm.width(R);
    const double lo = std::max(0.0, R - w);
    const std::vector<double> br{R - 0.5 * w, R + 0.5 * w};
    const double p2m = 1.0 / w;
    auto shell = [&](double r) { return wm.tau(p2m * (r - R)); };
    const double f2 = kFourPi * integrate([&](double r) { const double v = A.value * shell(r); return v * v * r * r; },
                                          lo, R + w, br, kInner).value;
    const double f = std::sqrt(f2);
    rep.f_values.push_back(f);
    const double e = -2.0 * m - 1.0;
    const double J = Windmill::over_t([&](double t) {
      const double v = wm.tau(t) * (1.0 + t * std::pow(R, e));
      return v * v;
    });
    const double closed = std::sqrt(kFourPi) * std::abs(A.value) * std::pow(R, 1.0 - m) * std::sqrt(J);
    rep.f_closed_form_deviation = std::max(rep.f_closed_form_deviation, std::abs(f / closed - 1.0));
    // Closed-form phi = (4 pi)^{-1/2} R^{m-1} tau(R^{2m}(r - R)) J^{-1/2}.
    const double c = std::pow(R, m - 1.0) / std::sqrt(kFourPi * J);
    const double fiber = kFourPi * integrate([&](double r) { const double v = c * shell(r); return v * v * r * r; },
                                             lo, R + w, br, kInner).value;
    rep.fiber_norm_deviation = std::max(rep.fiber_norm_deviation, std::abs(fiber - 1.0));
  }
  return rep;
}

}  // namespace exfact
