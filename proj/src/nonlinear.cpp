#include "exfact/nonlinear.hpp"

#include <algorithm>
#include <cmath>

#include "exfact/factorize.hpp"

namespace exfact {

namespace {

double max_spacing(const Grid& g) {
  double h = 0.0;
  for (std::size_t a = 0; a < g.rank(); ++a) h = std::max(h, g.axis(a).spacing());
  return h;
}

void check_excluded(const Grid& g, const std::vector<bool>& excluded) {
  if (!excluded.empty() && excluded.size() != g.size()) throw ShapeError("exclusion mask does not match grid");
}

bool is_excluded(const std::vector<bool>& excluded, std::size_t i) { return !excluded.empty() && excluded[i]; }

double excluded_fraction(const Grid& g, const std::vector<bool>& excluded) {
  if (excluded.empty()) return 0.0;
  double e = 0.0, t = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    t += g.weight(i);
    if (excluded[i]) e += g.weight(i);
  }
  return t > 0.0 ? e / t : 0.0;
}

// Geometry shared by the residuals: the nuclear sub-grid and, for every full
// axis carrying R, its index on that sub-grid.
struct NuclearLayout {
  GridPtr sub;
  std::vector<std::size_t> full_axes;
};

NuclearLayout layout(const Grid& g) {
  NuclearLayout l;
  l.full_axes = g.axes_with(AxisLabel::nuclear);
  if (l.full_axes.empty()) throw ModelError("factor residuals need a grid with R axes");
  l.sub = g.subgrid(AxisLabel::nuclear);
  for (std::size_t a : l.full_axes) {
    if (g.axis(a).kind() != AxisKind::cartesian) throw ModelError("factor residuals need cartesian R axes");
  }
  return l;
}

// Equations that differentiate phi read its R neighbours, and phi is unset on
// excluded fibers: a point is evaluable only if its nuclear stencil is.
std::vector<bool> stencil_excluded(const Grid& g, const std::vector<bool>& excluded) {
  if (excluded.empty()) return excluded;
  std::vector<bool> out = excluded;
  for (std::size_t a : g.axes_with(AxisLabel::nuclear)) {
    const std::size_t s = g.stride(a), n = g.axis(a).size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!excluded[i]) continue;
      const std::size_t j = g.index_along(i, a);
      if (j > 0) out[i - s] = true;
      if (j + 1 < n) out[i + s] = true;
    }
  }
  return out;
}

std::vector<bool> eroded_valid(const Grid& sub, const std::vector<bool>& valid) {
  std::vector<bool> out = valid;
  for (std::size_t a = 0; a < sub.rank(); ++a) {
    const std::size_t s = sub.stride(a), n = sub.axis(a).size();
    for (std::size_t k = 0; k < sub.size(); ++k) {
      if (valid[k]) continue;
      const std::size_t j = sub.index_along(k, a);
      if (j > 0) out[k - s] = false;
      if (j + 1 < n) out[k + s] = false;
    }
  }
  return out;
}

void check_pair(const Field& phi, const NuclearFunction& chi) {
  if (!(*phi.grid().subgrid(AxisLabel::nuclear) == chi.grid())) throw ShapeError("chi lives on another nuclear grid");
}

// C(chi, phi) at an interior point i with nuclear node k.
cplx cross_term(const Grid& g, const NuclearLayout& l, const InverseMass& gm, const Field& phi,
                const NuclearFunction& chi, std::size_t i, std::size_t k) {
  cplx c{};
  for (std::size_t j = 0; j < l.full_axes.size(); ++j) {
    const std::size_t a = l.full_axes[j];
    const std::size_t s = g.stride(a);
    const std::size_t sk = l.sub->stride(j);
    const double h = g.axis(a).spacing();
    const cplx dpc = (chi[k + sk] - chi[k]) / h;
    const cplx dmc = (chi[k] - chi[k - sk]) / h;
    const cplx dpp = (phi[i + s] - phi[i]) / h;
    const cplx dmp = (phi[i] - phi[i - s]) / h;
    c += 0.5 * gm(a, a) * (dpc * dpp + dmc * dmp);
  }
  return c;
}

// Hbar_el phi = H' phi - chi^{-1} C(chi, phi) on interior, non-excluded points.
Field hbar_el_apply(const ModelHamiltonian& model, const Field& phi, const NuclearFunction& chi,
                    const std::vector<bool>& excluded) {
  const Grid& g = phi.grid();
  const NuclearLayout l = layout(g);
  const auto op = model.internal(phi.grid_ptr());
  const InverseMass& gm = op.inverse_mass();
  Field out = op.apply_raw(phi);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i) || is_excluded(excluded, i)) {
      out[i] = cplx{};
      continue;
    }
    const std::size_t k = g.project(i, AxisLabel::nuclear);
    if (chi[k] == cplx{}) throw Error("nuclear factor vanishes at a point that is not excluded");
    out[i] -= cross_term(g, l, gm, phi, chi, i, k) / chi[k];
  }
  return out;
}

NuclearFunction nuclear_kinetic(const ModelHamiltonian& model, const NuclearFunction& chi) {
  return NuclearFunction(kinetic_stencil(chi, model.nuclear_mass_matrix(chi.grid())));
}

// R nodes whose whole fiber is evaluable.
std::vector<bool> evaluable_fibers(const Grid& g, const std::vector<bool>& excluded) {
  auto sub = g.subgrid(AxisLabel::nuclear);
  std::vector<bool> ok(sub->size(), true);
  for (std::size_t k = 0; k < sub->size(); ++k) ok[k] = !sub->is_boundary(k);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (is_excluded(excluded, i)) ok[g.project(i, AxisLabel::nuclear)] = false;
  }
  return ok;
}

ResidualReport finish(std::string eq, const Field& res, const std::vector<double>& w, double frac, double h,
                      bool keep) {
  ResidualReport r;
  r.equation = std::move(eq);
  double s = 0.0;
  for (std::size_t i = 0; i < res.size(); ++i) s += w[i] * std::norm(res[i]);
  r.residual = std::sqrt(s);
  r.excluded_fraction = frac;
  r.h = h;
  if (keep) r.field = res;
  return r;
}

ResidualReport electronic_impl(std::string eq, const ModelHamiltonian& model, const Field& phi,
                               const NuclearFunction& chi, double E, const std::vector<bool>& excluded_points,
                               bool keep) {
  const Grid& g = phi.grid();
  check_pair(phi, chi);
  check_excluded(g, excluded_points);
  const std::vector<bool> excluded = stencil_excluded(g, excluded_points);
  const NuclearFunction tn = nuclear_kinetic(model, chi);
  Field res = hbar_el_apply(model, phi, chi, excluded);
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i) || is_excluded(excluded, i)) {
      res[i] = cplx{};
      continue;
    }
    const std::size_t k = g.project(i, AxisLabel::nuclear);
    const cplx ebar = E - tn[k] / chi[k];
    res[i] -= ebar * phi[i];
    w[i] = g.weight(i);
  }
  return finish(std::move(eq), res, w, excluded_fraction(g, excluded), max_spacing(g), keep);
}

ResidualReport nuclear_impl(std::string eq, const ModelHamiltonian& model, const Field& phi, const NuclearFunction& chi,
                            double E, const std::vector<bool>& excluded_points, bool divide_by_norm, bool keep) {
  const Grid& g = phi.grid();
  check_pair(phi, chi);
  check_excluded(g, excluded_points);
  const std::vector<bool> excluded = stencil_excluded(g, excluded_points);
  const NuclearFunction tn = nuclear_kinetic(model, chi);
  const Field hphi = hbar_el_apply(model, phi, chi, excluded);
  const NuclearFunction num = fiber_inner_product(phi, hphi);
  const NuclearFunction den = fiber_inner_product(phi, phi);
  const auto ok = evaluable_fibers(g, excluded);
  NuclearFunction res(chi.grid_ptr());
  std::vector<double> w(chi.size(), 0.0);
  double ex = 0.0, tot = 0.0;
  for (std::size_t k = 0; k < chi.size(); ++k) {
    tot += chi.grid().weight(k);
    if (!ok[k]) {
      if (!chi.grid().is_boundary(k)) ex += chi.grid().weight(k);
      continue;
    }
    cplx e_el = num[k];
    if (divide_by_norm) {
      if (den[k].real() <= 0.0) throw Error("conditional factor has zero norm on an evaluated fiber");
      e_el /= den[k].real();
    }
    res[k] = tn[k] - (E - e_el) * chi[k];
    w[k] = chi.grid().weight(k);
  }
  return finish(std::move(eq), res, w, tot > 0.0 ? ex / tot : 0.0, max_spacing(g), keep);
}

}  // namespace

NuclearProfile ebar_el(const ModelHamiltonian& model, const NuclearFunction& chibar, double E,
                       const std::vector<bool>& valid) {
  const Grid& sub = chibar.grid();
  if (valid.size() != chibar.size()) throw ShapeError("valid mask does not match the nuclear grid");
  const NuclearFunction tn = nuclear_kinetic(model, chibar);
  NuclearProfile out{NuclearFunction(chibar.grid_ptr()), std::vector<bool>(chibar.size(), false)};
  bool any = false;
  for (std::size_t k = 0; k < chibar.size(); ++k) {
    if (!valid[k] || sub.is_boundary(k) || chibar[k] == cplx{}) continue;
    out.values[k] = E - tn[k] / chibar[k];
    out.valid[k] = true;
    any = true;
  }
  if (!any) throw Error("ebar_el: valid set is empty");
  return out;
}

ResidualReport electronic_residual(const ModelHamiltonian& model, const Field& phibar, const NuclearFunction& chibar,
                                   double E, const std::vector<bool>& excluded, bool keep_field) {
  return electronic_impl("eleqn-1", model, phibar, chibar, E, excluded, keep_field);
}

ResidualReport nuclear_residual(const ModelHamiltonian& model, const Field& phibar, const NuclearFunction& chibar,
                                double E, const std::vector<bool>& excluded, bool keep_field) {
  return nuclear_impl("nucleqn-1", model, phibar, chibar, E, excluded, true, keep_field);
}

double agmon_bracket(double c_prime, double inverse_mass, std::span<const double> R) {
  double r2 = 0.0;
  for (double x : R) r2 += x * x;
  const double br = std::sqrt(1.0 + r2);
  const double d = static_cast<double>(R.size());
  return c_prime * inverse_mass / (2.0 * br * br * br) * (r2 * (c_prime * br + 1.0) - d * br * br);
}

ResidualReport agmon_electronic_residual(const ModelHamiltonian& model, const Field& phi, double c_prime, double E,
                                         AgmonForm form, bool keep_field) {
  const Grid& g = phi.grid();
  const NuclearLayout l = layout(g);
  const NuclearFunction chi = agmon_chi(l.sub, c_prime);
  if (form == AgmonForm::discrete) {
    auto r = electronic_impl("eleqn-2", model, phi, chi, E, {}, keep_field);
    return r;
  }
  const double gn = model.nuclear_inverse_mass();
  const auto op = model.internal(phi.grid_ptr());
  Field res = op.apply_raw(phi);
  std::vector<double> w(g.size(), 0.0);
  std::vector<double> R(l.full_axes.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) {
      res[i] = cplx{};
      continue;
    }
    double r2 = 0.0;
    for (std::size_t j = 0; j < l.full_axes.size(); ++j) {
      R[j] = g.coordinate(i, l.full_axes[j]);
      r2 += R[j] * R[j];
    }
    const double br = std::sqrt(1.0 + r2);
    cplx drift{};
    for (std::size_t j = 0; j < l.full_axes.size(); ++j) {
      const std::size_t a = l.full_axes[j];
      const std::size_t s = g.stride(a);
      const double h = g.axis(a).spacing();
      drift += c_prime * gn * (R[j] / br) * (phi[i + s] - phi[i - s]) / (2.0 * h);
    }
    res[i] += drift - (E + agmon_bracket(c_prime, gn, R)) * phi[i];
    w[i] = g.weight(i);
  }
  return finish("eleqn-2", res, w, 0.0, max_spacing(g), keep_field);
}

std::pair<ResidualReport, ResidualReport> normalized_system_residuals(const ModelHamiltonian& model, const Field& phi,
                                                                      const NuclearFunction& chi, double E,
                                                                      const std::vector<bool>& excluded) {
  const Grid& g = phi.grid();
  check_pair(phi, chi);
  check_excluded(g, excluded);
  const auto ok = evaluable_fibers(g, excluded);
  const NuclearFunction n = marginal_norm(phi);
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (ok[k] && std::abs(n[k].real() - 1.0) > 1e-6) {
      throw Error("normalized system: ||phi||_r deviates from 1 by more than 1e-6");
    }
  }
  return {electronic_impl("eleqn-3", model, phi, chi, E, excluded, false),
          nuclear_impl("nucleqn-3", model, phi, chi, E, excluded, false, false)};
}

NuclearProfile pseudo_potential(const ModelHamiltonian& model, const Field& phi, const std::vector<bool>& valid) {
  const Grid& g = phi.grid();
  const NuclearLayout l = layout(g);
  if (valid.size() != l.sub->size()) throw ShapeError("valid mask does not match the nuclear grid");
  const std::vector<bool> usable = eroded_valid(*l.sub, valid);
  const auto op = model.internal(phi.grid_ptr());
  const Field hphi = op.apply_raw(phi);
  const NuclearFunction u = fiber_inner_product(phi, hphi);
  NuclearProfile out{NuclearFunction(l.sub), std::vector<bool>(l.sub->size(), false)};
  bool any = false;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!usable[k] || l.sub->is_boundary(k)) continue;
    out.values[k] = u[k];
    out.valid[k] = true;
    any = true;
  }
  if (!any) throw Error("pseudo_potential: valid set is empty");
  return out;
}

ResidualReport reconstruction_residual(const ModelHamiltonian& model, const Field& phi, const NuclearFunction& chi,
                                       double E, const std::vector<bool>& excluded, bool keep_field) {
  const Grid& g = phi.grid();
  check_pair(phi, chi);
  check_excluded(g, excluded);
  const Field psi = multiply(phi, chi);
  Field res = model.internal(phi.grid_ptr()).apply(psi);
  res -= cplx(E) * psi;
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (is_excluded(excluded, i)) {
      res[i] = cplx{};
    } else {
      w[i] = g.weight(i);
    }
  }
  return finish("reconstruction", res, w, excluded_fraction(g, excluded), max_spacing(g), keep_field);
}

}  // namespace exfact
