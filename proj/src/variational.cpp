#include "exfact/variational.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "exfact/factorize.hpp"

namespace exfact {

namespace {

Field product(const Field& phi, const NuclearFunction& chi) { return multiply(phi, chi); }

double norm2(const Field& u) {
  const double n = norm(u);
  return n * n;
}

}  // namespace

double tau(const HamiltonianOperator& h, const TauPoint& p) {
  const Field psi = product(p.phibar, p.chibar);
  const Field hpsi = h.apply(psi);
  return inner_product(psi, hpsi).real() + p.lambda * (1.0 - norm2(psi)) + p.mu_l * (1.0 - norm2(p.chibar));
}

TauGradient tau_gradient(const HamiltonianOperator& h, const TauPoint& p) {
  const Grid& g = p.phibar.grid();
  const Field psi = product(p.phibar, p.chibar);
  Field r = h.apply(psi);
  r -= cplx(p.lambda) * psi;
  TauGradient out;
  out.phi = Field(p.phibar.grid_ptr());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.phi[i] = 2.0 * std::conj(p.chibar[g.project(i, AxisLabel::nuclear)]) * r[i];
  }
  out.chi = fiber_inner_product(p.phibar, r);
  for (std::size_t k = 0; k < out.chi.size(); ++k) out.chi[k] = 2.0 * (out.chi[k] - p.mu_l * p.chibar[k]);
  out.lambda = 1.0 - norm2(psi);
  out.mu = 1.0 - norm2(p.chibar);
  return out;
}

double tau_directional_derivative(const HamiltonianOperator& h, const TauPoint& p, const TauDirection& d) {
  const TauGradient gr = tau_gradient(h, p);
  double s = gr.lambda * d.dlambda + gr.mu * d.dmu;
  if (d.dphi.grid_ptr()) s += inner_product(gr.phi, d.dphi).real();
  if (d.dchi.grid_ptr()) s += inner_product(gr.chi, d.dchi).real();
  return s;
}

MuCheck mu_multiplier_check(const HamiltonianOperator& h, const TauPoint& p, double tol) {
  const TauGradient gr = tau_gradient(h, p);
  MuCheck out;
  out.gradient_norm = std::max({norm(gr.phi), norm(gr.chi), std::abs(gr.lambda), std::abs(gr.mu)});
  if (!(out.gradient_norm <= tol)) {
    throw Error("mu_multiplier_check: point is not near-critical (gradient norm " +
                std::to_string(out.gradient_norm) + " > " + std::to_string(tol) + ")");
  }
  const Field psi = product(p.phibar, p.chibar);
  Field r = h.apply(psi);
  r -= cplx(p.lambda) * psi;
  const NuclearFunction f = fiber_inner_product(p.phibar, r);
  out.implied_mu = inner_product(p.chibar, f).real() / norm2(p.chibar);
  out.abs_mu = std::abs(p.mu_l);
  out.consistent = out.abs_mu <= 10.0 * tol;
  return out;
}

double tau_prime(const HamiltonianOperator& h, const TauPrimePoint& p) {
  const Field psi = product(p.phi, p.chi);
  return inner_product(psi, h.apply(psi)).real() + p.lambda * (1.0 - norm2(psi));
}

std::pair<Field, double> tau_prime_gradient(const HamiltonianOperator& h, const TauPrimePoint& p) {
  const Grid& g = p.phi.grid();
  const Field psi = product(p.phi, p.chi);
  Field r = h.apply(psi);
  r -= cplx(p.lambda) * psi;
  Field gphi(p.phi.grid_ptr());
  for (std::size_t i = 0; i < g.size(); ++i) gphi[i] = 2.0 * std::conj(p.chi[g.project(i, AxisLabel::nuclear)]) * r[i];
  return {std::move(gphi), 1.0 - norm2(psi)};
}

double tau0_value(const Field& phi, const NuclearFunction& chi) { return norm2(product(phi, chi)); }

namespace {

void axpy(Field& y, cplx a, const Field& x) {
  auto yv = y.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += a * xv[i];
}

double outer_band_fraction(const Field& phi) {
  const Grid& g = phi.grid();
  const auto en = g.axes_with(AxisLabel::nuclear);
  double band = 0.0, total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = g.weight(i) * std::norm(phi[i]);
    total += m;
    bool in = false;
    for (std::size_t a : en) {
      const AxisSpec& s = g.axis(a).spec();
      const double x = g.coordinate(i, a);
      const double edge = s.kind == AxisKind::radial ? s.upper - x : std::min(x - s.lower, s.upper - x);
      in = in || edge <= 0.1 * (s.upper - s.lower);
    }
    if (in) band += m;
  }
  return total > 0.0 ? band / total : 0.0;
}

TauPrimeResult package(const ModelHamiltonian& model, const NuclearFunction& chi, double c_prime, const Field& x,
                       double lambda, std::vector<TauPrimeTraceRow> trace, std::size_t iterations) {
  const Grid& g = x.grid();
  TauPrimeResult out;
  out.point.chi = chi;
  out.point.c_prime = c_prime;
  out.point.lambda = lambda;
  out.point.phi = Field(x.grid_ptr());
  for (std::size_t i = 0; i < g.size(); ++i) out.point.phi[i] = x[i] / chi[g.project(i, AxisLabel::nuclear)];
  out.residual = reconstruction_residual(model, out.point.phi, chi, lambda);
  out.trace = std::move(trace);
  out.iterations = iterations;
  out.boundary_mass_fraction = outer_band_fraction(out.point.phi);
  out.boundary_mass_flag = out.boundary_mass_fraction > 0.01;
  return out;
}

}  // namespace

// Iterates on Psi = phi chi: the phi-space step -P^{-1} dtau'/dphi with
// P = 2 |chi|^2 diag(H' - lambda) maps to the Psi-space step
// -(H' - lambda) Psi / diag. The step size, and the weight of the previous
// step, come from Rayleigh-Ritz on span{Psi, step, previous}.
TauPrimeResult solve_tau_prime_critical(const ModelHamiltonian& model, const GridPtr& grid, double c_prime,
                                        const Field& init, const TauPrimeSchedule& schedule) {
  const auto op = model.internal(grid);
  const NuclearFunction chi = agmon_chi(grid->subgrid(AxisLabel::nuclear), c_prime);
  if (!(init.grid() == *grid)) throw ShapeError("initial phi lives on another grid");
  const std::vector<double> diag = op.diagonal();
  const auto pot = op.potential();

  Field x = product(init, chi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (grid->is_boundary(i)) x[i] = cplx{};
  }
  double nx = norm(x);
  if (nx == 0.0) throw Error("initial phi chi is zero");
  x *= 1.0 / nx;
  Field hx = op.apply(x);
  Field p, hp;

  std::vector<TauPrimeTraceRow> trace;
  std::vector<double> best_hist;
  double best = std::numeric_limits<double>::infinity();
  Field best_x = x;
  double best_lambda = 0.0;

  for (std::size_t it = 0;; ++it) {
    if (it % 25 == 24) hx = op.apply(x);  // refresh the recurrence
    const double lam = inner_product(x, hx).real();
    Field r = hx;
    axpy(r, -lam, x);
    const double res = norm(r);
    double gnorm = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      gnorm += grid->weight(i) * 4.0 * std::norm(chi[grid->project(i, AxisLabel::nuclear)] * r[i]);
    }
    trace.push_back({it, lam, std::sqrt(gnorm), res});
    if (res < best) {
      best = res;
      best_x = x;
      best_lambda = lam;
    }
    best_hist.push_back(best);
    if (res <= schedule.tol) return package(model, chi, c_prime, x, lam, std::move(trace), it);
    if (it >= schedule.stall_window && best > schedule.stall_ratio * best_hist[it - schedule.stall_window]) {
      throw TauPrimeStagnation("tau' solve stagnated: residual decreased by less than 1% over " +
                                   std::to_string(schedule.stall_window) + " iterations",
                               package(model, chi, c_prime, best_x, best_lambda, trace, it));
    }
    if (it >= schedule.max_iterations) {
      throw TauPrimeStagnation("tau' solve reached the iteration limit",
                               package(model, chi, c_prime, best_x, best_lambda, trace, it));
    }

    Field w(grid);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (grid->is_boundary(i)) continue;
      const double kin = diag[i] - pot[i];
      w[i] = r[i] / std::max(diag[i] - lam, 0.5 * kin);
    }
    w *= 1.0 / norm(w);
    Field hw = op.apply(w);

    std::vector<const Field*> S{&x, &w};
    std::vector<const Field*> HS{&hx, &hw};
    if (p.grid_ptr()) {
      S.push_back(&p);
      HS.push_back(&hp);
    }
    auto solve_small = [&](std::size_t m, Eigen::VectorXcd& c) {
      Eigen::MatrixXcd A(m, m), B(m, m);
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          A(a, b) = inner_product(*S[a], *HS[b]);
          B(a, b) = inner_product(*S[a], *S[b]);
        }
      }
      A = 0.5 * (A + A.adjoint()).eval();
      B = 0.5 * (B + B.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> bs(B);
      if (bs.eigenvalues().minCoeff() < 1e-12 * bs.eigenvalues().maxCoeff()) return false;
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, B);
      c = es.eigenvectors().col(0);
      return true;
    };
    Eigen::VectorXcd c;
    std::size_t m = S.size();
    if (!solve_small(m, c)) {
      m = 2;
      S.resize(2);
      HS.resize(2);
      if (!solve_small(m, c)) throw Error("tau' solve: step direction is parallel to the iterate");
    }
    Field np(grid), nhp(grid);
    for (std::size_t j = 1; j < m; ++j) {
      axpy(np, c(static_cast<Eigen::Index>(j)), *S[j]);
      axpy(nhp, c(static_cast<Eigen::Index>(j)), *HS[j]);
    }
    Field nx_field = np;
    Field nhx = nhp;
    axpy(nx_field, c(0), x);
    axpy(nhx, c(0), hx);
    const double s = norm(nx_field);
    nx_field *= 1.0 / s;
    nhx *= 1.0 / s;
    x = std::move(nx_field);
    hx = std::move(nhx);
    const double pn = norm(np);
    if (pn > 0.0) {
      np *= 1.0 / pn;
      nhp *= 1.0 / pn;
      p = std::move(np);
      hp = std::move(nhp);
    }
  }
}

}  // namespace exfact
