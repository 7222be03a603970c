#include "exfact/bho.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace exfact {

NuclearFunction AdiabaticBasis::surface(std::size_t n) const {
  if (n >= n_trunc) throw Error("surface index beyond the truncation");
  NuclearFunction e(nuclear);
  for (std::size_t k = 0; k < nuclear->size(); ++k) e[k] = energies[n][k];
  return e;
}

namespace {

void positive_weighted_sum(std::vector<cplx>& x, std::span<const double> w) {
  cplx s{};
  std::size_t arg = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * x[i];
    if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
  }
  const cplx ref = std::abs(s) > 1e-8 ? s : x[arg];
  if (std::abs(ref) == 0.0) return;
  const cplx ph = std::conj(ref) / std::abs(ref);
  for (auto& v : x) v *= ph;
}

// Lowest k eigenpairs of a clamped operator by dense diagonalization of the
// weight-symmetrized interior matrix.
std::vector<std::pair<double, std::vector<cplx>>> dense_lowest(const HamiltonianOperator& op, std::size_t k) {
  const Grid& g = op.grid();
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_boundary(i)) in.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(in.size());
  if (k > in.size()) throw Error("requested more clamped states than interior electronic nodes");
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Field e(op.grid_ptr());
    e[in[j]] = 1.0;
    const Field he = op.apply(e);
    for (Eigen::Index i = 0; i < n; ++i) {
      S(i, j) = he[in[i]].real() * std::sqrt(g.weight(in[i]) / g.weight(in[j]));
    }
  }
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw Error("dense clamped diagonalization failed");
  std::vector<std::pair<double, std::vector<cplx>>> out;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<cplx> x(g.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      x[in[i]] = es.eigenvectors()(i, static_cast<Eigen::Index>(c)) / std::sqrt(g.weight(in[i]));
    }
    positive_weighted_sum(x, g.weights());
    out.emplace_back(es.eigenvalues()(static_cast<Eigen::Index>(c)), std::move(x));
  }
  return out;
}

std::size_t nuclear_axis(const Grid& g) {
  const auto en = g.axes_with(AxisLabel::nuclear);
  if (en.size() != 1) throw ModelError("Born-Huang constructions need exactly one nuclear axis");
  return en[0];
}

}  // namespace

AdiabaticBasis adiabatic_basis(const ModelHamiltonian& model, const GridPtr& grid, std::size_t n_trunc,
                               const AdiabaticOptions& opt) {
  if (n_trunc < 1) throw Error("adiabatic_basis needs n_trunc >= 1");
  model.check_grid(*grid);
  const std::size_t ax = nuclear_axis(*grid);
  const Axis& Rax = grid->axis(ax);
  const GridPtr el = grid->subgrid(AxisLabel::electronic);

  AdiabaticBasis b;
  b.grid = grid;
  b.nuclear = grid->subgrid(AxisLabel::nuclear);
  b.n_trunc = n_trunc;
  b.dense = opt.force_dense || 2 * (n_trunc + 1) > el->interior_count();
  b.energies.assign(n_trunc, std::vector<double>(Rax.size()));
  std::vector<std::vector<std::vector<cplx>>> states(n_trunc, std::vector<std::vector<cplx>>(Rax.size()));

  parallel_tasks(Rax.size(), [&](std::size_t k) {
    const double R = Rax.point(k);
    const HamiltonianOperator op = model.clamped(*grid, R);
    try {
      if (b.dense) {
        auto pairs = dense_lowest(op, n_trunc);
        for (std::size_t n = 0; n < n_trunc; ++n) {
          b.energies[n][k] = pairs[n].first;
          states[n][k] = std::move(pairs[n].second);
        }
      } else {
        EigenCluster c = lowest_k(as_operator(op), op.grid_ptr(), n_trunc, opt.eigen);
        for (std::size_t n = 0; n < n_trunc; ++n) {
          b.energies[n][k] = c.pairs[n].energy;
          auto v = c.pairs[n].state.values();
          states[n][k].assign(v.begin(), v.end());
        }
      }
    } catch (const Error& e) {
      throw Error("clamped eigensolve failed at R = " + std::to_string(R) + ": " + e.what());
    }
  });

  // Sign sweep in ascending R, then scatter into full-grid fields.
  b.sign_flips.assign(n_trunc, 0);
  const auto ew = el->weights();
  for (std::size_t n = 0; n < n_trunc; ++n) {
    for (std::size_t k = 1; k < Rax.size(); ++k) {
      cplx ov{};
      for (std::size_t i = 0; i < ew.size(); ++i) ov += ew[i] * std::conj(states[n][k - 1][i]) * states[n][k][i];
      if (ov.real() < 0.0) {
        for (auto& v : states[n][k]) v = -v;
        ++b.sign_flips[n];
      }
    }
    Field s(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) {
      s[i] = states[n][grid->index_along(i, ax)][grid->project(i, AxisLabel::electronic)];
    }
    b.sigma.push_back(std::move(s));
  }
  return b;
}

std::vector<NuclearFunction> born_huang_coefficients(const Field& psi, const AdiabaticBasis& basis) {
  if (!(psi.grid() == *basis.grid)) throw ShapeError("Psi and the adiabatic basis live on different grids");
  std::vector<NuclearFunction> out;
  for (const Field& s : basis.sigma) out.push_back(fiber_inner_product(s, psi));
  return out;
}

double truncation_residual(const Field& psi, const AdiabaticBasis& basis, std::size_t N) {
  if (N > basis.n_trunc) throw Error("truncation order beyond the basis size");
  const auto chi = born_huang_coefficients(psi, basis);
  Field rest = psi;
  for (std::size_t n = 0; n < N; ++n) rest -= multiply(basis.sigma[n], chi[n]);
  return norm(rest);
}

BOState bo_product_state(const ModelHamiltonian& model, const AdiabaticBasis& basis, const BOOptions& opt,
                         const EigenPair* exact) {
  const GridPtr& grid = basis.grid;
  const std::size_t ax = nuclear_axis(*grid);
  BOState out;
  out.surface = basis.surface(0);
  if (opt.diagonal_correction) {
    InverseMass gn(grid->rank());
    gn.set(ax, ax, model.nuclear_inverse_mass());
    const NuclearFunction c = fiber_inner_product(basis.sigma[0], kinetic_stencil(basis.sigma[0], gn));
    for (std::size_t k = 0; k < c.size(); ++k) out.surface[k] += cplx(c[k].real());
    out.correction = c;
  }
  std::vector<double> v(out.surface.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = out.surface[k].real();
  const HamiltonianOperator hn(basis.nuclear, model.nuclear_mass_matrix(*basis.nuclear), std::move(v));
  const EigenPair nuc = ground_state(as_operator(hn), basis.nuclear, opt.eigen);
  out.surface_energy = nuc.energy;
  out.chi = NuclearFunction(nuc.state);

  out.state = multiply(basis.sigma[0], out.chi);
  out.state *= 1.0 / norm(out.state);
  const HamiltonianOperator h = model.internal(grid);
  out.product_energy = inner_product(out.state, h.apply(out.state)).real();

  if (exact) {
    if (!(exact->state.grid() == *grid)) throw ShapeError("reference eigenpair lives on another grid");
    const cplx ov = inner_product(exact->state, out.state);
    out.energy_gap = out.product_energy - exact->energy;
    out.overlap = std::abs(ov) / norm(exact->state);
    const cplx ph = std::abs(ov) > 0.0 ? ov / std::abs(ov) : cplx(1.0);
    Field d = out.state;
    d -= ph * exact->state;
    out.distance = norm(d);
  }
  return out;
}

NodeReport node_report(const std::vector<NamedNuclearFunction>& functions, const std::vector<bool>& sigma_n,
                       double theta) {
  NodeReport rep;
  for (const auto& nf : functions) {
    const NuclearFunction& f = nf.values;
    const Grid& g = f.grid();
    if (!sigma_n.empty() && sigma_n.size() != g.size()) throw ShapeError("tube mask does not match the nuclear grid");
    NodeCensus c;
    c.name = nf.name;
    c.zeros = chi_zero_report(f, sigma_n, theta);

    std::size_t big = 0;
    double mx = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.is_boundary(i) && std::abs(f[i]) > mx) {
        mx = std::abs(f[i]);
        big = i;
      }
    }
    const cplx ph = mx > 0.0 ? std::conj(f[big]) / mx : cplx(1.0);
    auto value = [&](std::size_t i) { return (ph * f[i]).real(); };
    auto significant = [&](std::size_t i) { return !g.is_boundary(i) && std::abs(f[i]) > theta * mx; };

    for (std::size_t a = 0; a < g.rank(); ++a) {
      const std::size_t s = g.stride(a);
      const std::size_t len = g.axis(a).size();
      for (std::size_t start = 0; start < g.size(); ++start) {
        if (g.index_along(start, a) != 0) continue;
        std::size_t last = g.size();
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = start + k * s;
          if (!significant(i)) continue;
          if (last != g.size() && (value(last) > 0.0) != (value(i) > 0.0)) {
            std::vector<double> x(g.rank());
            for (std::size_t b = 0; b < g.rank(); ++b) x[b] = g.coordinate(i, b);
            const double x0 = g.coordinate(last, a), x1 = g.coordinate(i, a);
            const double v0 = value(last), v1 = value(i);
            x[a] = x0 + (x1 - x0) * v0 / (v0 - v1);
            const bool in = !sigma_n.empty() && (sigma_n[last] || sigma_n[i]);
            c.sign_changes.push_back(std::move(x));
            c.change_in_tube.push_back(in);
            ++(in ? rep.changes_in_tube : rep.changes_outside_tube);
          }
          last = i;
        }
      }
    }
    rep.functions.push_back(std::move(c));
  }
  return rep;
}

}  // namespace exfact
