#include "exfact/eigensolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>

namespace exfact {

Operator as_operator(const HamiltonianOperator& h) {
  return [&h](const Field& u) { return h.apply(u); };
}

Operator as_operator(HamiltonianOperator&& h) {
  auto owned = std::make_shared<const HamiltonianOperator>(std::move(h));
  return [owned](const Field& u) { return owned->apply(u); };
}

namespace {

// w -= sum_i <V_i, w> V_i, twice.
void orthogonalize(Field& w, const std::vector<Field>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& v : basis) {
      const cplx c = inner_product(v, w);
      auto wv = w.values();
      auto vv = v.values();
      for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= c * vv[i];
    }
  }
}

Field combine(const std::vector<Field>& basis, const Eigen::VectorXcd& y) {
  Field out(basis.front().grid_ptr());
  auto o = out.values();
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const cplx c = y(static_cast<Eigen::Index>(j));
    if (c == cplx{}) continue;
    auto v = basis[j].values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += c * v[i];
  }
  return out;
}

// Deterministic pseudo-random interior vector (64-bit LCG).
Field lcg_vector(const GridPtr& grid, std::uint64_t& state) {
  Field out(grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    const double x = static_cast<double>(state >> 11) * (1.0 / 9007199254740992.0) - 0.5;
    out[i] = grid->is_boundary(i) ? cplx{} : cplx(x);
  }
  return out;
}

// Fixes the arbitrary phase: the weighted sum (or, for states orthogonal to
// constants, the first dominant component) is made real positive.
void fix_phase(Field& x) {
  const auto w = x.grid().weights();
  cplx s{};
  double mx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * x[i];
    mx = std::max(mx, std::abs(x[i]));
  }
  cplx ref = s;
  if (std::abs(s) < 1e-8 * mx * x.grid().volume()) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > 0.5 * mx) {
        ref = x[i];
        break;
      }
    }
  }
  if (std::abs(ref) == 0.0) return;
  x *= std::conj(ref) / std::abs(ref);
}

// Krylov-Schur form: A V = V H + f e^T with V orthonormal, H = V^* A V
// computed explicitly. The residual of Ritz pair j is ||f|| |y_j(last)|; after
// a thick restart on the lowest Ritz vectors the space is extended by f.
EigenCluster solve(const Operator& apply, const GridPtr& grid, std::size_t want, std::size_t target,
                   const EigenOptions& opt) {
  if (!(opt.tol > 0.0)) throw Error("eigensolver tolerance must be positive");
  if (want == 0) throw Error("eigensolver needs k >= 1");
  const std::size_t limit = grid->interior_count();
  if (want > limit) throw Error("requested more eigenpairs than interior grid points");
  target = std::min(target, limit);
  const std::size_t max_basis = std::min<std::size_t>(std::max<std::size_t>(opt.max_basis, target + 12), limit);
  const std::size_t keep = std::min<std::size_t>(std::max<std::size_t>(target + 10, 20), max_basis - 1);

  std::vector<Field> V;
  std::vector<Field> AV;
  std::uint64_t seed = 0x9E3779B97F4A7C15ULL;
  Eigen::MatrixXcd H(0, 0);
  std::size_t applications = 0;
  double best = std::numeric_limits<double>::infinity();

  // Appends unit vector v, its image, the new column of H, and returns f.
  auto append = [&](Field v) {
    AV.push_back(apply(v));
    V.push_back(std::move(v));
    ++applications;
    const auto n = static_cast<Eigen::Index>(V.size());
    H.conservativeResize(n, n);
    Field f = AV.back();
    std::vector<cplx> c(V.size(), cplx{});
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < V.size(); ++i) {
        const cplx ci = inner_product(V[i], f);
        c[i] += ci;
        auto fv = f.values();
        auto vv = V[i].values();
        for (std::size_t q = 0; q < fv.size(); ++q) fv[q] -= ci * vv[q];
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx s = i == n - 1 ? cplx(c[i].real()) : c[i];
      H(i, n - 1) = s;
      H(n - 1, i) = std::conj(s);
    }
    return f;
  };

  // Constant plus a pseudo-random part: a constant alone has almost no
  // overlap with states that are odd about the well centre.
  Field v0 = lcg_vector(grid, seed);
  for (std::size_t i = 0; i < v0.size(); ++i) {
    if (!grid->is_boundary(i)) v0[i] += cplx(1.0);
  }
  v0 *= 1.0 / norm(v0);
  Field f = append(std::move(v0));

  for (;;) {
    const auto m = static_cast<Eigen::Index>(V.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    const Eigen::VectorXd theta = es.eigenvalues();
    const Eigen::MatrixXcd Y = es.eigenvectors();
    const double beta = norm(f);

    const std::size_t avail = std::min<std::size_t>(target, static_cast<std::size_t>(m));
    std::vector<double> res(avail);
    std::size_t first_bad = avail;
    for (std::size_t j = 0; j < avail; ++j) {
      res[j] = beta * std::abs(Y(m - 1, static_cast<Eigen::Index>(j)));
      if (res[j] > opt.tol && first_bad == avail) first_bad = j;
    }
    if (first_bad < avail) best = std::min(best, res[first_bad]);
    if (first_bad == avail && avail == target) {
      EigenCluster out;
      for (std::size_t j = 0; j < target; ++j) {
        EigenPair p;
        p.energy = theta(static_cast<Eigen::Index>(j));
        p.state = combine(V, Y.col(static_cast<Eigen::Index>(j)));
        p.state *= 1.0 / norm(p.state);
        fix_phase(p.state);
        p.residual = res[j];
        p.iterations = applications;
        out.pairs.push_back(std::move(p));
      }
      if (target > want) {
        const double a = out.pairs[want - 1].energy;
        const double b = out.pairs[want].energy;
        out.split_degenerate = std::abs(b - a) <= std::max(10.0 * opt.tol, 1e-8 * std::max(1.0, std::abs(a)));
        out.pairs.resize(want);
      }
      return out;
    }
    if (applications >= opt.max_iter) {
      throw ConvergenceError("eigensolver did not converge within " + std::to_string(opt.max_iter) +
                                 " operator applications",
                             best, applications);
    }

    if (static_cast<std::size_t>(m) >= max_basis) {
      std::vector<Field> nv, nav;
      for (std::size_t j = 0; j < keep; ++j) {
        const Eigen::VectorXcd y = Y.col(static_cast<Eigen::Index>(j));
        nv.push_back(combine(V, y));
        nav.push_back(combine(AV, y));
      }
      V = std::move(nv);
      AV = std::move(nav);
      const auto kk = static_cast<Eigen::Index>(keep);
      H = Eigen::MatrixXcd::Zero(kk, kk);
      for (Eigen::Index j = 0; j < kk; ++j) H(j, j) = theta(j);
    }

    // An invariant subspace was found before all targets converged.
    double wn = beta;
    for (int tries = 0; wn <= 1e-12 * std::max(1.0, theta.cwiseAbs().maxCoeff()) && tries < 8; ++tries) {
      f = lcg_vector(grid, seed);
      orthogonalize(f, V);
      wn = norm(f);
    }
    if (wn == 0.0) throw ConvergenceError("eigensolver could not extend its Krylov space", best, applications);
    f *= 1.0 / wn;
    f = append(std::move(f));
  }
}

}  // namespace

EigenPair ground_state(const Operator& apply, const GridPtr& grid, const EigenOptions& opt) {
  return solve(apply, grid, 1, 1, opt).pairs.front();
}

EigenCluster lowest_k(const Operator& apply, const GridPtr& grid, std::size_t k, const EigenOptions& opt) {
  return solve(apply, grid, k, k + 1, opt);
}

double eigen_residual(const Operator& apply, const EigenPair& pair) {
  Field r = apply(pair.state);
  r -= cplx(pair.energy) * pair.state;
  return norm(r);
}

}  // namespace exfact
