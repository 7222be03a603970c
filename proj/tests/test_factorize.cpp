#include <doctest.h>

#include <cmath>

#include "exfact/eigensolve.hpp"
#include "exfact/factorize.hpp"
#include "exfact/nonlinear.hpp"
#include "support.hpp"

using namespace exfact;
using namespace testing;

namespace {

struct Harmonic {
  ModelParams p;
  ModelHamiltonian m;
  GridPtr g;
  EigenPair e;
  explicit Harmonic(std::size_t nr = 81, std::size_t nR = 41, double coupling = 1.0)
      : p(harmonic(10.0, coupling)), m(p), g(grid_rR(nr, nR)),
        e(ground_state(as_operator(m.internal(g)), g, {1e-10, 20000, 48})) {}
};

const Harmonic& shared() {
  static const Harmonic h;
  return h;
}

Field separable(const GridPtr& g, bool odd_R = false) {
  return Field::sample(g, [odd_R](const Point& p) {
    const double gR = (odd_R ? p.R[0] : 1.0) * std::exp(-p.R[0] * p.R[0]);
    return cplx(std::exp(-p.r[0] * p.r[0] / 2) * gR);
  });
}

}  // namespace

TEST_SUITE("factorize") {

TEST_CASE("marginal chi of a separable state is |g2| up to the r norm") {
  const auto g = grid_rR(81, 41);
  const Field psi = separable(g);
  const NuclearFunction chi = marginal_chi(psi);
  const NuclearFunction n = marginal_norm(psi);
  CHECK(max_abs_diff(chi, n) == 0.0);
  std::vector<double> S(chi.size());
  for (std::size_t k = 0; k < S.size(); ++k) S[k] = 0.3 * k;
  const NuclearFunction phased = marginal_chi(psi, S);
  for (std::size_t k = 0; k < S.size(); ++k) CHECK(std::abs(phased[k]) == doctest::Approx(std::abs(chi[k])));
}

TEST_CASE("separable marginal factorization gives an R-independent phi") {
  const auto g = grid_rR(81, 41);
  const FactorizationResult f = factorize_marginal(separable(g));
  CHECK(f.diagnostics.max_normalization_deviation < 1e-13);
  CHECK(f.diagnostics.reconstruction_error < 1e-14);
  const std::size_t mid = 20, other = 25;
  for (std::size_t i = 0; i < g->axis(0).size(); ++i) {
    CHECK(std::abs(f.phi[i + mid * g->stride(1)] - f.phi[i + other * g->stride(1)]) < 1e-12);
  }
}

TEST_CASE("harmonic ground state: nodeless Gaussian chi and normalized phi") {
  const Harmonic& h = shared();
  const FactorizationResult f = factorize_marginal(h.e.state);
  CHECK(f.diagnostics.zeros.indices.empty());
  CHECK(f.diagnostics.zeros.consistent);
  CHECK(f.diagnostics.max_normalization_deviation < 1e-12);
  // Gaussian marginal: log chi is quadratic with the oracle precision.
  const double a = HarmonicOracle(h.p).marginal_precision();
  const Grid& ng = f.chi.grid();
  const std::size_t c = ng.size() / 2;
  const double R = ng.coordinate(c + 5, 0);
  const double ratio = std::log(std::abs(f.chi[c + 5]) / std::abs(f.chi[c]));
  CHECK(ratio == doctest::Approx(-0.5 * a * R * R).epsilon(0.02));
}

TEST_CASE("excited state with a node in R: band masked, reconstruction exact outside") {
  const auto g = grid_rR(81, 41);
  const Field psi = separable(g, true);
  const FactorizationResult f = factorize_marginal(psi, {}, 1e-8);
  std::size_t masked = 0;
  for (bool v : f.valid) masked += !v;
  CHECK(masked >= 1);
  CHECK(f.diagnostics.reconstruction_error < 1e-14);
  CHECK_FALSE(f.diagnostics.zeros.consistent);
  CHECK(f.diagnostics.zeros.verdict.find("inconsistent") != std::string::npos);
}

TEST_CASE("Agmon chi is positive, unit norm and sharpens with c'") {
  const auto ng = grid_1d(-6, 6, 121, AxisLabel::nuclear);
  double prev = 1e300;
  for (double c : {0.5, 1.0, 2.0}) {
    const NuclearFunction chi = agmon_chi(ng, c);
    CHECK(norm(chi) == doctest::Approx(1.0));
    double var = 0.0;
    for (std::size_t k = 1; k + 1 < chi.size(); ++k) {
      CHECK(chi[k].real() > 0.0);
      var += ng->weight(k) * std::norm(chi[k]) * ng->coordinate(k, 0) * ng->coordinate(k, 0);
    }
    CHECK(var < prev);
    prev = var;
    CHECK(chi_zero_report(chi, {}).indices.empty());
  }
}

TEST_CASE("decay estimate of an exponential and of a Gaussian") {
  const auto g = grid_rR(161, 161, 20.0, 20.0);
  const Field e = Field::sample(g, [](const Point& p) { return cplx(std::exp(-std::hypot(p.r[0], p.R[0]))); });
  const DecayEstimate d = decay_rate_estimate(e);
  CHECK(d.rate == doctest::Approx(1.0).epsilon(0.05));
  CHECK_FALSE(d.super_exponential);
  const DecayEstimate gd = decay_rate_estimate(shared().e.state);
  CHECK(gd.super_exponential);
  CHECK(gd.outer_rate > gd.inner_rate);
}

TEST_CASE("renormalization is idempotent and gauge invariant") {
  const Harmonic& h = shared();
  const FactorizationResult f = factorize_marginal(h.e.state);
  const FactorizationResult again = renormalize_pair(f.phi, f.chi, f.valid);
  CHECK(max_abs_diff(again.phi, f.phi) < 1e-12);
  CHECK(max_abs_diff(again.chi, f.chi) < 1e-12);
  const Grid& ng = f.chi.grid();
  NuclearFunction half(f.chi.grid_ptr());
  NuclearFunction two(f.chi.grid_ptr());
  for (std::size_t k = 0; k < ng.size(); ++k) {
    half[k] = 0.5 * f.chi[k];
    two[k] = 2.0;
  }
  const FactorizationResult scaled = renormalize_pair(multiply(f.phi, two), half, f.valid);
  CHECK(max_abs_diff(scaled.phi, f.phi) < 1e-12);
  for (std::size_t k = 0; k < ng.size(); ++k) {
    if (f.valid[k]) CHECK(std::abs(scaled.chi[k] - f.chi[k]) < 1e-12);
  }

  const FactorizationResult ag = factorize_agmon(h.e.state, 1.0);
  const FactorizationResult rn = renormalize_pair(ag.phi, ag.chi, ag.valid);
  CHECK(rn.diagnostics.reconstruction_error < 1e-12);
  for (std::size_t k = 0; k < ng.size(); ++k) {
    if (!ag.valid[k]) CHECK_FALSE(rn.valid[k]);
  }
  CHECK_FALSE(rn.valid.front());  // Dirichlet layer: phibar = 0
  CHECK(rn.diagnostics.max_normalization_deviation < 1e-12);
}

}  // TEST_SUITE

TEST_SUITE("nonlinear") {

TEST_CASE("Agmon bracket matches symbolic differentiation in 1D") {
  // chi = exp(-c <R>): T_n chi / chi = -(1/2mu) [c^2 R^2/<R>^2 - c/<R>^3]
  const double c = 1.3, gn = 0.1;
  for (double R : {-2.0, 0.0, 0.7, 3.0}) {
    const double br = std::sqrt(1 + R * R);
    const double tn = -0.5 * gn * (c * c * R * R / (br * br) - c / (br * br * br));
    const double expected = -tn;  // Ebar - E = -chi^{-1} T_n chi
    const std::vector<double> x{R};
    CHECK(agmon_bracket(c, gn, x) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("constant chi on a plateau gives Ebar = E") {
  const auto ng = grid_1d(-4, 4, 41, AxisLabel::nuclear);
  const ModelHamiltonian m(harmonic());
  NuclearFunction chi(ng);
  std::vector<bool> valid(ng->size(), true);
  for (std::size_t k = 0; k < ng->size(); ++k) chi[k] = 1.0;
  const NuclearProfile e = ebar_el(m, chi, 0.7, valid);
  for (std::size_t k = 1; k + 1 < ng->size(); ++k) CHECK(e.values[k].real() == doctest::Approx(0.7));
}

TEST_CASE("Gaussian chi gives a quadratic Ebar profile") {
  const auto ng = grid_1d(-4, 4, 401, AxisLabel::nuclear);
  const ModelHamiltonian m(harmonic());
  NuclearFunction chi(ng);
  for (std::size_t k = 0; k < ng->size(); ++k) chi[k] = std::exp(-ng->coordinate(k, 0) * ng->coordinate(k, 0) / 2);
  const NuclearProfile e = ebar_el(m, chi, 0.0, std::vector<bool>(ng->size(), true));
  // T_n chi / chi = -(1/2mu)(R^2 - 1)
  for (std::size_t k : {100, 200, 300}) {
    const double R = ng->coordinate(k, 0);
    CHECK(e.values[k].real() == doctest::Approx(0.05 * (R * R - 1)).epsilon(1e-3));
  }
}

TEST_CASE("oracle-state residuals converge at second order") {
  const ModelParams p = harmonic();
  const ModelHamiltonian m(p);
  const HarmonicOracle o(p);
  std::vector<double> el, nu;
  // The last valid R nodes sit at h |d log chi| ~ 1 on coarse grids; the
  // asymptotic regime starts around the fourth refinement.
  for (std::size_t k : {4, 8, 16}) {
    const auto g = grid_rR(40 * k + 1, 20 * k + 1);
    const Field psi = sample_normalized(g, [&](double r, double R) { return o.ground(r, R); });
    const FactorizationResult f = factorize_marginal(psi);
    const auto ex = excluded_points(*g, f.valid);
    el.push_back(electronic_residual(m, f.phi, f.chi, o.ground_energy(), ex).residual);
    nu.push_back(nuclear_residual(m, f.phi, f.chi, o.ground_energy(), ex).residual);
  }
  for (std::size_t l = 0; l + 1 < el.size(); ++l) {
    CHECK(std::log2(el[l] / el[l + 1]) > 1.8);
    CHECK(std::log2(nu[l] / nu[l + 1]) > 1.8);
  }
}

TEST_CASE("perturbed phi leaves a residual that does not decrease") {
  const ModelParams p = harmonic();
  const ModelHamiltonian m(p);
  const HarmonicOracle o(p);
  std::vector<double> res;
  for (std::size_t k : {4, 8}) {
    const auto g = grid_rR(40 * k + 1, 20 * k + 1);
    const Field psi = sample_normalized(g, [&](double r, double R) { return o.ground(r, R); });
    FactorizationResult f = factorize_marginal(psi);
    const Field bump = Field::sample(g, [](const Point& q) { return cplx(q.r[0] * std::exp(-q.r[0] * q.r[0])); });
    f.phi += 0.1 * bump;
    res.push_back(electronic_residual(m, f.phi, f.chi, o.ground_energy(), excluded_points(*g, f.valid)).residual);
  }
  CHECK(res[1] > 0.5 * res[0]);
  CHECK(res[1] > 1e-2);
}

TEST_CASE("nuclear residual is homogeneous in chibar") {
  const Harmonic& h = shared();
  const FactorizationResult f = factorize_marginal(h.e.state);
  const auto ex = excluded_points(*h.g, f.valid);
  NuclearFunction c3 = f.chi;
  c3 *= 3.0;
  const double r1 = nuclear_residual(h.m, f.phi, f.chi, h.e.energy, ex).residual;
  const double r3 = nuclear_residual(h.m, f.phi, NuclearFunction(c3), h.e.energy, ex).residual;
  CHECK(r3 == doctest::Approx(3.0 * r1).epsilon(1e-10));
}

TEST_CASE("separable model: R-independent phi has no cross term and nucleqn-3 is the 1D oscillator") {
  const ModelParams p = harmonic(10.0, 0.0);
  const ModelHamiltonian m(p);
  const auto g = grid_rR(81, 41);
  // Exact discrete product: clamped electronic ground state times the 1D
  // nuclear oscillator ground state on the same R nodes.
  const HamiltonianOperator hc = m.clamped(*g, 0.0);
  const auto [eu, u] = dense_ground(hc);
  const GridPtr nuc = g->subgrid(AxisLabel::nuclear);
  std::vector<double> vR(nuc->size());
  for (std::size_t k = 0; k < vR.size(); ++k) vR[k] = 0.5 * p.k1 * nuc->coordinate(k, 0) * nuc->coordinate(k, 0);
  const HamiltonianOperator hn(nuc, m.nuclear_mass_matrix(*nuc), vR);
  const auto [ew, w] = dense_ground(hn);
  Field psi(g);
  for (std::size_t i = 0; i < g->size(); ++i) psi[i] = u[g->index_along(i, 0)] * w[g->index_along(i, 1)];
  const double E = eu + ew;

  const FactorizationResult f = factorize_marginal(psi, {}, 1e-6);
  const auto ex = excluded_points(*g, f.valid);
  const auto [el3, nuc3] = normalized_system_residuals(m, f.phi, f.chi, E, ex);
  CHECK(el3.residual < 1e-8);
  CHECK(nuc3.residual < 1e-10);
  const NuclearProfile up = pseudo_potential(m, f.phi, f.valid);
  for (std::size_t k = 0; k < nuc->size(); ++k) {
    if (!up.valid[k]) continue;
    CHECK(std::abs(up.values[k].real() - (eu + vR[k])) < 1e-10);
  }
}

TEST_CASE("unnormalized phi is a contract violation for the normalized system") {
  const Harmonic& h = shared();
  FactorizationResult f = factorize_marginal(h.e.state);
  f.phi *= 1.5;
  CHECK_THROWS_AS(normalized_system_residuals(h.m, f.phi, f.chi, h.e.energy), Error);
}

TEST_CASE("E - U equals T_n chi / chi on the valid set") {
  const Harmonic& h = shared();
  const FactorizationResult f = factorize_marginal(h.e.state);
  const NuclearProfile u = pseudo_potential(h.m, f.phi, f.valid);
  const NuclearProfile eb = ebar_el(h.m, f.chi, h.e.energy, f.valid);
  for (std::size_t k = 5; k < 36; ++k) {
    if (!u.valid[k] || !eb.valid[k]) continue;
    // ebar = E - T_n chi / chi, so E - U - (E - ebar) = ebar - U
    CHECK(std::abs(eb.values[k].real() - u.values[k].real()) < 5e-2);
  }
}

TEST_CASE("reconstruction residual equals the eigen residual for an exact factorization") {
  const Harmonic& h = shared();
  const FactorizationResult f = factorize_marginal(h.e.state, {}, 1e-300);
  const double rec = reconstruction_residual(h.m, f.phi, f.chi, h.e.energy, excluded_points(*h.g, f.valid)).residual;
  CHECK(std::abs(rec - h.e.residual) <= 1e-10 * std::max(h.e.residual, 1.0));
  CHECK(reconstruction_residual(h.m, Field(h.g), f.chi, h.e.energy).residual == 0.0);
}

TEST_CASE("masked band concentrates the reconstruction residual at its edges") {
  const Harmonic& h = shared();
  FactorizationResult f = factorize_marginal(h.e.state);
  for (std::size_t i = 0; i < h.g->axis(0).size(); ++i) {
    for (std::size_t k = 18; k <= 22; ++k) f.phi[i * h.g->stride(0) + k * h.g->stride(1)] = 0.0;
  }
  const ResidualReport r = reconstruction_residual(h.m, f.phi, f.chi, h.e.energy, {}, true);
  REQUIRE(r.field);
  double inside = 0.0, edges = 0.0;
  for (std::size_t i = 0; i < h.g->size(); ++i) {
    const std::size_t k = h.g->index_along(i, 1);
    if (k == 17 || k == 23) edges += std::norm((*r.field)[i]);
    if (k < 16 || k > 24) inside += std::norm((*r.field)[i]);
  }
  CHECK(edges > 1e6 * inside);
}

TEST_CASE("drifted factors expose the drift magnitude") {
  const Harmonic& h = shared();
  const FactorizationResult f = factorize_marginal(h.e.state);
  auto drifted = [&](double eps) {
    NuclearFunction chi = f.chi;
    for (std::size_t k = 0; k < chi.size(); ++k) chi[k] *= 1.0 + eps * chi.grid().coordinate(k, 0);
    return reconstruction_residual(h.m, f.phi, chi, h.e.energy).residual;
  };
  const double r1 = drifted(1e-4), r2 = drifted(2e-4);
  CHECK(r1 > 1e3 * h.e.residual);
  CHECK(r2 / r1 == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("Agmon electronic equation: phi = 0 gives zero and the discrete form is the exact identity") {
  const Harmonic& h = shared();
  CHECK(agmon_electronic_residual(h.m, Field(h.g), 1.0, h.e.energy).residual == 0.0);
  const FactorizationResult f = factorize_agmon(h.e.state, 1.0);
  const ResidualReport d = agmon_electronic_residual(h.m, f.phi, 1.0, h.e.energy, AgmonForm::discrete, true);
  REQUIRE(d.field);
  const Field chid = multiply(*d.field, f.chi);
  Field full = h.m.internal(h.g).apply(h.e.state);
  const double scale = norm(full);  // ||H' Psi||, the size of the cancelling terms
  full -= cplx(h.e.energy) * h.e.state;
  CHECK(std::abs(norm(chid) - norm(full)) <= 1e-10 * scale);
}

}  // TEST_SUITE
