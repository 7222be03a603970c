#include <doctest.h>

#include <cmath>
#include <numbers>

#include "exfact/sobolev.hpp"
#include "support.hpp"

using namespace exfact;
using namespace testing;

TEST_SUITE("grid") {

TEST_CASE("1D axis spacing and trapezoid weights") {
  const auto g = grid_1d(-10, 10, 201);
  CHECK(g->axis(0).spacing() == doctest::Approx(0.1));
  double s = 0.0;
  for (double w : g->weights()) s += w;
  CHECK(g->size() == 201);
  CHECK(s == doctest::Approx(20.0).epsilon(1e-13));
}

TEST_CASE("2D tensor grid size and product weights") {
  const auto g = build_grid(GridSpec{{cartesian_axis(AxisLabel::electronic, -8, 8, 161),
                                      cartesian_axis(AxisLabel::nuclear, 0, 4, 81)}});
  CHECK(g->size() == 13041);
  const std::size_t i = 5 * g->stride(0) + 7 * g->stride(1);
  CHECK(g->weight(i) == doctest::Approx(g->axis(0).weight(5) * g->axis(1).weight(7)));
  CHECK(g->volume() == doctest::Approx(64.0));
}

TEST_CASE("degenerate axes are rejected") {
  CHECK_THROWS_AS(build_grid(GridSpec{{cartesian_axis(AxisLabel::electronic, 0, 1, 1)}}), ShapeError);
  CHECK_THROWS_AS(build_grid(GridSpec{{cartesian_axis(AxisLabel::electronic, 1, 0, 11)}}), ShapeError);
}

TEST_CASE("radial axis is cell centred with exact shell weights") {
  const auto g = build_grid(GridSpec{{radial_axis(AxisLabel::electronic, 2.0, 4)}});
  CHECK(g->axis(0).point(0) == doctest::Approx(0.25));
  double s = 0.0;
  for (double w : g->weights()) s += w;
  CHECK(s == doctest::Approx(8.0 / 3.0));  // int_0^2 s^2 ds
  CHECK(g->interior_count() == 4);
}

TEST_CASE("normalized Gaussian has unit norm up to O(h^2)") {
  double prev = 1.0;
  for (std::size_t n : {41, 81, 161}) {
    const auto g = grid_1d(-8, 8, n);
    Field u = Field::sample(g, [](const Point& p) { return cplx(std::exp(-p.coords[0] * p.coords[0] / 2)); });
    const double exact = std::sqrt(std::sqrt(std::numbers::pi));
    const double err = std::abs(norm(u) - exact);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("Dirichlet sine modes are orthogonal") {
  const auto g = grid_1d(0, 1, 101);
  auto mode = [&](int k) {
    return Field::sample(g, [k](const Point& p) { return cplx(std::sin(k * std::numbers::pi * p.coords[0])); });
  };
  CHECK(std::abs(inner_product(mode(2), mode(5))) < 1e-12);
}

TEST_CASE("inner product of fields on different grids is a shape error") {
  Field a(grid_1d(0, 1, 101)), b(grid_1d(0, 1, 201));
  CHECK_THROWS_AS(inner_product(a, b), ShapeError);
}

TEST_CASE("separable marginal norm returns |g2|") {
  const auto g = grid_rR(81, 41);
  const Axis& ra = g->axis(0);
  double n1 = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) n1 += ra.weight(i) * std::exp(-ra.point(i) * ra.point(i));
  n1 = std::sqrt(n1);
  const Field psi = Field::sample(g, [&](const Point& p) {
    return cplx(std::exp(-p.r[0] * p.r[0] / 2) / n1 * (p.R[0] - 0.5) * std::exp(-p.R[0] * p.R[0]));
  });
  const NuclearFunction n = marginal_norm(psi);
  const Grid& ng = n.grid();
  double worst = 0.0;
  for (std::size_t k = 0; k < ng.size(); ++k) {
    const double R = ng.coordinate(k, 0);
    worst = std::max(worst, std::abs(n[k].real() - std::abs((R - 0.5) * std::exp(-R * R))));
  }
  CHECK(worst < 1e-13);
  CHECK(norm(marginal_norm(Field(g))) == 0.0);
}

TEST_CASE("kinetic stencil reproduces the 3-point dispersion relation") {
  const auto g = grid_1d(0, 1, 101);
  const double h = g->axis(0).spacing();
  const int k = 3;
  const Field u = Field::sample(g, [&](const Point& p) { return cplx(std::sin(k * std::numbers::pi * p.coords[0])); });
  const Field tu = apply_kinetic(u, InverseMass::diagonal({1.0}));
  const double lam = 2.0 / (h * h) * std::pow(std::sin(k * std::numbers::pi * h / 2), 2);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < g->size(); ++i) worst = std::max(worst, std::abs(tu[i] - lam * u[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("kinetic operator annihilates constants away from the boundary") {
  const auto g = grid_1d(-5, 5, 51);
  const Field one = Field::sample(g, [](const Point&) { return cplx(1.0); });
  const Field t = kinetic_stencil(one, InverseMass::diagonal({1.0}));
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < g->size(); ++i) worst = std::max(worst, std::abs(t[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("adjointness with compactly supported test functions") {
  const auto g = grid_rR(61, 41);
  const InverseMass G = InverseMass::diagonal({1.0, 0.1});
  const Field u = Field::sample(g, [](const Point& p) { return cplx(std::cos(p.r[0]) * (1 + p.R[0]), 0.3 * p.r[0]); });
  const Field h = Field::sample(g, [](const Point& p) {
    const double s = p.r[0] * p.r[0] / 9 + p.R[0] * p.R[0] / 4;
    return cplx(s < 1 ? std::exp(-1 / (1 - s)) : 0.0);
  });
  const auto res = adjointness_residual(u, h, G);
  CHECK(res.within_tolerance());
  CHECK_FALSE(res.boundary_leak);

  const Field leak = Field::sample(g, [](const Point& p) { return cplx(1.0 + 0.1 * p.r[0]); });
  CHECK(adjointness_residual(u, leak, G).boundary_leak);
}

TEST_CASE("adjointness for the hydrogenic cusp profile on a radial axis") {
  const auto g = build_grid(GridSpec{{radial_axis(AxisLabel::electronic, 20.0, 400)}});
  const Field u = Field::sample(g, [](const Point& p) { return cplx(std::exp(-p.coords[0])); });
  const Field h = Field::sample(g, [](const Point& p) {
    const double s = p.coords[0];
    return cplx(s < 5 ? std::exp(-1 / (1 - s * s / 25)) : 0.0);
  });
  CHECK(adjointness_residual(u, h, InverseMass::diagonal({1.0})).within_tolerance());
}

TEST_CASE("parallel stencils match serial bit for bit") {
  const auto g = grid_rR(81, 41);
  const Field u = Field::sample(g, [](const Point& p) { return cplx(std::exp(-p.r[0] * p.r[0] - p.R[0])); });
  const InverseMass G = InverseMass::diagonal({1.0, 0.1});
  set_thread_count(1);
  const Field a = apply_kinetic(u, G);
  set_thread_count(3);
  const Field b = apply_kinetic(u, G);
  set_thread_count(1);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("parallel_tasks rethrows the lowest failing index") {
  set_thread_count(2);
  try {
    parallel_tasks(10, [](std::size_t i) {
      if (i == 3 || i == 7) throw Error("task " + std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "task 3");
  }
  set_thread_count(1);
}

}  // TEST_SUITE

TEST_SUITE("sobolev") {

std::vector<Field> family(const std::function<double(double)>& f, std::initializer_list<std::size_t> ns) {
  std::vector<Field> out;
  for (std::size_t n : ns) {
    const auto g = grid_1d(-2, 2, n);
    out.push_back(Field::sample(g, [&](const Point& p) { return cplx(f(p.coords[0])); }));
  }
  return out;
}

double bump(double x) { return std::abs(x) < 1.5 ? std::exp(-1.0 / (1.0 - x * x / 2.25)) : 0.0; }

TEST_CASE("smooth Gaussian: all norms converge") {
  const auto fam = family([](double x) { return std::exp(-4 * x * x); }, {201, 401, 801, 1601});
  const auto r = sobolev_report(fam);
  CHECK(r.l2 == Verdict::converging);
  CHECK(r.h1 == Verdict::converging);
  CHECK(r.h2 == Verdict::converging);
}

TEST_CASE("kink |x| bump: L2, H1 converge and H2 diverges") {
  const auto fam = family([](double x) { return std::abs(x) * bump(x); }, {201, 401, 801, 1601});
  const auto r = sobolev_report(fam);
  CHECK(r.l2 == Verdict::converging);
  CHECK(r.h1 == Verdict::converging);
  CHECK(r.h2 == Verdict::diverging);
}

TEST_CASE("hydrogenic radial profile is in H2 in three dimensions") {
  std::vector<Field> fam;
  for (std::size_t n : {200, 400, 800, 1600}) {
    const auto g = build_grid(GridSpec{{radial_axis(AxisLabel::electronic, 30.0, n)}});
    fam.push_back(Field::sample(g, [](const Point& p) { return cplx(std::exp(-p.coords[0])); }));
  }
  const auto r = sobolev_report(fam);
  CHECK(r.l2 == Verdict::converging);
  CHECK(r.h1 == Verdict::converging);
  CHECK(r.h2 == Verdict::converging);
}

TEST_CASE("log-log slope of an exact power law") {
  const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
}

}  // TEST_SUITE
