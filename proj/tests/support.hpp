#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "exfact/grid.hpp"
#include "exfact/models.hpp"

namespace testing {

using namespace exfact;

inline GridPtr grid_1d(double lo, double hi, std::size_t n, AxisLabel label = AxisLabel::electronic) {
  return build_grid(GridSpec{{cartesian_axis(label, lo, hi, n)}});
}

inline GridPtr grid_rR(std::size_t nr, std::size_t nR, double Lr = 8.0, double LR = 4.0) {
  return build_grid(GridSpec{{cartesian_axis(AxisLabel::electronic, -Lr, Lr, nr),
                              cartesian_axis(AxisLabel::nuclear, -LR, LR, nR)}});
}

inline ModelParams harmonic(double mu = 10.0, double coupling = 1.0) {
  ModelParams p;
  p.kind = ModelKind::coupled_harmonic;
  p.nuclear_mass = mu;
  p.coupling = coupling;
  return p;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Lowest eigenpair of the projected operator by dense diagonalization; the
// state has unit weighted norm.
inline std::pair<double, Field> dense_ground(const HamiltonianOperator& h) {
  const Grid& g = h.grid();
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.is_boundary(i)) in.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(in.size());
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Field e(h.grid_ptr());
    e[in[j]] = 1.0;
    const Field he = h.apply(e);
    for (Eigen::Index i = 0; i < n; ++i) S(i, j) = he[in[i]].real() * std::sqrt(g.weight(in[i]) / g.weight(in[j]));
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  Field x(h.grid_ptr());
  const double sign = es.eigenvectors()(n / 2, 0) < 0 ? -1.0 : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) x[in[i]] = sign * es.eigenvectors()(i, 0) / std::sqrt(g.weight(in[i]));
  return {es.eigenvalues()(0), x};
}

}  // namespace testing
