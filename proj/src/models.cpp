#include "exfact/models.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace exfact {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::coupled_harmonic: return "coupled_harmonic";
    case ModelKind::soft_coulomb_diatomic: return "soft_coulomb_diatomic";
    case ModelKind::radial_hydrogenic: return "radial_hydrogenic";
  }
  return "coupled_harmonic";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "coupled_harmonic" || name == "harmonic") return ModelKind::coupled_harmonic;
  if (name == "soft_coulomb_diatomic" || name == "soft_coulomb") return ModelKind::soft_coulomb_diatomic;
  if (name == "radial_hydrogenic" || name == "hydrogenic") return ModelKind::radial_hydrogenic;
  throw ModelError("unknown model kind '" + name + "'");
}

bool CollisionMask::empty() const {
  for (bool b : sigma) {
    if (b) return false;
  }
  return true;
}

std::vector<bool> nuclear_projection(const Grid& grid, const std::vector<bool>& mask) {
  if (!grid.has(AxisLabel::nuclear)) return {};
  auto sub = grid.subgrid(AxisLabel::nuclear);
  std::vector<bool> out(sub->size(), false);
  if (mask.empty()) return out;
  if (mask.size() != grid.size()) throw ShapeError("mask length does not match grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (mask[i]) out[grid.project(i, AxisLabel::nuclear)] = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// HamiltonianOperator

HamiltonianOperator::HamiltonianOperator(GridPtr grid, InverseMass g, std::vector<double> potential)
    : grid_(std::move(grid)), g_(std::move(g)), v_(std::move(potential)) {
  if (v_.size() != grid_->size()) throw ShapeError("potential length does not match grid");
  if (g_.rank() != grid_->rank()) throw ShapeError("inverse-mass rank does not match grid rank");
  for (double v : v_) {
    if (!std::isfinite(v)) throw ModelError("potential is not finite on the grid");
  }
}

Field HamiltonianOperator::apply(const Field& u) const {
  if (!(u.grid() == *grid_)) throw ShapeError("operator applied to a field on another grid");
  Field out = apply_kinetic(u, g_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!grid_->is_boundary(i)) out[i] += v_[i] * u[i];
  }
  return out;
}

Field HamiltonianOperator::apply_raw(const Field& u) const {
  if (!(u.grid() == *grid_)) throw ShapeError("operator applied to a field on another grid");
  Field out = kinetic_stencil(u, g_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!grid_->is_boundary(i)) out[i] += v_[i] * u[i];
  }
  return out;
}

std::vector<double> HamiltonianOperator::diagonal() const {
  const Grid& g = *grid_;
  std::vector<double> d(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_boundary(i)) continue;
    double s = v_[i];
    for (std::size_t a = 0; a < g.rank(); ++a) {
      const Axis& ax = g.axis(a);
      const double h = ax.spacing();
      if (ax.kind() == AxisKind::cartesian) {
        s += g_(a, a) / (h * h);
      } else {
        const std::size_t k = g.index_along(i, a);
        s += 0.5 * g_(a, a) * (ax.face_area(k) * (k > 0 ? 1.0 : 0.0) + ax.face_area(k + 1)) / (h * ax.weight(k));
      }
    }
    d[i] = s;
  }
  return d;
}

// ---------------------------------------------------------------------------
// ModelHamiltonian

ModelHamiltonian::ModelHamiltonian(ModelParams params) : p_(params) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ModelError(std::string(name) + " must be positive");
  };
  positive(p_.electron_mass, "electron mass");
  positive(p_.nuclear_mass, "nuclear reduced mass");
  if (!(p_.mass_polarization >= 0.0)) throw ModelError("mass-polarization coefficient must be >= 0");
  switch (p_.kind) {
    case ModelKind::coupled_harmonic:
      positive(p_.k1, "k1");
      positive(p_.k2, "k2");
      if (!std::isfinite(p_.coupling)) throw ModelError("coupling must be finite");
      break;
    case ModelKind::soft_coulomb_diatomic:
      positive(p_.soft_nuclear, "softening a (0 is only permitted for radial_hydrogenic)");
      positive(p_.soft_electronic, "softening b (0 is only permitted for radial_hydrogenic)");
      if (!std::isfinite(p_.charge_a) || !std::isfinite(p_.charge_b)) throw ModelError("charges must be finite");
      break;
    case ModelKind::radial_hydrogenic:
      positive(p_.charge, "charge Z");
      if (!(p_.softening >= 0.0)) throw ModelError("softening must be >= 0");
      break;
  }
}

ModelHamiltonian build_model(const ModelParams& params) { return ModelHamiltonian(params); }

double ModelHamiltonian::potential(double r, double R) const {
  switch (p_.kind) {
    case ModelKind::coupled_harmonic: {
      const double d = r - p_.coupling * R;
      return 0.5 * p_.k1 * R * R + 0.5 * p_.k2 * d * d;
    }
    case ModelKind::soft_coulomb_diatomic: {
      const double a = p_.soft_nuclear;
      const double b = p_.soft_electronic;
      return p_.charge_a * p_.charge_b / std::sqrt(R * R + a * a) -
             p_.charge_a / std::sqrt((r - 0.5 * R) * (r - 0.5 * R) + b * b) -
             p_.charge_b / std::sqrt((r + 0.5 * R) * (r + 0.5 * R) + b * b);
    }
    case ModelKind::radial_hydrogenic: {
      const double s = std::sqrt(r * r + p_.softening * p_.softening);
      if (s == 0.0) throw ModelError("grid point on the Coulomb singularity: a staggered grid is required");
      return -p_.charge / s;
    }
  }
  return 0.0;
}

void ModelHamiltonian::check_grid(const Grid& grid, bool clamped) const {
  const auto er = grid.axes_with(AxisLabel::electronic);
  const auto en = grid.axes_with(AxisLabel::nuclear);
  if (er.size() != 1) throw ModelError(to_string(p_.kind) + " needs exactly one r axis");
  if (p_.kind == ModelKind::radial_hydrogenic) {
    if (grid.axis(er[0]).kind() != AxisKind::radial) {
      throw ModelError("radial_hydrogenic needs a radial (staggered) r axis");
    }
    if (!en.empty()) throw ModelError("radial_hydrogenic takes no R axis");
    return;
  }
  if (grid.axis(er[0]).kind() != AxisKind::cartesian) throw ModelError(to_string(p_.kind) + " needs a cartesian r axis");
  if (clamped) {
    if (!en.empty()) throw ModelError("clamped grids carry electronic axes only");
    return;
  }
  if (en.size() != 1 || grid.axis(en[0]).kind() != AxisKind::cartesian) {
    throw ModelError(to_string(p_.kind) + " needs exactly one cartesian R axis");
  }
}

InverseMass ModelHamiltonian::inverse_mass(const Grid& grid) const {
  std::vector<double> d(grid.rank());
  for (std::size_t a = 0; a < grid.rank(); ++a) {
    d[a] = grid.axis(a).label() == AxisLabel::electronic ? electronic_inverse_mass() : nuclear_inverse_mass();
  }
  return InverseMass::diagonal(std::move(d));
}

InverseMass ModelHamiltonian::nuclear_mass_matrix(const Grid& nuclear_grid) const {
  return InverseMass::diagonal(std::vector<double>(nuclear_grid.rank(), nuclear_inverse_mass()));
}

namespace {

std::vector<double> sample_potential(const ModelHamiltonian& m, const Grid& g, const double* fixed_R) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r = 0.0;
    double R = fixed_R ? *fixed_R : 0.0;
    for (std::size_t a = 0; a < g.rank(); ++a) {
      (g.axis(a).label() == AxisLabel::electronic ? r : R) = g.coordinate(i, a);
    }
    v[i] = m.potential(r, R);
  }
  return v;
}

}  // namespace

HamiltonianOperator ModelHamiltonian::internal(GridPtr grid) const {
  check_grid(*grid);
  auto v = sample_potential(*this, *grid, nullptr);
  return HamiltonianOperator(grid, inverse_mass(*grid), std::move(v));
}

HamiltonianOperator ModelHamiltonian::clamped(const Grid& full, double R) const {
  if (p_.kind == ModelKind::radial_hydrogenic) throw ModelError("radial_hydrogenic has no nuclear coordinate to clamp");
  const auto en = full.axes_with(AxisLabel::nuclear);
  if (en.size() != 1) throw ModelError("clamped Hamiltonian needs a grid with one R axis");
  const AxisSpec& ax = full.axis(en[0]).spec();
  if (!(R >= ax.lower && R <= ax.upper)) throw ModelError("clamped R value outside the nuclear domain");
  GridPtr el = full.subgrid(AxisLabel::electronic);
  check_grid(*el, true);
  auto v = sample_potential(*this, *el, &R);
  return HamiltonianOperator(el, inverse_mass(*el), std::move(v));
}

CollisionMask ModelHamiltonian::collision_mask(const Grid& grid, double tube_radius) const {
  if (tube_radius < 0.0) throw ModelError("tube radius must be >= 0");
  CollisionMask m;
  m.sigma.assign(grid.size(), false);
  m.sigma_n.assign(grid.size(), false);
  // Softened and harmonic potentials are regular everywhere: no collision set.
  if (p_.kind != ModelKind::radial_hydrogenic || p_.softening > 0.0 || tube_radius == 0.0) return m;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t a = 0; a < grid.rank(); ++a) {
      if (grid.axis(a).label() == AxisLabel::electronic && grid.coordinate(i, a) < tube_radius) m.sigma[i] = true;
    }
  }
  return m;
}

Field apply_internal_hamiltonian(const ModelHamiltonian& model, const Field& u) {
  return model.internal(u.grid_ptr()).apply(u);
}

Field apply_clamped_hamiltonian(const ModelHamiltonian& model, const Grid& full, double R, const Field& u) {
  auto op = model.clamped(full, R);
  if (!(u.grid() == op.grid())) throw ShapeError("clamped Hamiltonian applied to a field on another grid");
  return op.apply(u);
}

// Log-derivative fit: the first-cell difference carries an O(1) lattice
// artifact, so d ln psi / d rho is fitted linearly over the window
// [sqrt(h), 2 sqrt(h)] / Z of face midpoints and extrapolated to rho = 0.
CuspReport cusp_report(const Field& psi, const ModelHamiltonian& model) {
  if (model.kind() != ModelKind::radial_hydrogenic) throw ModelError("cusp_report needs the radial_hydrogenic model");
  model.check_grid(psi.grid());
  const Axis& ax = psi.grid().axis(0);
  const std::size_t n = ax.size();
  const double h = ax.spacing();
  const double Z = model.params().charge;
  CuspReport rep;
  rep.kato = -Z * model.reduced_electron_mass();

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = psi[i].real();
  if (u[0] < 0.0) {
    for (auto& x : u) x = -x;
  }
  const double step = u[1] - u[0];
  const double origin = u[0] - 0.5 * step;
  if (u[0] == 0.0 || std::abs(origin) < std::abs(step)) {
    rep.node_at_collision = true;
    rep.estimate = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  std::vector<double> xs, ys;
  const double lo = std::sqrt(h) / Z;
  const double hi = 2.0 * std::sqrt(h) / Z;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double mid = static_cast<double>(i + 1) * h;
    if (mid < lo || mid > hi) continue;
    xs.push_back(mid);
  }
  if (xs.size() < 3) {
    xs.clear();
    for (std::size_t i = 1; i <= 3 && i + 1 < n; ++i) xs.push_back(static_cast<double>(i + 1) * h);
  }
  for (double x : xs) {
    const auto i = static_cast<std::size_t>(std::llround(x / h)) - 1;
    if (!(u[i] > 0.0) || !(u[i + 1] > 0.0)) {
      rep.node_at_collision = true;
      rep.estimate = std::numeric_limits<double>::quiet_NaN();
      return rep;
    }
    ys.push_back((std::log(u[i + 1]) - std::log(u[i])) / h);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sx += xs[j];
    sy += ys[j];
    sxx += xs[j] * xs[j];
    sxy += xs[j] * ys[j];
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  rep.estimate = (sy - slope * sx) / k;
  return rep;
}

// ---------------------------------------------------------------------------
// HarmonicOracle

HarmonicOracle::HarmonicOracle(const ModelParams& p) {
  if (p.kind != ModelKind::coupled_harmonic) throw ModelError("normal-mode oracle needs the coupled_harmonic model");
  ModelHamiltonian m(p);
  g_r_ = m.electronic_inverse_mass();
  g_n_ = m.nuclear_inverse_mass();
  k1_ = p.k1;
  k2_ = p.k2;
  const double lc = p.coupling;
  Eigen::Matrix2d K;
  K << p.k2, -p.k2 * lc, -p.k2 * lc, p.k1 + p.k2 * lc * lc;
  const Eigen::Matrix2d Gs = Eigen::Vector2d(std::sqrt(g_r_), std::sqrt(g_n_)).asDiagonal();
  const Eigen::Matrix2d W = Gs * K * Gs;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(W);
  const Eigen::Vector2d w2 = es.eigenvalues();  // ascending
  const Eigen::Matrix2d U = es.eigenvectors();
  omega_ = {std::sqrt(w2(1)), std::sqrt(w2(0))};
  const Eigen::Matrix2d Gis = Gs.inverse();
  const Eigen::Matrix2d root = U * Eigen::Vector2d(std::sqrt(w2(0)), std::sqrt(w2(1))).asDiagonal() * U.transpose();
  const Eigen::Matrix2d A = Gis * root * Gis;
  a_ = {A(0, 0), A(0, 1), A(1, 0), A(1, 1)};
  // q = sqrt(omega) U^T G^{-1/2} X has unit-width ground Gaussian exp(-q^2/2).
  for (int k = 0; k < 2; ++k) {
    const int col = k == 0 ? 1 : 0;
    const Eigen::Vector2d row = std::sqrt(std::sqrt(w2(col))) * (Gis * U.col(col));
    modes_[k] = {row(0), row(1)};
  }
}

double HarmonicOracle::marginal_precision() const { return a_[3] - a_[1] * a_[1] / a_[0]; }

double HarmonicOracle::clamped_energy(double R) const { return 0.5 * k1_ * R * R + 0.5 * std::sqrt(k2_ * g_r_); }

double HarmonicOracle::ground(double r, double R) const {
  return std::exp(-0.5 * (a_[0] * r * r + 2.0 * a_[1] * r * R + a_[3] * R * R));
}

double HarmonicOracle::excited(std::size_t k, double r, double R) const {
  const double q = modes_.at(k)[0] * r + modes_.at(k)[1] * R;
  return q * ground(r, R);
}

Field sample_normalized(GridPtr grid, const std::function<double(double, double)>& f) {
  const auto er = grid->axes_with(AxisLabel::electronic);
  const auto en = grid->axes_with(AxisLabel::nuclear);
  if (er.size() != 1 || en.size() != 1) throw ShapeError("sample_normalized needs one r and one R axis");
  const std::size_t ir = er[0];
  const std::size_t iR = en[0];
  Field u = Field::sample(grid, [&](const Point& p) { return cplx(f(p.coords[ir], p.coords[iR])); });
  const double n = norm(u);
  if (n == 0.0) throw Error("cannot normalize a zero field");
  u *= 1.0 / n;
  return u;
}

}  // namespace exfact
