#pragma once

// Reduced-dimension model Hamiltonians in model units (hbar = m = 1, unit
// Coulomb constant).
//
//   coupled_harmonic       V = k1 R^2 / 2 + k2 (r - coupling R)^2 / 2
//   soft_coulomb_diatomic  V = Za Zb / sqrt(R^2 + a^2) - Za / sqrt((r - R/2)^2 + b^2)
//                              - Zb / sqrt((r + R/2)^2 + b^2)
//   radial_hydrogenic      V = -Z / rho on a cell-centred radial axis
//
// The first two live on one cartesian r axis and one cartesian R axis (either
// order). The electronic inverse mass is 1/m plus the optional
// mass-polarization coefficient; the nuclear inverse mass is 1/mu.

#include <array>
#include <string>
#include <vector>

#include "exfact/grid.hpp"

namespace exfact {

enum class ModelKind { coupled_harmonic, soft_coulomb_diatomic, radial_hydrogenic };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

struct ModelParams {
  ModelKind kind = ModelKind::coupled_harmonic;
  double electron_mass = 1.0;
  double nuclear_mass = 10.0;       // reduced nuclear mass mu
  double mass_polarization = 0.0;   // 1/M_N, added to the electronic inverse mass
  // coupled_harmonic
  double k1 = 1.0;
  double k2 = 1.0;
  double coupling = 1.0;
  // soft_coulomb_diatomic
  double soft_nuclear = 1.0;        // a
  double soft_electronic = 1.0;     // b
  double charge_a = 1.0;
  double charge_b = 1.0;
  // radial_hydrogenic
  double charge = 1.0;
  double softening = 0.0;           // 0 = true singularity
};

/// Points inside the collision tube (true = inside), over the full grid.
struct CollisionMask {
  std::vector<bool> sigma;    // any particle collision
  std::vector<bool> sigma_n;  // nuclear collisions only; subset of sigma

  bool empty() const;
};

/// Projection of a fiber-constant mask onto the nuclear sub-grid.
std::vector<bool> nuclear_projection(const Grid& grid, const std::vector<bool>& mask);

/// H' (or a clamped Hamiltonian) bound to one grid, with the potential sampled.
class HamiltonianOperator {
 public:
  HamiltonianOperator(GridPtr grid, InverseMass g, std::vector<double> potential);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const InverseMass& inverse_mass() const noexcept { return g_; }
  std::span<const double> potential() const noexcept { return v_; }

  /// Projected operator: symmetric, zero on the Dirichlet layer.
  Field apply(const Field& u) const;
  /// Usual-sense stencil on the raw values (zero on the Dirichlet layer).
  Field apply_raw(const Field& u) const;
  /// Diagonal of the projected operator.
  std::vector<double> diagonal() const;

 private:
  GridPtr grid_;
  InverseMass g_;
  std::vector<double> v_;
};

class ModelHamiltonian {
 public:
  explicit ModelHamiltonian(ModelParams params);

  const ModelParams& params() const noexcept { return p_; }
  ModelKind kind() const noexcept { return p_.kind; }

  double electronic_inverse_mass() const { return 1.0 / p_.electron_mass + p_.mass_polarization; }
  double nuclear_inverse_mass() const { return 1.0 / p_.nuclear_mass; }
  /// Reduced electron mass entering the Kato cusp value.
  double reduced_electron_mass() const { return 1.0 / electronic_inverse_mass(); }

  /// Potential at (r, R); radial model: r is the radius and R is ignored.
  double potential(double r, double R) const;

  /// Checks that the grid matches the model dimensionality. `clamped` grids
  /// carry electronic axes only.
  void check_grid(const Grid& grid, bool clamped = false) const;

  InverseMass inverse_mass(const Grid& grid) const;
  InverseMass nuclear_mass_matrix(const Grid& nuclear_grid) const;

  HamiltonianOperator internal(GridPtr grid) const;

  /// H_cn at fixed R on the electronic sub-grid of `full`; R must lie in the
  /// nuclear range of `full`.
  HamiltonianOperator clamped(const Grid& full, double R) const;

  CollisionMask collision_mask(const Grid& grid, double tube_radius) const;

 private:
  ModelParams p_;
};

ModelHamiltonian build_model(const ModelParams& params);

Field apply_internal_hamiltonian(const ModelHamiltonian& model, const Field& u);
Field apply_clamped_hamiltonian(const ModelHamiltonian& model, const Grid& full, double R, const Field& u);

struct CuspReport {
  double estimate = 0.0;  // extrapolated lim psi'/psi at the collision
  double kato = 0.0;      // -Z times the reduced electron mass
  bool node_at_collision = false;
};

/// Log-derivative at rho -> 0 for a radial_hydrogenic state (see models.cpp
/// for the fitting window).
CuspReport cusp_report(const Field& psi, const ModelHamiltonian& model);

/// Closed-form normal modes of the coupled_harmonic model.
class HarmonicOracle {
 public:
  explicit HarmonicOracle(const ModelParams& params);

  std::array<double, 2> frequencies() const { return omega_; }  // descending
  double ground_energy() const { return 0.5 * (omega_[0] + omega_[1]); }
  /// Precision matrix A of exp(-X^T A X / 2) in (r, R) order.
  std::array<double, 4> precision() const { return a_; }
  /// Precision of the Gaussian marginal |chi|^2 = exp(-a R^2).
  double marginal_precision() const;
  /// Clamped electronic ground energy e0(R).
  double clamped_energy(double R) const;
  /// Unnormalized ground state.
  double ground(double r, double R) const;
  /// Unnormalized state with one quantum in mode k (0 = higher frequency).
  double excited(std::size_t k, double r, double R) const;
  double excited_energy(std::size_t k) const { return ground_energy() + omega_[k]; }

 private:
  double g_r_ = 1.0;
  double g_n_ = 1.0;
  double k1_ = 1.0;
  double k2_ = 1.0;
  std::array<double, 2> omega_{};
  std::array<double, 4> a_{};
  std::array<std::array<double, 2>, 2> modes_{};  // normal coordinate q_k = modes_[k] . (r, R)
};

/// Samples f(r, R) on a grid with one r and one R axis and normalizes it.
Field sample_normalized(GridPtr grid, const std::function<double(double, double)>& f);

}  // namespace exfact
