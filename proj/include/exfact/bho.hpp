#pragma once

// Born-Oppenheimer and Born-Huang reference constructions on a full (r, R)
// grid: clamped-nuclei eigenpairs per R node, expansion coefficients, the
// product ansatz and a node census of nuclear functions.

#include <optional>
#include <string>
#include <vector>

#include "exfact/eigensolve.hpp"
#include "exfact/factorize.hpp"
#include "exfact/grid.hpp"
#include "exfact/models.hpp"

namespace exfact {

struct AdiabaticBasis {
  GridPtr grid;                               // full grid
  GridPtr nuclear;                            // its nuclear sub-grid
  std::size_t n_trunc = 0;
  std::vector<std::vector<double>> energies;  // energies[n][R node]
  std::vector<Field> sigma;                   // sigma[n](r, R) on the full grid, unit norm per fiber
  std::vector<std::size_t> sign_flips;        // per n, flips applied by the alignment sweep
  bool dense = false;                         // per-R problems diagonalized densely

  NuclearFunction surface(std::size_t n) const;
};

struct AdiabaticOptions {
  EigenOptions eigen{1e-10, 20000, 48};
  bool force_dense = false;
};

/// Lowest n_trunc clamped eigenpairs at every R node, then a sign sweep in
/// ascending R so that <sigma_n(R_k), sigma_n(R_{k+1})>_r >= 0. Lanczos is
/// used unless n_trunc + 1 exceeds half the interior electronic dimension,
/// where dense diagonalization takes over.
AdiabaticBasis adiabatic_basis(const ModelHamiltonian& model, const GridPtr& grid, std::size_t n_trunc,
                               const AdiabaticOptions& opt = {});

/// chi_n(R) = <sigma_n(., R), Psi(., R)>_r for n < n_trunc.
std::vector<NuclearFunction> born_huang_coefficients(const Field& psi, const AdiabaticBasis& basis);

/// ||Psi - sum_{n < N} chi_n sigma_n||.
double truncation_residual(const Field& psi, const AdiabaticBasis& basis, std::size_t N);

struct BOOptions {
  bool diagonal_correction = false;  // add <sigma_0|T_n sigma_0>_r to e_0(R)
  EigenOptions eigen{1e-10, 20000, 48};
};

struct BOState {
  double surface_energy = 0.0;   // eigenvalue of T_n + e_0 (+ correction)
  double product_energy = 0.0;   // <Phi, H' Phi> / <Phi, Phi>; the reported E_BO
  NuclearFunction chi;           // nuclear eigenfunction on the surface
  NuclearFunction surface;       // e_0(R) (+ correction)
  std::optional<NuclearFunction> correction;
  Field state;                   // Phi = sigma_0 chi, unit norm
  // Against a reference eigenpair, when given.
  std::optional<double> energy_gap;   // product_energy - E_exact
  std::optional<double> overlap;      // |<Phi, Psi>|
  std::optional<double> distance;     // min over phase of ||Phi - e^{ia} Psi||
};

BOState bo_product_state(const ModelHamiltonian& model, const AdiabaticBasis& basis, const BOOptions& opt = {},
                         const EigenPair* exact = nullptr);

struct NodeCensus {
  std::string name;
  std::vector<std::vector<double>> sign_changes;  // interpolated zero crossing per changing edge
  std::vector<bool> change_in_tube;               // per crossing: an end node lies in the tube
  ZeroReport zeros;                               // near-zeros, tail underflow split off
};

struct NodeReport {
  std::vector<NodeCensus> functions;
  std::size_t changes_in_tube = 0;
  std::size_t changes_outside_tube = 0;
};

struct NamedNuclearFunction {
  std::string name;
  NuclearFunction values;
};

/// Sign changes of each function along every nuclear axis, after removing a
/// global phase (real part of e^{-ia} f with a the phase of the largest
/// value). Near-zero nodes are skipped when pairing signs.
NodeReport node_report(const std::vector<NamedNuclearFunction>& functions, const std::vector<bool>& sigma_n = {},
                       double theta = 1e-8);

}  // namespace exfact
