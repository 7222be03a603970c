#pragma once

// Residuals of the factor equations, evaluated away from excluded points.
//
// With raw stencils the discrete Leibniz rule is exact:
//   T_n(phi chi) = phi T_n chi + chi T_n phi - C(chi, phi),
//   C(chi, phi) = 1/2 sum_a G_aa (D+ chi D+ phi + D- chi D- phi),
// so every residual below is an exact rewriting of (H' - E)(phi chi) at
// interior nodes. The cross term carries the full inverse mass G_aa = 1/mu.
//
// The equations that differentiate phi also drop points whose R neighbours
// are excluded, since phi is unset on excluded fibers. The reconstruction
// residual acts on phi chi and keeps them.

#include <optional>
#include <string>
#include <vector>

#include "exfact/grid.hpp"
#include "exfact/models.hpp"

namespace exfact {

struct ResidualReport {
  std::string equation;           // eleqn-1 | nucleqn-1 | eleqn-2 | eleqn-3 | nucleqn-3 | reconstruction
  double residual = 0.0;          // L2 norm over evaluated points
  double excluded_fraction = 0.0; // weight of excluded points / total weight
  double h = 0.0;                 // largest grid spacing
  std::optional<Field> field;
};

/// Values on R nodes with their validity flags.
struct NuclearProfile {
  NuclearFunction values;
  std::vector<bool> valid;
};

/// Ebar_el(R) = E - chibar^{-1} T_n chibar on valid interior R nodes.
NuclearProfile ebar_el(const ModelHamiltonian& model, const NuclearFunction& chibar, double E,
                       const std::vector<bool>& valid);

/// (H' - chibar^{-1} C(chibar, .) - Ebar_el) phibar at interior, non-excluded points.
ResidualReport electronic_residual(const ModelHamiltonian& model, const Field& phibar, const NuclearFunction& chibar,
                                   double E, const std::vector<bool>& excluded = {}, bool keep_field = false);

/// T_n chibar - (E - <phibar|Hbar_el phibar>_r / ||phibar||_r^2) chibar.
ResidualReport nuclear_residual(const ModelHamiltonian& model, const Field& phibar, const NuclearFunction& chibar,
                                double E, const std::vector<bool>& excluded = {}, bool keep_field = false);

enum class AgmonForm {
  closed_form,  // analytic drift (c'/mu)(R/<R>) . D0 and the analytic bracket
  discrete      // drift and bracket from the sampled exponential (exact identity)
};

/// Linear electronic equation for the exponential nuclear factor:
///   (H' + (c'/mu)(R/<R>) . grad_R - Ebar) phi = 0,
///   Ebar = E + c'/(2 mu <R>^3) [ |R|^2 (c' <R> + 1) - d_R <R>^2 ].
ResidualReport agmon_electronic_residual(const ModelHamiltonian& model, const Field& phi, double c_prime, double E,
                                         AgmonForm form = AgmonForm::closed_form, bool keep_field = false);

/// Closed-form Ebar of the exponential factor at one nuclear point.
double agmon_bracket(double c_prime, double inverse_mass, std::span<const double> R);

/// Residuals of the normalized system (||phi||_r = 1 on the evaluated set).
std::pair<ResidualReport, ResidualReport> normalized_system_residuals(const ModelHamiltonian& model, const Field& phi,
                                                                      const NuclearFunction& chi, double E,
                                                                      const std::vector<bool>& excluded = {});

/// U(R) = <phi(., R), H' phi(., R)>_r on valid interior R nodes.
NuclearProfile pseudo_potential(const ModelHamiltonian& model, const Field& phi, const std::vector<bool>& valid);

/// ||(H' - E)(phi chi)|| over non-excluded points, projected operator.
ResidualReport reconstruction_residual(const ModelHamiltonian& model, const Field& phi, const NuclearFunction& chi,
                                       double E, const std::vector<bool>& excluded = {}, bool keep_field = false);

}  // namespace exfact
