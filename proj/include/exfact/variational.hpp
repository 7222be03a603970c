#pragma once

// Variational functionals over factor pairs. Gradients are Riesz
// representers under Re<., .>, so d tau[point + eps dir]/d eps at eps = 0 is
// Re<grad_phi, dphi> + Re<grad_chi, dchi>_R + grad_lambda dlambda + grad_mu dmu.

#include <vector>

#include "exfact/grid.hpp"
#include "exfact/models.hpp"
#include "exfact/nonlinear.hpp"

namespace exfact {

struct TauPoint {
  Field phibar;
  NuclearFunction chibar;
  double lambda = 0.0;
  double mu_l = 0.0;  // Lagrange multiplier of the chi normalization
};

struct TauDirection {
  Field dphi;             // empty = zero
  NuclearFunction dchi;   // empty = zero
  double dlambda = 0.0;
  double dmu = 0.0;
};

struct TauGradient {
  Field phi;             // 2 chibar^* (H' - lambda) phibar chibar
  NuclearFunction chi;   // 2 (<phibar|(H' - lambda) phibar chibar>_r - mu_l chibar)
  double lambda = 0.0;   // 1 - ||phibar chibar||^2
  double mu = 0.0;       // 1 - ||chibar||^2
};

/// <Psi, H' Psi> + lambda (1 - ||Psi||^2) + mu_l (1 - ||chibar||^2), Psi = phibar chibar.
double tau(const HamiltonianOperator& h, const TauPoint& p);
TauGradient tau_gradient(const HamiltonianOperator& h, const TauPoint& p);
double tau_directional_derivative(const HamiltonianOperator& h, const TauPoint& p, const TauDirection& d);

struct MuCheck {
  double abs_mu = 0.0;       // |mu_l| of the point
  double implied_mu = 0.0;   // Re<chi, <phi|(H' - lambda) Psi>_r> / ||chi||^2
  double gradient_norm = 0.0;
  bool consistent = false;   // |mu_l| <= 10 tol
};

/// Requires every gradient component to be below `tol` in norm.
MuCheck mu_multiplier_check(const HamiltonianOperator& h, const TauPoint& p, double tol);

struct TauPrimePoint {
  Field phi;
  double lambda = 0.0;
  NuclearFunction chi;  // fixed exponential factor
  double c_prime = 0.0;
};

/// <phi chi, H' phi chi> + lambda (1 - ||phi chi||^2).
double tau_prime(const HamiltonianOperator& h, const TauPrimePoint& p);
/// (2 chi^* (H' - lambda) phi chi, 1 - ||phi chi||^2).
std::pair<Field, double> tau_prime_gradient(const HamiltonianOperator& h, const TauPrimePoint& p);

struct TauPrimeSchedule {
  std::size_t max_iterations = 20000;
  double tol = 1e-8;              // on ||(H' - lambda) phi chi|| with ||phi chi|| = 1
  std::size_t stall_window = 50;  // iterations over which the best residual must drop
  double stall_ratio = 0.99;      // by at least 1%
};

struct TauPrimeTraceRow {
  std::size_t iteration = 0;
  double tau_prime = 0.0;
  double gradient_norm = 0.0;
  double residual = 0.0;
};

struct TauPrimeResult {
  TauPrimePoint point;
  ResidualReport residual;  // reconstruction residual of (phi chi, lambda)
  std::vector<TauPrimeTraceRow> trace;
  std::size_t iterations = 0;
  double boundary_mass_fraction = 0.0;  // share of ||phi||^2 in the outer 10% R band
  bool boundary_mass_flag = false;      // fraction > 1%
};

class TauPrimeStagnation : public ConvergenceError {
 public:
  TauPrimeStagnation(const std::string& what, TauPrimeResult best)
      : ConvergenceError(what, best.residual.residual, best.iterations), best_(std::move(best)) {}
  const TauPrimeResult& best() const noexcept { return best_; }

 private:
  TauPrimeResult best_;
};

/// Critical point of tau' for the exponential factor with parameter c', from
/// the initial phi. Steps are preconditioned gradient steps on phi (diagonal
/// kinetic preconditioner) combined with the previous step, lambda is the
/// Rayleigh quotient of phi chi.
TauPrimeResult solve_tau_prime_critical(const ModelHamiltonian& model, const GridPtr& grid, double c_prime,
                                        const Field& init, const TauPrimeSchedule& schedule = {});

/// ||phi chi||^2.
double tau0_value(const Field& phi, const NuclearFunction& chi);

}  // namespace exfact
