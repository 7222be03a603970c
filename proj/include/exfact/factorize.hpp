#pragma once

// Nuclear/conditional factor pairs Psi = phi * chi.
//
// Masks over R nodes use `valid` (true = usable); masks over full-grid points
// use `excluded` (true = left out of a residual).

#include <string>
#include <vector>

#include "exfact/grid.hpp"

namespace exfact {

struct ZeroReport {
  std::vector<std::size_t> indices;      // near-zeros among interior R nodes
  std::vector<double> coordinates;       // first R coordinate of each near-zero
  std::vector<bool> inside_tube;
  std::vector<std::size_t> tail_underflow;  // near-zeros connected to the Dirichlet layer
  bool consistent = true;
  std::string verdict;
};

/// Near-zeros |chi| <= theta max|chi| on interior R nodes, classified against
/// the nuclear collision tube (mask over R nodes; empty = no tube). Near-zeros
/// that connect to the Dirichlet layer are tail underflow of a decaying
/// profile and are reported separately.
ZeroReport chi_zero_report(const NuclearFunction& chi, const std::vector<bool>& sigma_n, double theta = 1e-8);

struct FactorizationDiagnostics {
  double max_normalization_deviation = 0.0;  // max | ||phi||_r - 1 | on the valid set
  double reconstruction_error = 0.0;         // max |Psi - phi chi| / max |Psi| on the valid set
  ZeroReport zeros;
};

struct FactorizationResult {
  NuclearFunction chi;
  Field phi;
  std::vector<bool> valid;      // over R nodes
  std::vector<double> phase;    // S(R) used (empty = 0)
  FactorizationDiagnostics diagnostics;
};

/// chi(R) = exp(i S(R)) n(R), n the marginal norm; `phase` empty means S = 0.
NuclearFunction marginal_chi(const Field& psi, const std::vector<double>& phase = {});

struct Conditional {
  Field phi;
  std::vector<bool> valid;
};

/// phi = Psi / chi where |chi| > theta max|chi|; zero elsewhere.
Conditional conditional_phi(const Field& psi, const NuclearFunction& chi, double theta = 1e-8);

/// a exp(-c <R>), <R> = (1 + |R|^2)^{1/2}, unit norm on the nuclear grid.
NuclearFunction agmon_chi(const GridPtr& nuclear_grid, double c_prime);

struct DecayEstimate {
  double rate = 0.0;              // shell-averaged exponential rate
  double inner_rate = 0.0;        // inner half of the shell
  double outer_rate = 0.0;        // outer half of the shell
  double recommended_c_prime = 0.0;
  bool super_exponential = false;
};

/// Fit of log|Psi| against |(r, R)| over the outer quarter of the inscribed
/// radius of the domain.
DecayEstimate decay_rate_estimate(const Field& psi);

/// phi = phibar / ||phibar||_r, chi = chibar ||phibar||_r on the valid set.
/// Fibers with ||phibar||_r <= theta max leave the valid set.
FactorizationResult renormalize_pair(const Field& phibar, const NuclearFunction& chibar,
                                     const std::vector<bool>& valid, double theta = 1e-8);

/// Marginal route: chi from the marginal, phi the conditional quotient.
FactorizationResult factorize_marginal(const Field& psi, const std::vector<double>& phase = {},
                                       double theta = 1e-8, const std::vector<bool>& sigma_n = {});

/// Agmon route: fixed exponential chi, phi = Psi / chi.
FactorizationResult factorize_agmon(const Field& psi, double c_prime, double theta = 1e-8);

/// Fills normalization, reconstruction and zero diagnostics against Psi.
void diagnose(FactorizationResult& f, const Field& psi, double theta = 1e-8,
              const std::vector<bool>& sigma_n = {});

/// Full-grid exclusion mask: R nodes outside `valid` plus collision points.
std::vector<bool> excluded_points(const Grid& grid, const std::vector<bool>& valid,
                                  const std::vector<bool>& collision = {});

}  // namespace exfact
