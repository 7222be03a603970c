#pragma once

// Matrix-free eigensolver for symmetric operators under the grid inner
// product: thick-restart Lanczos with full reorthogonalization. The Krylov
// space starts from the normalized all-ones vector on interior nodes, so the
// zero eigenspace of the Dirichlet layer is never entered.

#include <functional>
#include <vector>

#include "exfact/grid.hpp"
#include "exfact/models.hpp"

namespace exfact {

using Operator = std::function<Field(const Field&)>;

Operator as_operator(const HamiltonianOperator& h);
/// Takes ownership, so the result may outlive the argument.
Operator as_operator(HamiltonianOperator&& h);

struct EigenPair {
  double energy = 0.0;
  Field state;            // unit norm
  double residual = 0.0;  // ||H psi - E psi||
  std::size_t iterations = 0;
};

struct EigenOptions {
  double tol = 1e-8;             // residual-norm tolerance
  std::size_t max_iter = 20000;  // operator applications
  std::size_t max_basis = 48;    // Krylov dimension before a thick restart
};

struct EigenCluster {
  std::vector<EigenPair> pairs;      // energy ascending
  bool split_degenerate = false;     // pair k+1 is degenerate with pair k
};

EigenPair ground_state(const Operator& apply, const GridPtr& grid, const EigenOptions& opt = {});

/// The k lowest pairs. One extra pair is converged to detect a degenerate
/// cluster straddling the k boundary.
EigenCluster lowest_k(const Operator& apply, const GridPtr& grid, std::size_t k, const EigenOptions& opt = {});

/// ||H psi - E psi||, recomputed from scratch.
double eigen_residual(const Operator& apply, const EigenPair& pair);

}  // namespace exfact
