#pragma once

// Radially reduced reproductions of three counterexamples: a product of H^2
// factors outside L^2, the discontinuity of (phi, chi) -> ||phi chi||^2, and
// a conditional factor without an H^1 r-gradient. All norms are squared.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exfact/quadrature.hpp"

namespace exfact {

enum class Mollifier {
  exp_reciprocal,        // psi(x) = exp(-1/x)
  exp_reciprocal_square  // psi(x) = exp(-1/x^2)
};

std::string to_string(Mollifier m);
Mollifier parse_mollifier(const std::string& s);

struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// 1 on [-1/2, 1/2], 0 outside (-1, 1), s(2 - 2|t|) between, where
/// s(x) = psi(x) / (psi(x) + psi(1 - x)).
class SmoothBump {
 public:
  explicit SmoothBump(Mollifier m = Mollifier::exp_reciprocal) : mollifier_(m) {}
  double operator()(double t) const { return jet(t).value; }
  Jet jet(double t) const;
  Mollifier mollifier() const noexcept { return mollifier_; }

 private:
  Mollifier mollifier_;
};

double smooth_bump(double t, Mollifier m = Mollifier::exp_reciprocal);

enum class Membership { finite, divergent, marginal, inconclusive };
std::string to_string(Membership m);

/// Norm values along a refinement parameter kappa -> infinity (1/eps for an
/// inner cutoff, the radius for an outer one), kappa geometric.
struct LadderFit {
  std::vector<double> kappa;
  std::vector<double> value;
  Membership verdict = Membership::inconclusive;
  double exponent = 0.0;    // value increments grow like kappa^exponent
  double half_width = 0.0;  // half the spread of the last two local exponents
};

/// Increment-ratio classification: with rho = dI_last / dI_prev,
/// rho > 1 + delta is divergent (needs the last three values increasing and
/// two local exponents agreeing within 25%), |rho - 1| <= delta is marginal,
/// rho < 1 - delta or increments at round-off level is finite.
LadderFit classify_ladder(std::span<const double> kappa, std::span<const double> value, double delta = 0.05);

struct NormLadder {
  std::string name;
  int dimension = 0;
  LadderFit fit;
  std::optional<Membership> printed;  // verdict implied by the printed inequality, if it gives one
  Membership derived = Membership::inconclusive;  // verdict of the exact power count
  bool matches_printed() const { return !printed || *printed == fit.verdict; }
  bool matches_derived() const { return derived == fit.verdict; }
};

// ---------------------------------------------------------------------------

struct ProductReport {
  double alpha = 0.0;
  double beta = 0.0;
  int n_e = 0;
  int n_n1 = 0;
  double alpha_threshold = 0.0;          // 2 - 3/2 (N_e + N_n1)
  double beta_threshold = 0.0;           // 2 - 3/2 N_n1
  double printed_product_threshold = 0.0;  // -3 N_n1
  double derived_product_threshold = 0.0;  // -3/2 (N_e + N_n1)
  bool premises_hold = false;            // both membership inequalities
  std::vector<NormLadder> norms;         // phi.{L2,H1,H2}, chi.{L2,H1,H2}, product.L2
  bool matches_printed() const;
  bool matches_derived() const;
};

/// phi = tau(|x|) |x|^alpha on R^{3(N_e+N_n1)}, chi = tau(|R|) |R|^beta on
/// R^{3 N_n1}; squared norms on {|x| >= eps} over the inner-cutoff ladder.
ProductReport appendix_b_norms(double alpha, double beta, int n_e, int n_n1, std::span<const double> kappa = {},
                               Mollifier m = Mollifier::exp_reciprocal);

// ---------------------------------------------------------------------------

struct DiscontinuityReport {
  int n_n = 0;
  int n_e = 0;
  Mollifier mollifier = Mollifier::exp_reciprocal;
  double beta = 0.0;             // 2 - 3 N_n / 2 + 1/8
  double delta = 0.0;            // 3 N_n / 2 + beta + 1/8
  double predicted_slope = 0.0;  // 2 delta - 3 N_n - 2 beta
  double f_norm_sq = 0.0;        // ||f||_r^2, f = tau(|r|) on R^{3 N_e}
  std::vector<double> j;
  std::vector<double> product_sq;  // ||phi_j chi||^2
  std::vector<double> g_l2_sq;     // ||g_j||^2
  std::vector<double> g_h1_sq;
  std::vector<double> g_h2_sq;
  std::vector<double> fitted_j;    // j with supp g_j inside the plateau of g
  double slope = 0.0;
  double slope_half_width = 0.0;   // max deviation of pairwise slopes from the fit
  double l2_scaling_error = 0.0;   // max |ratio / (j'/j)^{delta - 3 N_n / 2} - 1|
  bool g_vanishes_in_h2 = false;   // H^2 norms strictly decreasing
  bool premise_h2_decay = false;   // 2 + delta < 3 N_n / 2
};

/// phi_j = f(r) j^delta g(jR), chi = g(R) |R|^beta with g = tau(|R|).
/// Throws when a j is beyond quadrature resolution (naming the largest usable j).
DiscontinuityReport appendix_c_sequence(int n_n, std::span<const double> j_list,
                                        Mollifier m = Mollifier::exp_reciprocal, int n_e = 1);

// ---------------------------------------------------------------------------

enum class WindmillMode {
  origin,   // Psi = R^n tau(R) tau(R^{2m}(r - R)), n > 0, m < 0; cutoff R >= 1/kappa
  infinity  // Psi = R^n (1 - tau(R)) tau(R^{2m}(r - R)), n < 0, m > 0; cutoff R <= kappa
};

std::string to_string(WindmillMode m);
WindmillMode parse_windmill_mode(const std::string& s);

struct WindmillReport {
  int n = 0;
  int m = 0;
  WindmillMode mode = WindmillMode::origin;
  Mollifier mollifier = Mollifier::exp_reciprocal;
  double printed_threshold = 0.0;  // Psi in H^2 when n > -7m/2 - 2
  double derived_threshold = 0.0;  // Psi in H^2 exactly when 2n + 6m + 5 > 0 (origin)
  NormLadder psi_h2;
  NormLadder phi_l2;
  NormLadder phi_dr;               // ||d_r phi||^2
  std::vector<double> f_R;                 // sample radii
  std::vector<double> f_values;            // marginal f(R) by direct r integration
  double f_closed_form_deviation = 0.0;    // max |f / (sqrt(4 pi) A(R) R^{1-m} J(R)^{1/2}) - 1|
  double fiber_norm_deviation = 0.0;       // max |int |phi(r; R)|^2 dr - 1| at the sample radii
};

/// 2D (r, R) radial quadrature with weights (4 pi)^2 r^2 R^2. The inner r
/// integral uses t = R^{2m}(r - R). Default ladder kappa = 2^2 .. 2^8.
WindmillReport appendix_d_windmill(int n, int m, std::span<const double> kappa = {},
                                   WindmillMode mode = WindmillMode::origin,
                                   Mollifier mollifier = Mollifier::exp_reciprocal);

}  // namespace exfact
