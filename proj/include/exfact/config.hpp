#pragma once

// Sectioned key = value run configuration.
//
//   # comment            ; comment
//   [section]
//   key = value          # trailing comments need leading whitespace
//
// Lists are whitespace- or comma-separated. Keys are case sensitive; unknown
// sections, unknown keys and repeated keys are errors. See README.md for the
// full key table.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exfact/counterexamples.hpp"
#include "exfact/eigensolve.hpp"
#include "exfact/error.hpp"
#include "exfact/models.hpp"
#include "exfact/variational.hpp"

namespace exfact {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class ExperimentKind { solve, factorize, residuals, variational, counterexample, bo_compare };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct AxisConfig {
  AxisKind kind = AxisKind::cartesian;
  double lower = -8.0;
  double upper = 8.0;
  std::size_t points = 81;  // nodes (cartesian) or cells (radial)
  int dimension = 3;        // radial only
};

struct GridConfig {
  AxisConfig r;
  AxisConfig R{AxisKind::cartesian, -4.0, 4.0, 41, 3};
  bool electronic_first = true;       // axis order (r, R) or (R, r)
  std::vector<std::size_t> ladder{1}; // refinement multipliers

  /// Grid of refinement level `level`, R box scaled by `nuclear_scale`.
  GridSpec level_spec(const ModelParams& model, std::size_t level, double nuclear_scale = 1.0) const;
};

enum class FactorRoute { marginal, agmon, renormalized };
std::string to_string(FactorRoute r);

enum class StateSource { eigen, oracle };
std::string to_string(StateSource s);

struct FactorizeConfig {
  FactorRoute route = FactorRoute::marginal;
  StateSource state = StateSource::eigen;
  double theta_zero = 1e-8;
  double tube_radius = 0.0;
  std::optional<double> c_prime;  // empty = from the decay estimate
};

struct VariationalConfig {
  std::optional<double> c_prime;  // empty = half the fitted decay rate
  TauPrimeSchedule schedule{20000, 1e-9, 50, 0.99};
  double init_width = 1.0;        // Gaussian start exp(-(r^2 + R^2) / (2 w^2))
};

struct CounterexampleConfig {
  std::string appendix = "c";           // b | c | d
  Mollifier mollifier = Mollifier::exp_reciprocal;
  // b: the cross product alpha x beta is mapped
  std::vector<double> alpha{-4.3, -3.7, -2.5};
  std::vector<double> beta{0.2, 0.6, 1.5};
  int n_e = 3;
  int n_n1 = 1;
  // c
  int n_n = 3;
  std::vector<double> j{2, 4, 8, 16, 32};
  // d: paired scan (n[i], m[i])
  std::vector<int> n{6};
  std::vector<int> m{-2};
  WindmillMode mode = WindmillMode::origin;
  std::vector<double> kappa;  // empty = module default
};

struct BOConfig {
  std::size_t n_trunc = 4;
  std::vector<double> mu_scan{10, 100, 1000};
  bool scale_nuclear_box = true;  // R box times (model mu / mu)^{1/4}
  bool diagonal_correction = false;
};

enum class ReportFormat { csv, text };

struct OutputConfig {
  std::string dir = "out";
  ReportFormat format = ReportFormat::text;
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::solve;
  bool kind_declared = false;  // [experiment] kind was given
  ModelParams model;
  GridConfig grid;
  EigenOptions solver{1e-10, 20000, 48};
  FactorizeConfig factorize;
  VariationalConfig variational;
  CounterexampleConfig counterexample;
  BOConfig bo;
  OutputConfig output;
  /// Every key with its effective value (defaults included), canonical order.
  std::vector<std::pair<std::string, std::string>> echo;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace exfact
