#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "exfact/grid.hpp"

namespace exfact {

enum class Verdict { converging, diverging, inconclusive };

std::string to_string(Verdict v);

struct SobolevLevel {
  double h = 0.0;   // largest axis spacing of the level
  double l2 = 0.0;
  double h1 = 0.0;  // sum over axes of ||D_a u||
  double h2 = 0.0;  // sum over ordered axis pairs of ||D_a D_b u||
};

struct SobolevReport {
  std::vector<SobolevLevel> levels;
  Verdict l2 = Verdict::inconclusive;
  Verdict h1 = Verdict::inconclusive;
  Verdict h2 = Verdict::inconclusive;
};

struct SobolevThresholds {
  double diverging_slope = 0.1;
  double converging_change = 1e-2;
};

/// Optional restriction of every norm to nodes where the window returns true.
using Window = std::function<bool(const Point&)>;

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Norms of a single level.
SobolevLevel sobolev_level(const Field& u, const Window& window = {});

/// Verdict from the last two entries of a ladder ordered by decreasing h:
/// diverging if the log(norm) vs log(1/h) slope exceeds the slope threshold,
/// converging if the relative change is below the change threshold.
Verdict ladder_verdict(std::span<const double> h, std::span<const double> norms,
                       const SobolevThresholds& t = {});

/// Norm ladder across a refinement family (>= 3 levels, strictly decreasing h).
SobolevReport sobolev_report(std::span<const Field> family, const Window& window = {},
                             const SobolevThresholds& t = {});

}  // namespace exfact
