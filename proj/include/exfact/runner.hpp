#pragma once

// Pipeline wiring for one experiment kind per invocation.
//
// Exit codes (stable):
//   0  success
//   1  internal error (shape error, unexpected failure)
//   2  configuration error (syntax, range, model/grid mismatch)
//   3  solver failure (eigensolver, quadrature or tau' solve did not converge)
//   4  verdict mismatch (a computed verdict disagrees with the printed one)
//   5  I/O error (unwritable output directory or file)

#include <exception>
#include <filesystem>
#include <string>

#include "exfact/config.hpp"
#include "exfact/report.hpp"

namespace exfact {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitVerdict = 4;
inline constexpr int kExitIo = 5;

std::string software_version();

/// Runs the configured pipeline, writes every artifact into `out_dir`
/// (created if missing) and returns the manifest that was written. Verdict
/// mismatches are reported through manifest.exit_code; failures throw the
/// original error type with the stage name prefixed.
RunManifest run_experiment(const RunConfig& config, const std::filesystem::path& out_dir);

/// Exit code for an exception escaping run_experiment or parse_config.
int exit_code_for(const std::exception& e);

}  // namespace exfact
