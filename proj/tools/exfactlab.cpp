// exfactlab <kind> --config <path> [--out <dir>]
//
// Thread count comes from EXFACTLAB_THREADS (default 1); results do not
// depend on it. Exit codes are listed in exfact/runner.hpp and README.md.

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "exfact/grid.hpp"
#include "exfact/runner.hpp"

namespace {

unsigned threads_from_env() {
  const char* v = std::getenv("EXFACTLAB_THREADS");
  if (!v || !*v) return 1;
  const std::string s(v);
  unsigned n = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || n == 0 || n > 256) {
    throw exfact::ConfigError("EXFACTLAB_THREADS must be an integer in [1, 256], got '" + s + "'", 0);
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact-factorization numerical laboratory"};
  std::string kind, config_path, out_dir;
  app.add_option("kind", kind, "solve | factorize | residuals | variational | counterexample | bo-compare")->required();
  app.add_option("--config", config_path, "Run configuration file")->required();
  app.add_option("--out", out_dir, "Output directory (overrides [output] dir)");
  app.set_version_flag("--version", exfact::software_version());
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exfact::kExitConfig;
  }

  try {
    exfact::set_thread_count(threads_from_env());
    const exfact::ExperimentKind cli_kind = exfact::parse_experiment_kind(kind);
    exfact::RunConfig config = exfact::load_config(config_path);
    if (config.kind_declared && config.kind != cli_kind) {
      throw exfact::ConfigError("config declares kind " + exfact::to_string(config.kind) + " but the command line asks for " +
                                    exfact::to_string(cli_kind),
                                0);
    }
    config.kind = cli_kind;
    for (auto& [k, v] : config.echo) {
      if (k == "experiment.kind") v = exfact::to_string(cli_kind);
    }
    const std::string dir = out_dir.empty() ? config.output.dir : out_dir;
    const exfact::RunManifest m = exfact::run_experiment(config, dir);
    std::cout << exfact::to_string(m.kind) << ": " << m.status << " (" << dir << "/manifest.json)\n";
    return m.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "exfactlab: " << e.what() << "\n";
    return exfact::exit_code_for(e);
  }
}
