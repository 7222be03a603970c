#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "exfact/config.hpp"
#include "exfact/report.hpp"
#include "exfact/runner.hpp"

using namespace exfact;

namespace {

std::string echo_value(const RunConfig& c, const std::string& key) {
  for (const auto& [k, v] : c.echo) {
    if (k == key) return v;
  }
  return "<missing>";
}

std::size_t error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("exfact_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal harmonic solve config is filled with defaults") {
  const RunConfig c = parse_config("[experiment]\nkind = solve\n[model]\nkind = coupled_harmonic\n");
  CHECK(c.kind == ExperimentKind::solve);
  CHECK(c.kind_declared);
  CHECK(c.model.nuclear_mass == 10.0);
  CHECK(c.grid.r.points == 81);
  CHECK(echo_value(c, "model.nuclear_mass") == "10");
  CHECK(echo_value(c, "factorize.theta_zero") == "1e-08");
  CHECK(echo_value(c, "factorize.c_prime") == "auto");
}

TEST_CASE("range, unknown key, unknown section and duplicates carry line numbers") {
  CHECK(error_line("[factorize]\ntheta_zero = -1\n") == 2);
  CHECK(error_line("[model]\n\nbogus = 1\n") == 3);
  CHECK(error_line("# c\n[nowhere]\n") == 2);
  CHECK(error_line("[model]\nk1 = 2\nk1 = 3\n") == 3);
  CHECK(error_line("[model]\nk1 = two\n") == 2);
  CHECK(error_line("k1 = 2\n") == 1);
  CHECK_THROWS_WITH_AS(parse_config("[factorize]\ntheta_zero = -1\n"), doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("comments and list separators") {
  const RunConfig c = parse_config(
      "; leading comment\n[grid]\nladder = 1, 2 4   # trailing\n[counterexample]\nappendix = d\nn = 6\nm = -2\n");
  CHECK(c.grid.ladder == std::vector<std::size_t>{1, 2, 4});
  CHECK(c.counterexample.n == std::vector<int>{6});
  CHECK(c.counterexample.m == std::vector<int>{-2});
}

TEST_CASE("windmill config validation") {
  CHECK_NOTHROW(parse_config("[experiment]\nkind = counterexample\n[counterexample]\nappendix = d\nn = 6\nm = -2\n"));
  CHECK_THROWS_AS(parse_config("[counterexample]\nappendix = d\nn = -6\nm = -2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[counterexample]\nappendix = d\nn = 6 3\nm = -2\n"), ConfigError);
}

TEST_CASE("model and grid cross-checks") {
  CHECK_THROWS_AS(parse_config("[model]\nkind = radial_hydrogenic\n"), ConfigError);
  CHECK_NOTHROW(parse_config("[model]\nkind = radial_hydrogenic\n[grid]\nr_kind = radial\nr_upper = 20\n"));
  CHECK_THROWS_AS(
      parse_config("[experiment]\nkind = factorize\n[model]\nkind = radial_hydrogenic\n[grid]\nr_kind = radial\n"
                   "r_upper = 20\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nladder = 2 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[factorize]\nstate = oracle\n[model]\nkind = soft_coulomb_diatomic\n"), ConfigError);
}

TEST_CASE("experiment kind names") {
  CHECK(parse_experiment_kind("bo-compare") == ExperimentKind::bo_compare);
  CHECK(to_string(ExperimentKind::bo_compare) == "bo-compare");
  CHECK_THROWS_AS(parse_experiment_kind("dance"), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("report") {

TEST_CASE("CSV quoting and line endings") {
  Table t{{"a", "b"}, {}};
  t.add({"x,y", "say \"hi\""});
  t.add({"1.5", "line\nbreak"});
  CHECK(to_csv(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n1.5,\"line\nbreak\"\n");
  CHECK_THROWS(t.add({"only"}));
}

TEST_CASE("numbers are shortest round-trip with a dot") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.5e-12) == "-2.5e-12");
  CHECK(format_number(3.0) == "3");
}

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("summary lists every headline with its provenance, byte-stable") {
  const auto dir = scratch("report");
  std::filesystem::create_directories(dir);
  auto make = [] {
    RunManifest m;
    m.version = "1";
    m.add("energy", 0.5, "oracle");
    m.add("verdict", "finite");
    return m;
  };
  RunManifest a = make(), b = make();
  emit_report(a, dir, ReportFormat::text);
  const std::string first = slurp(dir / "summary.txt");
  emit_report(b, dir, ReportFormat::text);
  CHECK(slurp(dir / "summary.txt") == first);
  CHECK(first.find("energy") != std::string::npos);
  CHECK(first.find("[oracle]") != std::string::npos);
  CHECK(a.files.back().sha256 == sha256_hex(first));
  emit_report(a, dir, ReportFormat::csv);
  CHECK(slurp(dir / "summary.csv") == "key,value,provenance\nenergy,0.5,oracle\nverdict,finite,\n");
  CHECK_THROWS_AS(a.add("energy", 1.0), Error);
}

TEST_CASE("unwritable output directory is an I/O error") {
  const auto dir = scratch("blocked");
  { std::ofstream f(dir); f << "file, not a directory"; }
  RunManifest m;
  CHECK_THROWS_AS(emit_report(m, dir / "sub", ReportFormat::text), IoError);
  RunConfig c = parse_config("[experiment]\nkind = counterexample\n[counterexample]\nappendix = c\n");
  try {
    run_experiment(c, dir / "sub");
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(exit_code_for(e) == kExitIo);
    CHECK(std::string(e.what()).find("output: ") == 0);
  }
}

}  // TEST_SUITE

TEST_SUITE("runner") {

TEST_CASE("factorize run: headline numbers and digests") {
  const auto dir = scratch("factorize");
  const RunConfig c = parse_config("[experiment]\nkind = factorize\n[grid]\nr_points = 41\nR_points = 21\n");
  const RunManifest m = run_experiment(c, dir);
  CHECK(m.exit_code == 0);
  for (const char* key : {"energy", "reconstruction_residual", "normalization_deviation"}) CHECK(m.find(key));
  for (const auto& f : m.files) CHECK(sha256_hex(slurp(dir / f.path)) == f.sha256);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["files"].size() == m.files.size());
  CHECK_FALSE(j.contains("timings"));
  CHECK(nlohmann::json::parse(slurp(dir / "timings.json")).size() > 0);
}

TEST_CASE("mollified sequence run: slope headline") {
  const auto dir = scratch("appc");
  const RunManifest m = run_experiment(parse_config("[experiment]\nkind = counterexample\n"), dir);
  REQUIRE(m.find("slope"));
  CHECK(m.find("slope")->value.get<double>() == doctest::Approx(0.25).epsilon(0.02));
  CHECK(m.exit_code == kExitOk);
}

TEST_CASE("bo-compare writes the mu scan table") {
  const auto dir = scratch("bo");
  const RunConfig c = parse_config(
      "[experiment]\nkind = bo-compare\n[grid]\nr_points = 41\nR_points = 21\n[bo]\nmu_scan = 10 100\nn_trunc = 2\n");
  const RunManifest m = run_experiment(c, dir);
  const std::string csv = slurp(dir / "mu_scan.csv");
  CHECK(csv.rfind("mu,E_exact,E_BO,E_BO_minus_E_exact,overlap", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(m.find("gap_positive")->value.get<bool>());
}

TEST_CASE("stage failures keep their type and name the stage") {
  const RunConfig c = parse_config("[experiment]\nkind = solve\n[solver]\nmax_iter = 3\n");
  try {
    run_experiment(c, scratch("fail"));
    FAIL("expected a convergence failure");
  } catch (const ConvergenceError& e) {
    CHECK(exit_code_for(e) == kExitSolver);
    CHECK(std::string(e.what()).find("eigensolve level 0: ") == 0);
  }
}

}  // TEST_SUITE
