#include "exfact/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace exfact {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::factorize: return "factorize";
    case ExperimentKind::residuals: return "residuals";
    case ExperimentKind::variational: return "variational";
    case ExperimentKind::counterexample: return "counterexample";
    case ExperimentKind::bo_compare: return "bo-compare";
  }
  return "solve";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::solve, ExperimentKind::factorize, ExperimentKind::residuals,
                 ExperimentKind::variational, ExperimentKind::counterexample, ExperimentKind::bo_compare}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + s + "'", 0);
}

std::string to_string(FactorRoute r) {
  switch (r) {
    case FactorRoute::marginal: return "marginal";
    case FactorRoute::agmon: return "agmon";
    case FactorRoute::renormalized: return "renormalized";
  }
  return "marginal";
}

std::string to_string(StateSource s) { return s == StateSource::eigen ? "eigen" : "oracle"; }

GridSpec GridConfig::level_spec(const ModelParams& model, std::size_t level, double nuclear_scale) const {
  if (level >= ladder.size()) throw ConfigError("grid level beyond the ladder", 0);
  const std::size_t k = ladder[level];
  GridSpec spec;
  if (model.kind == ModelKind::radial_hydrogenic) {
    spec.axes.push_back(radial_axis(AxisLabel::electronic, r.upper, r.points * k, r.dimension));
    return spec;
  }
  const AxisSpec ra = cartesian_axis(AxisLabel::electronic, r.lower, r.upper, (r.points - 1) * k + 1);
  const AxisSpec Ra = cartesian_axis(AxisLabel::nuclear, R.lower * nuclear_scale, R.upper * nuclear_scale,
                                     (R.points - 1) * k + 1);
  spec.axes = electronic_first ? std::vector<AxisSpec>{ra, Ra} : std::vector<AxisSpec>{Ra, ra};
  return spec;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_real(const std::string& v, std::size_t line) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError("expected a number, got '" + v + "'", line);
  }
  return x;
}

long long to_integer(const std::string& v, std::size_t line) {
  long long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected an integer, got '" + v + "'", line);
  }
  return x;
}

bool to_bool(const std::string& v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + v + "'", line);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(RunConfig&, const std::string&, std::size_t)> set;
  std::function<std::string(const RunConfig&)> get;
};

void require(bool ok, const std::string& what, std::size_t line) {
  if (!ok) throw ConfigError(what, line);
}

template <class Get>
Key real(std::string sec, std::string name, Get ref, std::function<bool(double)> ok, std::string range) {
  Key k{sec, name, {}, {}};
  const std::string full = sec + "." + name;
  k.set = [=](RunConfig& c, const std::string& v, std::size_t line) {
    const double x = to_real(v, line);
    require(ok(x), full + " = " + v + " is out of range (" + range + ")", line);
    ref(c) = x;
  };
  k.get = [=](const RunConfig& c) { return fmt(ref(c)); };
  return k;
}

template <class T, class Get>
Key integer(std::string sec, std::string name, Get ref, long long lo, long long hi) {
  Key k{sec, name, {}, {}};
  const std::string full = sec + "." + name;
  k.set = [=](RunConfig& c, const std::string& v, std::size_t line) {
    const long long x = to_integer(v, line);
    require(x >= lo && x <= hi, full + " = " + v + " is out of range [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]", line);
    ref(c) = static_cast<T>(x);
  };
  k.get = [=](const RunConfig& c) { return std::to_string(ref(c)); };
  return k;
}

template <class Get>
Key boolean(std::string sec, std::string name, Get ref) {
  Key k{sec, name, {}, {}};
  k.set = [=](RunConfig& c, const std::string& v, std::size_t line) { ref(c) = to_bool(v, line); };
  k.get = [=](const RunConfig& c) { return std::string(ref(c) ? "true" : "false"); };
  return k;
}

template <class E, class Get>
Key choice(std::string sec, std::string name, Get ref, std::vector<std::pair<std::string, E>> options) {
  Key k{sec, name, {}, {}};
  const std::string full = sec + "." + name;
  k.set = [=](RunConfig& c, const std::string& v, std::size_t line) {
    for (const auto& [s, e] : options) {
      if (s == v) {
        ref(c) = e;
        return;
      }
    }
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : " | ") + o.first;
    throw ConfigError(full + " = " + v + " is not one of " + allowed, line);
  };
  k.get = [=](const RunConfig& c) {
    for (const auto& [s, e] : options) {
      if (e == ref(c)) return s;
    }
    return std::string("?");
  };
  return k;
}

template <class Get>
Key optional_real(std::string sec, std::string name, Get ref, std::function<bool(double)> ok, std::string range) {
  Key k{sec, name, {}, {}};
  const std::string full = sec + "." + name;
  k.set = [=](RunConfig& c, const std::string& v, std::size_t line) {
    if (v == "auto") {
      ref(c).reset();
      return;
    }
    const double x = to_real(v, line);
    require(ok(x), full + " = " + v + " is out of range (" + range + ")", line);
    ref(c) = x;
  };
  k.get = [=](const RunConfig& c) {
    const auto& o = ref(c);
    return o ? fmt(*o) : std::string("auto");
  };
  return k;
}

template <class T, class Get>
Key list(std::string sec, std::string name, Get ref, std::function<bool(T)> ok, std::string range,
         std::size_t min_size) {
  Key k{sec, name, {}, {}};
  const std::string full = sec + "." + name;
  k.set = [=](RunConfig& c, const std::string& v, std::size_t line) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) {
      T x;
      if constexpr (std::is_floating_point_v<T>) {
        x = to_real(item, line);
      } else {
        x = static_cast<T>(to_integer(item, line));
      }
      require(ok(x), full + ": entry " + item + " is out of range (" + range + ")", line);
      out.push_back(x);
    }
    require(out.size() >= min_size, full + " needs at least " + std::to_string(min_size) + " entries", line);
    ref(c) = std::move(out);
  };
  k.get = [=](const RunConfig& c) { return join(ref(c)); };
  return k;
}

#define REF(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = [] {
    auto positive = [](double x) { return x > 0.0; };
    auto nonneg = [](double x) { return x >= 0.0; };
    auto any = [](double) { return true; };
    std::vector<Key> k;
    k.push_back(choice<ExperimentKind>("experiment", "kind", REF(kind),
                                       {{"solve", ExperimentKind::solve},
                                        {"factorize", ExperimentKind::factorize},
                                        {"residuals", ExperimentKind::residuals},
                                        {"variational", ExperimentKind::variational},
                                        {"counterexample", ExperimentKind::counterexample},
                                        {"bo-compare", ExperimentKind::bo_compare}}));

    k.push_back(choice<ModelKind>("model", "kind", REF(model.kind),
                                  {{"coupled_harmonic", ModelKind::coupled_harmonic},
                                   {"soft_coulomb_diatomic", ModelKind::soft_coulomb_diatomic},
                                   {"radial_hydrogenic", ModelKind::radial_hydrogenic}}));
    k.push_back(real("model", "electron_mass", REF(model.electron_mass), positive, "> 0"));
    k.push_back(real("model", "nuclear_mass", REF(model.nuclear_mass), positive, "> 0"));
    k.push_back(real("model", "mass_polarization", REF(model.mass_polarization), nonneg, ">= 0"));
    k.push_back(real("model", "k1", REF(model.k1), positive, "> 0"));
    k.push_back(real("model", "k2", REF(model.k2), positive, "> 0"));
    k.push_back(real("model", "coupling", REF(model.coupling), any, "any"));
    k.push_back(real("model", "soft_nuclear", REF(model.soft_nuclear), positive, "> 0"));
    k.push_back(real("model", "soft_electronic", REF(model.soft_electronic), positive, "> 0"));
    k.push_back(real("model", "charge_a", REF(model.charge_a), positive, "> 0"));
    k.push_back(real("model", "charge_b", REF(model.charge_b), positive, "> 0"));
    k.push_back(real("model", "charge", REF(model.charge), positive, "> 0"));
    k.push_back(real("model", "softening", REF(model.softening), nonneg, ">= 0"));

    k.push_back(choice<AxisKind>("grid", "r_kind", REF(grid.r.kind),
                                 {{"cartesian", AxisKind::cartesian}, {"radial", AxisKind::radial}}));
    k.push_back(real("grid", "r_lower", REF(grid.r.lower), any, "any"));
    k.push_back(real("grid", "r_upper", REF(grid.r.upper), any, "any"));
    k.push_back(integer<std::size_t>("grid", "r_points", REF(grid.r.points), 3, 1000000));
    k.push_back(integer<int>("grid", "r_dimension", REF(grid.r.dimension), 1, 64));
    k.push_back(real("grid", "R_lower", REF(grid.R.lower), any, "any"));
    k.push_back(real("grid", "R_upper", REF(grid.R.upper), any, "any"));
    k.push_back(integer<std::size_t>("grid", "R_points", REF(grid.R.points), 3, 1000000));
    k.push_back(choice<bool>("grid", "order", REF(grid.electronic_first), {{"rR", true}, {"Rr", false}}));
    k.push_back(list<std::size_t>("grid", "ladder", REF(grid.ladder), [](std::size_t x) { return x >= 1 && x <= 64; },
                                  "1 .. 64", 1));

    k.push_back(real("solver", "tol", REF(solver.tol), positive, "> 0"));
    k.push_back(integer<std::size_t>("solver", "max_iter", REF(solver.max_iter), 1, 100000000));
    k.push_back(integer<std::size_t>("solver", "max_basis", REF(solver.max_basis), 8, 4096));

    k.push_back(choice<FactorRoute>("factorize", "route", REF(factorize.route),
                                    {{"marginal", FactorRoute::marginal},
                                     {"agmon", FactorRoute::agmon},
                                     {"renormalized", FactorRoute::renormalized}}));
    k.push_back(choice<StateSource>("factorize", "state", REF(factorize.state),
                                    {{"eigen", StateSource::eigen}, {"oracle", StateSource::oracle}}));
    k.push_back(real("factorize", "theta_zero", REF(factorize.theta_zero), [](double x) { return x > 0.0 && x < 1.0; },
                     "0 < theta_zero < 1"));
    k.push_back(real("factorize", "tube_radius", REF(factorize.tube_radius), nonneg, ">= 0"));
    k.push_back(optional_real("factorize", "c_prime", REF(factorize.c_prime), positive, "> 0 or auto"));

    k.push_back(optional_real("variational", "c_prime", REF(variational.c_prime), positive, "> 0 or auto"));
    k.push_back(real("variational", "tol", REF(variational.schedule.tol), positive, "> 0"));
    k.push_back(integer<std::size_t>("variational", "max_iterations", REF(variational.schedule.max_iterations), 1,
                                     100000000));
    k.push_back(integer<std::size_t>("variational", "stall_window", REF(variational.schedule.stall_window), 2, 1000000));
    k.push_back(real("variational", "stall_ratio", REF(variational.schedule.stall_ratio),
                     [](double x) { return x > 0.0 && x < 1.0; }, "0 < stall_ratio < 1"));
    k.push_back(real("variational", "init_width", REF(variational.init_width), positive, "> 0"));

    k.push_back(choice<std::string>("counterexample", "appendix", REF(counterexample.appendix),
                                    {{"b", "b"}, {"c", "c"}, {"d", "d"}}));
    k.push_back(choice<Mollifier>("counterexample", "mollifier", REF(counterexample.mollifier),
                                  {{"exp_reciprocal", Mollifier::exp_reciprocal},
                                   {"exp_reciprocal_square", Mollifier::exp_reciprocal_square}}));
    k.push_back(list<double>("counterexample", "alpha", REF(counterexample.alpha), [](double) { return true; }, "any", 1));
    k.push_back(list<double>("counterexample", "beta", REF(counterexample.beta), [](double) { return true; }, "any", 1));
    k.push_back(integer<int>("counterexample", "n_e", REF(counterexample.n_e), 1, 64));
    k.push_back(integer<int>("counterexample", "n_n1", REF(counterexample.n_n1), 1, 64));
    k.push_back(integer<int>("counterexample", "n_n", REF(counterexample.n_n), 3, 64));
    k.push_back(list<double>("counterexample", "j", REF(counterexample.j), [](double x) { return x >= 1.0; }, ">= 1", 4));
    k.push_back(list<int>("counterexample", "n", REF(counterexample.n), [](int) { return true; }, "any", 1));
    k.push_back(list<int>("counterexample", "m", REF(counterexample.m), [](int x) { return x != 0; }, "nonzero", 1));
    k.push_back(choice<WindmillMode>("counterexample", "mode", REF(counterexample.mode),
                                     {{"origin", WindmillMode::origin}, {"infinity", WindmillMode::infinity}}));
    k.push_back(list<double>("counterexample", "kappa", REF(counterexample.kappa), [](double x) { return x > 0.0; },
                             "> 0", 0));

    k.push_back(integer<std::size_t>("bo", "n_trunc", REF(bo.n_trunc), 1, 100000));
    k.push_back(list<double>("bo", "mu_scan", REF(bo.mu_scan), [](double x) { return x > 0.0; }, "> 0", 1));
    k.push_back(boolean("bo", "scale_nuclear_box", REF(bo.scale_nuclear_box)));
    k.push_back(boolean("bo", "diagonal_correction", REF(bo.diagonal_correction)));

    Key dir{"output", "dir", {}, {}};
    dir.set = [](RunConfig& c, const std::string& v, std::size_t line) {
      require(!v.empty(), "output.dir must not be empty", line);
      c.output.dir = v;
    };
    dir.get = [](const RunConfig& c) { return c.output.dir; };
    k.push_back(dir);
    k.push_back(choice<ReportFormat>("output", "format", REF(output.format),
                                     {{"text", ReportFormat::text}, {"csv", ReportFormat::csv}}));
    return k;
  }();
  return keys;
}

#undef REF

// Cross-key checks once every value is known.
void validate(const RunConfig& c, const std::map<std::string, std::size_t>& lines) {
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? std::size_t{0} : it->second;
  };
  const bool radial = c.model.kind == ModelKind::radial_hydrogenic;
  if (radial) {
    require(c.grid.r.kind == AxisKind::radial, "radial_hydrogenic needs grid.r_kind = radial", line_of("grid.r_kind"));
    require(c.grid.r.upper > 0.0, "grid.r_upper must be > 0 for a radial axis", line_of("grid.r_upper"));
  } else {
    require(c.grid.r.kind == AxisKind::cartesian, to_string(c.model.kind) + " needs grid.r_kind = cartesian",
            line_of("grid.r_kind"));
    require(c.grid.r.upper > c.grid.r.lower, "grid.r_upper must exceed grid.r_lower", line_of("grid.r_upper"));
    require(c.grid.R.upper > c.grid.R.lower, "grid.R_upper must exceed grid.R_lower", line_of("grid.R_upper"));
  }
  for (std::size_t i = 1; i < c.grid.ladder.size(); ++i) {
    require(c.grid.ladder[i] > c.grid.ladder[i - 1], "grid.ladder must be strictly increasing", line_of("grid.ladder"));
  }
  try {
    ModelHamiltonian model(c.model);
    model.check_grid(Grid(c.grid.level_spec(c.model, 0)));
  } catch (const ModelError& e) {
    throw ConfigError(e.what(), line_of("model.kind"));
  } catch (const ShapeError& e) {
    throw ConfigError(e.what(), line_of("grid.r_points"));
  }
  const auto& ce = c.counterexample;
  if (ce.appendix == "d") {
    require(ce.n.size() == ce.m.size(), "counterexample.n and counterexample.m must have the same length",
            line_of("counterexample.m"));
    for (std::size_t i = 0; i < ce.n.size(); ++i) {
      const bool ok = ce.mode == WindmillMode::origin ? (ce.n[i] > 0 && ce.m[i] < 0) : (ce.n[i] < 0 && ce.m[i] > 0);
      require(ok, ce.mode == WindmillMode::origin ? "mode origin needs n > 0 and m < 0" : "mode infinity needs n < 0 and m > 0",
              line_of("counterexample.m"));
    }
  }
  if (c.kind != ExperimentKind::solve && c.kind != ExperimentKind::counterexample) {
    require(c.model.kind == ModelKind::coupled_harmonic || c.model.kind == ModelKind::soft_coulomb_diatomic,
            to_string(c.kind) + " needs a model with an R axis", line_of("model.kind"));
  }
  if (c.factorize.state == StateSource::oracle) {
    require(c.model.kind == ModelKind::coupled_harmonic, "factorize.state = oracle needs model.kind = coupled_harmonic",
            line_of("factorize.state"));
  }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::map<std::string, const Key*> index;
  std::set<std::string> sections;
  for (const Key& k : schema()) {
    index[k.section + "." + k.name] = &k;
    sections.insert(k.section);
  }
  std::map<std::string, std::size_t> seen;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", line_no);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + line + "'", line_no);
    if (section.empty()) throw ConfigError("key outside of any section", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string full = section + "." + key;
    const auto it = index.find(full);
    if (it == index.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no);
    if (seen.count(full)) {
      throw ConfigError("repeated key " + full + " (first set on line " + std::to_string(seen[full]) + ")", line_no);
    }
    if (value.empty()) throw ConfigError("empty value for " + full, line_no);
    seen[full] = line_no;
    it->second->set(c, value, line_no);
  }
  c.kind_declared = seen.count("experiment.kind") > 0;
  validate(c, seen);
  for (const Key& k : schema()) c.echo.emplace_back(k.section + "." + k.name, k.get(c));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string(), 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace exfact
