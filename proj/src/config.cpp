#include "fracflow/config.hpp"

#include <cerrno>
#include <charconv>
#include <limits>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fracflow {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
    throw ConfigError("expected a finite number, got '" + v + "'");
  return x;
}

long long to_integer(const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& v) {
  const long long x = to_integer(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError("integer out of range: '" + v + "'");
  return static_cast<int>(x);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

std::vector<std::string> split_list(std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("unbalanced brackets in '" + v + "'");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dim", [](RunConfig& c, const std::string& v) { c.dim = to_int(v); }},
      {"omega",
       [](RunConfig& c, const std::string& v) {
         const auto xs = split_list(v);
         if (xs.size() != 2) throw ConfigError("expected an interval [a,b], got '" + v + "'");
         c.omega_min = to_double(xs[0]);
         c.omega_max = to_double(xs[1]);
       }},
      {"omega_min", [](RunConfig& c, const std::string& v) { c.omega_min = to_double(v); }},
      {"omega_max", [](RunConfig& c, const std::string& v) { c.omega_max = to_double(v); }},
      {"n_cells", [](RunConfig& c, const std::string& v) { c.n_cells = to_int(v); }},
      {"collar_factor", [](RunConfig& c, const std::string& v) { c.collar_factor = to_double(v); }},
      {"s", [](RunConfig& c, const std::string& v) { c.flow.s = to_double(v); }},
      {"p", [](RunConfig& c, const std::string& v) { c.flow.p = to_double(v); }},
      {"q", [](RunConfig& c, const std::string& v) { c.flow.q = to_double(v); }},
      {"h", [](RunConfig& c, const std::string& v) { c.flow.h = to_double(v); }},
      {"t_end", [](RunConfig& c, const std::string& v) { c.flow.t_end = to_double(v); }},
      {"solver_tol", [](RunConfig& c, const std::string& v) { c.flow.solver_tol = to_double(v); }},
      {"solver_max_iter", [](RunConfig& c, const std::string& v) { c.flow.solver_max_iter = to_integer(v); }},
      {"solver",
       [](RunConfig& c, const std::string& v) {
         if (v == "newton") {
           c.flow.solver = SolverMethod::Newton;
         } else if (v == "bb") {
           c.flow.solver = SolverMethod::BarzilaiBorwein;
         } else {
           throw ConfigError("solver must be newton or bb, got '" + v + "'");
         }
       }},
      {"preset", [](RunConfig& c, const std::string& v) { c.preset = v; }},
      {"amplitude", [](RunConfig& c, const std::string& v) { c.amplitude = to_double(v); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const long long x = to_integer(v);
         if (x < 0) throw ConfigError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
      {"csv_path", [](RunConfig& c, const std::string& v) { c.csv_path = v; }},
      {"check_energy", [](RunConfig& c, const std::string& v) { c.checks.energy = to_bool(v); }},
      {"check_time_derivative", [](RunConfig& c, const std::string& v) { c.checks.time_derivative = to_bool(v); }},
      {"check_max_principle", [](RunConfig& c, const std::string& v) { c.checks.max_principle = to_bool(v); }},
      {"check_truncation", [](RunConfig& c, const std::string& v) { c.checks.truncation = to_bool(v); }},
      {"check_poincare", [](RunConfig& c, const std::string& v) { c.checks.poincare = to_bool(v); }},
      {"check_weak_residual", [](RunConfig& c, const std::string& v) { c.checks.weak_residual = to_bool(v); }},
      {"check_spacetime", [](RunConfig& c, const std::string& v) { c.checks.spacetime = to_bool(v); }},
      {"check_chebyshev", [](RunConfig& c, const std::string& v) { c.checks.chebyshev = to_bool(v); }},
      {"truncation_ells",
       [](RunConfig& c, const std::string& v) {
         c.truncation_ells.clear();
         for (const auto& x : split_list(v)) c.truncation_ells.push_back(to_int(x));
       }},
      {"chebyshev_ell", [](RunConfig& c, const std::string& v) { c.chebyshev_ell = to_int(v); }},
      {"s_prime", [](RunConfig& c, const std::string& v) { c.s_prime = to_double(v); }},
      {"s_bar", [](RunConfig& c, const std::string& v) { c.s_bar = to_double(v); }},
      {"t_grid", [](RunConfig& c, const std::string& v) { c.t_grid = to_int(v); }},
      {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"deterministic_reduction", [](RunConfig& c, const std::string& v) { c.deterministic_reduction = to_bool(v); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    flow.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (dim != 1 && dim != 2) throw ConfigError("dim must be 1 or 2");
  if (!(omega_max > omega_min)) throw ConfigError("omega must be an interval [a,b] with a < b");
  if (n_cells < 2) throw ConfigError("n_cells must be at least 2");
  if (!(collar_factor >= 1.0)) throw ConfigError("collar_factor must be at least 1");
  if (preset != "bump" && preset != "step" && preset != "random" && preset != "csv")
    throw ConfigError("preset must be one of bump, step, random, csv");
  if (preset == "csv" && csv_path.empty()) throw ConfigError("csv_path is required when preset = csv");
  if (truncation_ells.empty()) throw ConfigError("truncation_ells must list at least one level");
  for (int ell : truncation_ells)
    if (ell < 2) throw ConfigError("truncation_ells entries must be at least 2");
  if (chebyshev_ell < 1) throw ConfigError("chebyshev_ell must be positive");
  if (!(s_prime > 0.0 && s_prime < s_bar && s_bar < 1.0))
    throw ConfigError("s_prime and s_bar must satisfy 0 < s_prime < s_bar < 1");
  if (t_grid < 2) throw ConfigError("t_grid must be at least 2");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace fracflow
