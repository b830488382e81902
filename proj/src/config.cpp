#include "oscillab/config.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "oscillab/energy.hpp"

namespace oscillab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'", key);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'", key);
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field field(T ExperimentConfig::*member) {
  Field f;
  f.get = [member](const ExperimentConfig& c) {
    if constexpr (std::is_same_v<T, std::string>) return c.*member;
    else if constexpr (std::is_same_v<T, double>) return format_number(c.*member);
    else return std::to_string(c.*member);
  };
  return f;
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const auto table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto str = [&](const char* k, std::string ExperimentConfig::*m) {
      Field f = field(m);
      f.set = [m](ExperimentConfig& c, const std::string& v) { c.*m = v; };
      t.emplace_back(k, f);
    };
    auto num = [&](const char* k, double ExperimentConfig::*m) {
      Field f = field(m);
      const std::string key = k;
      f.set = [m, key](ExperimentConfig& c, const std::string& v) { c.*m = to_double(key, v); };
      t.emplace_back(k, f);
    };
    auto integer = [&](const char* k, int ExperimentConfig::*m) {
      Field f = field(m);
      const std::string key = k;
      f.set = [m, key](ExperimentConfig& c, const std::string& v) { c.*m = int(to_int(key, v)); };
      t.emplace_back(k, f);
    };
    str("name", &ExperimentConfig::name);
    str("mode", &ExperimentConfig::mode);
    str("family", &ExperimentConfig::family);
    integer("dim", &ExperimentConfig::dim);
    integer("N", &ExperimentConfig::N);
    num("c", &ExperimentConfig::c);
    num("m", &ExperimentConfig::m);
    num("rho", &ExperimentConfig::rho);
    num("delta", &ExperimentConfig::delta);
    num("q", &ExperimentConfig::q);
    str("profile", &ExperimentConfig::profile);
    integer("J", &ExperimentConfig::J);
    num("t0", &ExperimentConfig::t0);
    num("t1", &ExperimentConfig::t1);
    num("theta", &ExperimentConfig::theta);
    num("beta", &ExperimentConfig::beta);
    num("K1", &ExperimentConfig::K1);
    integer("ell", &ExperimentConfig::ell);
    num("gamma", &ExperimentConfig::gamma);
    integer("gamma_max_exp", &ExperimentConfig::gamma_max_exp);
    integer("gamma_grid", &ExperimentConfig::gamma_grid);
    integer("gamma_trials", &ExperimentConfig::gamma_trials);
    num("cfl_safety", &ExperimentConfig::cfl_safety);
    num("rel_dt", &ExperimentConfig::rel_dt);
    integer("samples", &ExperimentConfig::samples);
    num("mode_tol", &ExperimentConfig::mode_tol);
    str("method", &ExperimentConfig::method);
    integer("nu_min", &ExperimentConfig::nu_min);
    integer("nu_max", &ExperimentConfig::nu_max);
    integer("xi_min_exp", &ExperimentConfig::xi_min_exp);
    integer("xi_max_exp", &ExperimentConfig::xi_max_exp);
    integer("xi_per_octave", &ExperimentConfig::xi_per_octave);
    str("output_dir", &ExperimentConfig::output_dir);
    {
      Field f;
      f.get = [](const ExperimentConfig& c) { return std::to_string(c.seed); };
      f.set = [](ExperimentConfig& c, const std::string& v) {
        std::uint64_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
          throw ConfigError("config: 'seed' expects an unsigned integer, got '" + v + "'", "seed");
        c.seed = out;
      };
      t.emplace_back("seed", f);
    }
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return &f;
  return nullptr;
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

FamilyParams ExperimentConfig::family_params() const {
  FamilyParams p;
  p.dim = dim;
  p.c = c;
  p.m = m;
  p.rho = rho;
  p.delta = delta;
  p.q = q;
  p.profile = profile;
  p.J = J;
  p.grid_n = N;
  return p;
}

ParaMethod ExperimentConfig::para_method() const {
  return method == "direct" ? ParaMethod::direct : ParaMethod::separated;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("config: unknown key '" + key + "'", key);
  f->set(cfg, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, int> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'", "");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (seen.count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                            std::to_string(seen[key]) + ")",
                        key);
    seen[key] = lineno;
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what(), e.key);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'", "");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError("config: " + msg, key); };
  if (c.mode != "pde" && c.mode != "mode-ode") fail("mode", "mode must be 'pde' or 'mode-ode'");
  if (c.method != "separated" && c.method != "direct") fail("method", "method must be 'separated' or 'direct'");
  if (c.dim != 1 && c.dim != 2) fail("dim", "dim must be 1 or 2");
  if (!is_pow2(c.N) || c.N < 8) fail("N", "N must be a power of two >= 8");
  if (c.ell != 0 && c.ell != 1) fail("ell", "ell must be 0 or 1");
  try {
    validate_weights(EnergyWeights{c.theta, c.beta, c.K1}, c.ell);
  } catch (const WeightError& e) {
    fail("theta", e.what());
  }

  CoefficientField field = [&] {
    try {
      return make_family(c.family, c.family_params());
    } catch (const FamilyError& e) {
      throw ConfigError(std::string("config: ") + e.what(), "family");
    }
  }();
  const auto& k = field.constants();
  if (k.ell != c.ell)
    fail("ell", "ell = " + std::to_string(c.ell) + " does not match family '" + c.family + "' with profile '" +
                    c.profile + "' (ell = " + std::to_string(k.ell) + ")");
  const bool oscillating = c.family != "constant";
  if (!(c.t0 >= 0.0) || (oscillating && !(c.t0 > 0.0))) fail("t0", "t0 must be positive for oscillating families");
  if (!(c.t0 < c.t1)) fail("t1", "t0 must be smaller than t1");
  if (c.t1 > k.T_final) fail("t1", "t1 exceeds the family's final time");
  if (!(c.gamma >= 0.0) || (c.gamma > 0.0 && c.gamma < 1.0)) fail("gamma", "gamma must be 0 (search) or >= 1");
  if (c.gamma_max_exp < 0 || c.gamma_max_exp > 14) fail("gamma_max_exp", "gamma_max_exp must lie in [0, 14]");
  if (!is_pow2(c.gamma_grid) || c.gamma_grid < 8) fail("gamma_grid", "gamma_grid must be a power of two >= 8");
  if (c.gamma_trials < 1) fail("gamma_trials", "gamma_trials must be positive");
  if (!(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0)) fail("cfl_safety", "cfl_safety must lie in (0, 1]");
  if (!(c.rel_dt >= 0.0)) fail("rel_dt", "rel_dt must be nonnegative");
  if (c.samples < 2) fail("samples", "samples must be >= 2");
  if (!(c.mode_tol >= 1e-12)) fail("mode_tol", "mode_tol must be >= 1e-12");
  if (c.mode == "pde") {
    if (c.nu_min < 0) fail("nu_min", "nu_min must be nonnegative");
    if (c.nu_max - c.nu_min < 4) fail("nu_max", "nu_max - nu_min must be >= 4");
    if (std::ldexp(1.0, c.nu_max) > c.N / 3.0) fail("nu_max", "2^nu_max must not exceed N/3");
  } else {
    if (!field.time_only()) fail("family", "mode-ode runs need a time-only family");
    if (c.xi_min_exp < 0 || c.xi_max_exp < c.xi_min_exp + 2) fail("xi_max_exp", "need xi_max_exp >= xi_min_exp + 2");
    if (c.xi_per_octave < 1) fail("xi_per_octave", "xi_per_octave must be positive");
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  ExperimentConfig key = cfg;
  key.output_dir.clear();
  for (unsigned char ch : serialize_config(key)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace oscillab
