#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscillab/coefficients.hpp"
#include "oscillab/lp.hpp"

namespace oscillab {

/// Declarative description of one experiment.
///
/// Text form is one `key = value` per line; `#` starts a comment. Every key
/// is optional and unknown keys are rejected.
struct ExperimentConfig {
  std::string name = "run";
  std::string mode = "pde";  // pde | mode-ode

  std::string family = "constant";
  int dim = 1;
  int N = 64;
  double c = 1.0;
  double m = 2.0;
  double rho = 0.5;
  double delta = 0.0;
  double q = 2.0;
  std::string profile = "sine";
  int J = 0;

  double t0 = 1e-4;
  double t1 = 1.0;

  double theta = 0.0;
  double beta = 0.0;
  double K1 = 0.0;
  int ell = 0;

  double gamma = 0.0;  // > 0 fixes gamma; 0 searches
  int gamma_max_exp = 10;
  int gamma_grid = 256;
  int gamma_trials = 100;

  double cfl_safety = 0.5;
  double rel_dt = 0.05;
  int samples = 32;
  double mode_tol = 1e-10;
  std::string method = "separated";  // separated | direct

  int nu_min = 2;
  int nu_max = 6;

  int xi_min_exp = 4;
  int xi_max_exp = 12;
  int xi_per_octave = 1;

  std::string output_dir;
  std::uint64_t seed = 1;

  FamilyParams family_params() const;
  ParaMethod para_method() const;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, std::string key_) : std::invalid_argument(what), key(std::move(key_)) {}
  std::string key;
};

/// Parses the text form; throws ConfigError naming the line and key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical text form with every key in a fixed order.
std::string serialize_config(const ExperimentConfig& cfg);

/// Sets one key from its text value; throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

/// Checks ranges and cross-field consistency, including the family constants.
void validate_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace oscillab
