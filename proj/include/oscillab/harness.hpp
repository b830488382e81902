#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscillab/coefficients.hpp"
#include "oscillab/config.hpp"
#include "oscillab/energy.hpp"
#include "oscillab/lp.hpp"

namespace oscillab {

/// Worker count: OSCILLAB_THREADS if set and positive, else the hardware count.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// A run failure tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage_, const std::string& what)
      : std::runtime_error(stage_ + ": " + what), stage(std::move(stage_)) {}
  std::string stage;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

/// Energy amplification of one frequency on the mode-ODE path.
struct XiSample {
  double xi = 0.0;
  double amplification = 0.0;  // sup over data of e(t1) / e(t0), block-energy form
  double classical = 0.0;      // same with |v'|^2 / xi^2 + a |v|^2
  double wronskian_drift = 0.0;
  long steps = 0;
};

struct RunReport {
  std::string name;
  std::string config_hash;
  std::string config_text;
  std::string mode;
  std::string family;
  int ell = 0;
  int N = 0;

  double gamma0 = 1.0;
  std::vector<std::pair<double, PositivityQuotients>> gamma_history;

  // pde runs
  EnergyLedger ledger;
  LossCurve loss;
  LinearEnvelope envelope;
  double sup_sigma = 0.0;
  double C_eq = 0.0;
  double eq_min = 0.0;
  double eq_max = 0.0;
  double dt_constant = 0.0;

  // mode-ode runs
  std::vector<XiSample> xi_samples;
  std::vector<int> octaves;
  std::vector<double> octave_log2_amp;
  std::vector<double> local_exponents;  // NaN where undefined
  double amp_ratio = 0.0;
  double amp_exponent = 0.0;

  std::vector<CheckResult> checks;
  double wall_seconds = 0.0;
  long steps = 0;

  bool passed() const;
};

/// Validates, then runs coefficient checks, gamma search, solve, ledger and fit.
/// Writes run.json, ledger.csv and summary.csv when output_dir is set.
RunReport run(const ExperimentConfig& cfg);

void write_outputs(const RunReport& report, const std::string& dir);
std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
RunReport load_report(const std::string& path);

/// Sample times: t0 plus a merged log-uniform and uniform set in (t0, t1].
std::vector<double> sample_times(double t0, double t1, int count);

/// Smallest gamma meeting both positivity inequalities for the configured blocks and times.
Gamma0Result search_gamma0(const CoefficientField& field, const ExperimentConfig& cfg,
                           std::span<const SpectralField> trials);

/// Block-energy amplification of one frequency for a time-only field.
XiSample mode_amplification(const CoefficientField& field, double xi, double t0, double t1, double gamma,
                            double tol);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Parses `key=v1,v2,...`.
SweepAxis parse_axis(const std::string& spec);

struct SweepCell {
  std::vector<std::pair<std::string, std::string>> assignment;
  std::optional<RunReport> report;
  std::string stage;  // failing stage, empty on success
  std::string error;
};

/// Runs every combination of axis values; cells write to <output_dir>/cell-<i>.
std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes);
void write_sweep_summary(std::ostream& out, const std::vector<SweepCell>& cells, const std::vector<SweepAxis>& axes);

enum class Criterion { thm_2_1, thm_2_2, delta_family, equivalence };

Criterion parse_criterion(const std::string& name);
std::string criterion_name(Criterion c);

struct TheoremCheck {
  bool pass = false;
  double margin = 0.0;
  std::string verdict;
  std::vector<CheckResult> details;
};

class CriterionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// thm-2.1: one run, or a run and its N-doubled twin.
/// thm-2.2: one ell = 1 run.
/// delta-family: runs for delta = 0, delta = 1 and the violator, in that order.
/// equivalence: a run and its N-doubled twin.
TheoremCheck check_theorem(std::span<const RunReport> reports, Criterion which);

/// Littlewood-Paley property suite on an n-point grid.
std::vector<CheckResult> lp_selftest(int n = 256, int fields = 1000, std::uint64_t seed = 7);

}  // namespace oscillab
