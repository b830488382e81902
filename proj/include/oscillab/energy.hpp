#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "oscillab/lp.hpp"
#include "oscillab/regularize.hpp"
#include "oscillab/solver.hpp"

namespace oscillab {

/// Symbol evaluators for every block of a grid, with eps = 2^-nu clamped to T/2.
class BlockSymbols {
 public:
  BlockSymbols(const CoefficientField& base, Grid g, double gamma, const QuadSpec& quad = {});

  double gamma() const { return gamma_; }
  const Grid& grid() const { return grid_; }
  const CoefficientField::GridCache& cache() const { return cache_; }
  const SymbolEvaluator& evaluator(int nu) const { return evaluators_.at(std::size_t(nu)); }
  int max_block() const { return int(evaluators_.size()) - 1; }

  /// eps used for block nu.
  static double block_eps(int nu, double T_final);

 private:
  Grid grid_;
  double gamma_;
  CoefficientField::GridCache cache_;
  std::vector<SymbolEvaluator> evaluators_;
};

struct BlockFields {
  SpectralField u_nu;
  SpectralField ut_nu;
  SpectralField v_nu;
  SpectralField w_nu;
};

/// u_nu = Delta_nu u, v_nu = T_{alpha^-1/2} dt u_nu - T_{dt alpha^-1/2} u_nu, w_nu = T_{alpha^1/2 (gamma^2+xi^2)^1/2} u_nu.
BlockFields block_fields(const WaveState& state, const BlockSymbols& symbols, int nu, const DyadicDecomposition& dec,
                         ParaMethod method = ParaMethod::separated);

struct BlockEnergySample {
  int nu = 0;
  double t = 0.0;
  double e_nu = 0.0;         // ||v||^2 + ||w||^2 + ||u_nu||^2
  double e_classical = 0.0;  // ||dt u_nu||^2 + ||u_nu||^2 + ||grad u_nu||^2
  double dt_norm = 0.0;      // ||dt u_nu||
};

BlockEnergySample block_energy(const WaveState& state, const BlockSymbols& symbols, int nu,
                               const DyadicDecomposition& dec, ParaMethod method = ParaMethod::separated);

/// Classical block energy only (no paraproducts).
double classical_block_energy(const WaveState& state, int nu, const DyadicDecomposition& dec);

struct EnergyWeights {
  double theta = 0.0;
  double beta = 0.0;
  double K1 = 0.0;
};

class WeightError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// theta in [0, 1), theta > 0 when ell = 1, beta >= 0, K1 >= 0.
void validate_weights(const EnergyWeights& w, int ell);

/// exp(-K1 f_nu(t)) exp(-2 beta (nu + 1) t) 2^(-2 nu theta).
double energy_weight(int nu, double t, const EnergyWeights& w, const QuadSpec& quad = {});

/// Block energies on a (time x block) table. samples[i][j] belongs to times[i], nus[j].
struct EnergyLedger {
  std::vector<double> times;
  std::vector<int> nus;
  std::vector<std::vector<BlockEnergySample>> samples;
  EnergyWeights weights;

  const BlockEnergySample& at(std::size_t ti, std::size_t ni) const { return samples.at(ti).at(ni); }
};

/// Weighted total energy at every ledger time.
std::vector<double> total_energy(const EnergyLedger& ledger, const QuadSpec& quad = {});

struct LossCurve {
  std::vector<double> times;
  std::vector<double> sigma;     // fitted slope per time
  std::vector<double> residual;  // RMS residual of the per-time fit
};

class FitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// sigma(t): least-squares slope of (1/2) log2(e_nu(t) / e_nu(t_first)) against nu over [nu_min, nu_max].
LossCurve fit_loss(const EnergyLedger& ledger, int nu_min, int nu_max);

/// Linear envelope sigma(t) ~ beta t fitted through the origin.
struct LinearEnvelope {
  double beta_hat = 0.0;     // least-squares slope, clipped at 0
  double residual = 0.0;     // RMS of sigma - beta_hat t
  double max_excess = 0.0;   // max of sigma - beta_hat t
  double max_pair_slope = 0.0;  // max of (sigma(t) - sigma(t')) / (t - t') over t - t' >= 0.1
};

LinearEnvelope fit_envelope(const LossCurve& curve);

/// Header line that versions the ledger CSV schema.
inline constexpr const char* kCsvHeader = "# oscillab-csv v1";

/// Rows (t, nu, e_nu, e_classical, weight, total).
void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger, const QuadSpec& quad = {});

/// Shortest round-trip text for a double.
std::string format_number(double v);

}  // namespace oscillab
