#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "oscillab/coefficients.hpp"
#include "oscillab/regularize.hpp"
#include "oscillab/spectral.hpp"

namespace oscillab {

/// Littlewood-Paley blocks on an n-point grid, realized as Fourier multipliers.
///
/// chi is radial, equal to 1 on |xi| <= 1.1 and 0 on |xi| >= 1.9. Block j >= 1
/// uses phi_j(xi) = chi(2^-j xi) - chi(2^(1-j) xi), block 0 uses chi, and
/// S_j = chi(2^-j D) = sum_{i <= j} Delta_i.
class DyadicDecomposition {
 public:
  explicit DyadicDecomposition(Grid g);

  const Grid& grid() const { return grid_; }
  /// J = log2(n/2) + 1.
  int max_block() const { return J_; }

  static double chi(double r);
  double block_multiplier(int j, double kabs) const;
  double low_multiplier(int j, double kabs) const;

  SpectralField block(const SpectralField& u, int j) const;
  SpectralField low_pass(const SpectralField& u, int j) const;

 private:
  Grid grid_;
  int J_;
};

/// (sum_k (gamma^2 + |k|^2)^s |u_k|^2)^(1/2), in the L2 normalization of SpectralField.
double sobolev_norm(const SpectralField& u, double s, double gamma);
/// (sum_j 2^(2 s j) ||Delta_j u||^2)^(1/2).
double dyadic_sobolev_norm(const SpectralField& u, double s, const DyadicDecomposition& dec);

/// A symbol f(x, xi) = weight(x) * F(s(x), |xi|^2) with x on the grid.
///
/// Every symbol this library builds depends on x only through one scalar
/// field s (the isotropic coefficient) and an optional prefactor.
struct GridSymbol {
  Grid grid;
  std::vector<double> s;
  std::vector<double> weight;  // empty means 1
  std::function<double(double s, double ksq)> F;

  double eval(std::size_t i, double ksq) const {
    const double w = weight.empty() ? 1.0 : weight[i];
    return w * F(s[i], ksq);
  }
};

/// Symbol of multiplication by a spatial field.
GridSymbol multiplication_symbol(Grid g, std::vector<double> values);

enum class ParaMethod {
  /// Per-mode x-smoothing and O(n * modes) summation.
  direct,
  /// Chebyshev expansion of F in s; each term is a product of two fields.
  separated,
};

/// floor(log2 gamma).
int para_mu(double gamma);

/// T_f^gamma u = S_{mu-1} f S_{mu+2} u + sum_{nu >= mu} S_nu f Delta_{nu+3} u,
/// mu = floor(log2 gamma), S_{mu-1} read as S_0 when mu <= 1. S_nu smooths
/// the x-dependence of f at each frozen xi. Products are formed without
/// aliasing and truncated to the grid.
SpectralField paraproduct(const GridSymbol& f, const SpectralField& u, double gamma, const DyadicDecomposition& dec,
                          ParaMethod method = ParaMethod::separated);

/// Kinds of symbol derived from alpha = ((gamma^2 + a|xi|^2) / (gamma^2 + |xi|^2))^(1/2).
enum class SymbolKind {
  alpha,
  alpha_sqrt,
  alpha_inv_sqrt,
  dt_alpha_inv_sqrt,
  w_symbol,       // alpha^(1/2) (gamma^2 + |xi|^2)^(1/2)
  alpha_sq_weight // alpha^2 (gamma^2 + |xi|^2)
};

/// alpha-symbol family for one regularized coefficient and a fixed gamma.
class SymbolEvaluator {
 public:
  SymbolEvaluator(RegularizedCoefficient reg, double gamma);

  double gamma() const { return gamma_; }
  const RegularizedCoefficient& regularized() const { return reg_; }

  double eval(double t, const Point& x, const std::array<double, 2>& xi, SymbolKind kind) const;
  GridSymbol on_grid(double t, const CoefficientField::GridCache& cache, SymbolKind kind) const;

  /// Closed-form F(s, |xi|^2) with optional ds (= dt a) prefactor handled by the caller.
  static double shape(double s, double ksq, double gamma, SymbolKind kind);

 private:
  RegularizedCoefficient reg_;
  double gamma_;
};

SymbolEvaluator alpha_symbol(const RegularizedCoefficient& reg, double gamma);

/// Pair of symbols checked by the positivity search.
struct PositivityCase {
  GridSymbol inv_sqrt;  // alpha^(-1/2)
  GridSymbol w_symbol;  // alpha^(1/2) (gamma^2 + |xi|^2)^(1/2)
};

struct PositivityQuotients {
  double l2 = 0.0;  // min ||T u|| / ||u||
  double h1 = 0.0;  // min ||T u|| / ||u||_{H^1_gamma}
};

PositivityQuotients positivity_quotients(std::span<const PositivityCase> cases, std::span<const SpectralField> trials,
                                         double gamma, const DyadicDecomposition& dec);

struct Gamma0Result {
  double gamma0 = 0.0;
  PositivityQuotients at_gamma0;
  std::vector<std::pair<double, PositivityQuotients>> history;
};

class Gamma0Error : public std::runtime_error {
 public:
  Gamma0Error(const std::string& what, double worst) : std::runtime_error(what), worst_quotient(worst) {}
  double worst_quotient;
};

/// Smallest gamma in {1, 2, 4, ..., 2^max_exponent} for which both quotients
/// reach lambda0 / 2 on every trial field.
Gamma0Result find_gamma0(const std::function<std::vector<PositivityCase>(double)>& cases_for_gamma,
                         std::span<const SpectralField> trials, double lambda0, const DyadicDecomposition& dec,
                         int max_exponent = 14);

/// Random real fields band-limited to n/3: a mix of power-law spectra of
/// random slope and isolated low modes.
std::vector<SpectralField> random_trial_fields(const Grid& g, int count, std::uint64_t seed);

}  // namespace oscillab
