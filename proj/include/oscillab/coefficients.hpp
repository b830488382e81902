#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscillab/spectral.hpp"

namespace oscillab {

using Point = std::array<double, 2>;

/// Scalar function of time with closed-form first and second derivatives.
class TimeProfile {
 public:
  virtual ~TimeProfile() = default;
  /// order 0, 1 or 2.
  virtual double eval(double t, int order) const = 0;
  virtual bool is_constant() const { return false; }
};

/// Scalar function on the torus.
class SpatialProfile {
 public:
  virtual ~SpatialProfile() = default;
  virtual double eval(const Point& x) const = 0;
  virtual double sup_abs() const = 0;
  /// Largest Fourier frequency present; nullopt when not band-limited.
  virtual std::optional<int> band() const = 0;
  virtual std::string name() const = 0;
};

/// One term T(t) * X(x) of an isotropic coefficient.
struct SeparableTerm {
  std::shared_ptr<const TimeProfile> time;
  std::shared_ptr<const SpatialProfile> space;
};

/// Analytic constants declared by a family. Unknown ones stay empty.
struct OscConstants {
  std::optional<double> C0;      // space modulus of a
  std::optional<double> C1;      // |dt a| <= C1 / t
  std::optional<double> C2;      // space modulus of dt a, times t
  std::optional<double> C3;      // |dtt a| <= C3 / t^2
  std::optional<double> graded;  // |dt a| t / (1 + |log t|^delta) <= graded
};

struct FieldConstants {
  double lambda0 = 1.0;
  double Lambda0 = 1.0;
  int ell = 0;
  std::optional<double> delta;
  OscConstants osc;
  double T_final = 1.0;
};

/// Isotropic coefficient matrix a_jk(t, x) = delta_jk * sum_r T_r(t) X_r(x).
///
/// Evaluation is pure; a field may be shared between threads.
class CoefficientField {
 public:
  CoefficientField(std::string family, int dim, std::vector<SeparableTerm> terms, FieldConstants constants);

  const std::string& family() const { return family_; }
  int dim() const { return dim_; }
  const FieldConstants& constants() const { return constants_; }
  const std::vector<SeparableTerm>& terms() const { return terms_; }
  bool time_only() const;

  /// Scalar a(t, x) or its time derivatives (order 1, 2).
  double scalar(double t, const Point& x, int order = 0) const;
  double eval(double t, const Point& x, int j, int k) const { return j == k ? scalar(t, x, 0) : 0.0; }
  double eval_dt(double t, const Point& x, int j, int k) const { return j == k ? scalar(t, x, 1) : 0.0; }
  double eval_dtt(double t, const Point& x, int j, int k) const { return j == k ? scalar(t, x, 2) : 0.0; }

  /// Precomputed spatial profiles on a grid, reused across time evaluations.
  struct GridCache {
    Grid grid;
    std::vector<std::vector<double>> profiles;
  };
  GridCache cache_grid(const Grid& g, bool band_limit = false) const;
  void scalar_on_grid(double t, const GridCache& cache, int order, std::span<double> out) const;

 private:
  std::string family_;
  int dim_;
  std::vector<SeparableTerm> terms_;
  FieldConstants constants_;
};

/// Parameters for the built-in families. Unused fields are ignored.
struct FamilyParams {
  int dim = 1;
  double c = 1.0;      // constant
  double m = 2.0;      // background level
  double rho = 0.5;    // oscillation amplitude
  double delta = 0.0;  // delta-osc grade
  double q = 2.0;      // violator exponent
  std::string profile = "sine";  // one | sine | weierstrass
  int J = 0;           // Weierstrass terms; 0 means derive from grid_n
  int grid_n = 256;
  double T_final = 1.0;
};

class FamilyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Builds one of: constant, yamazaki-osc, delta-osc, violator.
CoefficientField make_family(const std::string& name, const FamilyParams& params);

std::shared_ptr<const SpatialProfile> make_profile(const std::string& name, int dim, int J);
/// Number of Weierstrass terms that stay inside the two-thirds band of an n-point grid.
int weierstrass_terms_for_grid(int n);

/// Log-uniform times plus quasi-random points on the torus.
struct SamplingPlan {
  double t_min = 1e-8;
  double t_max = 1.0;
  int per_decade = 400;
  int x_samples = 64;
  int directions = 16;
  std::uint64_t seed = 1;

  std::vector<double> times() const;
  std::vector<Point> points(int dim) const;
};

struct EllipticityReport {
  double lambda_min;
  double lambda_max;
};

class NonHyperbolicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EllipticityReport check_ellipticity(const CoefficientField& field, const SamplingPlan& plan);

struct ModulusReport {
  double sup = 0.0;
  std::vector<double> steps;    // |y| values
  std::vector<double> per_step; // sup over (t, x) at each |y|
};

/// Empirical space modulus sup |a(t,x+y) - a(t,x)| / (|y| log^ell(1 + 1/|y|)).
/// Uses the halving sequence |y| = 2^-1 ... 2^-halvings.
ModulusReport estimate_space_modulus(const CoefficientField& field, int ell, const SamplingPlan& plan,
                                     int halvings = 20);

struct OscillationReport {
  double sup_t_dta = 0.0;
  double sup_t2_dtta = 0.0;
  double sup_graded = 0.0;
};

OscillationReport check_oscillation_bounds(const CoefficientField& field, const SamplingPlan& plan);

/// Sup of |t dt a| restricted to each decade [10^-(d+1), 10^-d] of the plan.
std::vector<double> oscillation_by_decade(const CoefficientField& field, const SamplingPlan& plan);

}  // namespace oscillab
