#pragma once

#include <array>
#include <memory>
#include <stdexcept>

#include "oscillab/coefficients.hpp"
#include "oscillab/quadrature.hpp"

namespace oscillab {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// theta_eps(t) = theta(t / (3 eps) + 1/12): 1 for t <= eps/2, 0 for t >= 2 eps.
class ThetaCutoff {
 public:
  explicit ThetaCutoff(double eps);
  double eps() const { return eps_; }
  /// {theta_eps, d/dt, d2/dt2}
  std::array<double, 3> eval(double t) const;
  double operator()(double t) const { return eval(t)[0]; }

 private:
  double eps_;
};

ThetaCutoff cutoff_theta(double eps);

/// The profile shape theta(s) itself: 1 for s <= 1/4, 0 for s >= 3/4.
std::array<double, 3> theta_shape(double s);

/// a(clamp(t, eps, T)): frozen below eps and above T.
CoefficientField truncate_time(const CoefficientField& base, double eps);

/// Time convolution of the truncated coefficient with rho_{eps/2}.
CoefficientField mollify_time(const CoefficientField& truncated_source, double eps, const QuadSpec& quad = {});

/// Regularized coefficient a_eps: mollified truncation near t = 0 blended
/// into the original coefficient by theta_eps. Defined for all real t.
struct RegularizedCoefficient {
  CoefficientField base;
  double eps;
  CoefficientField field;

  double eval(double t, const Point& x, int j, int k) const { return field.eval(t, x, j, k); }
  double eval_dt(double t, const Point& x, int j, int k) const { return field.eval_dt(t, x, j, k); }
  double eval_dtt(double t, const Point& x, int j, int k) const { return field.eval_dtt(t, x, j, k); }
};

RegularizedCoefficient blend(const CoefficientField& base, double eps, const QuadSpec& quad = {});

/// Envelope phi_eps: 0 for t <= eps/2, psi((t - eps/2)/(eps/2)) / t beyond.
class PhiFunction {
 public:
  explicit PhiFunction(double eps);
  double eps() const { return eps_; }
  double operator()(double t) const;

 private:
  double eps_;
};

PhiFunction phi(double eps);

/// f_nu(t) = int_0^t (phi_nu^2 2^-nu + 2^nu 1_[0, 2^(1-nu)]) dtau.
double f_weight(int nu, double t, const QuadSpec& quad = {});

/// Empirical constants of |dt a_eps| <= C1 phi_eps and |dtt a_eps| <= C3 phi_eps^2.
struct DerivativeConstants {
  double C1 = 0.0;
  double C3 = 0.0;
};

DerivativeConstants empirical_derivative_constants(const RegularizedCoefficient& reg, const SamplingPlan& plan);

}  // namespace oscillab
