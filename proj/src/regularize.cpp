#include "oscillab/regularize.hpp"

#include <cmath>
#include <vector>

#include "oscillab/smooth.hpp"

namespace oscillab {

namespace {

/// Base profile frozen outside [eps, T]. Derivatives vanish in the frozen
/// regions and are one-sided at the two kinks.
class TruncatedTime final : public TimeProfile {
 public:
  TruncatedTime(std::shared_ptr<const TimeProfile> src, double eps, double T) : src_(std::move(src)), eps_(eps), T_(T) {}
  double eval(double t, int order) const override {
    if (t < eps_) return order == 0 ? src_->eval(eps_, 0) : 0.0;
    if (t > T_) return order == 0 ? src_->eval(T_, 0) : 0.0;
    return src_->eval(t, order);
  }
  bool is_constant() const override { return src_->is_constant(); }
  double value(double t) const { return src_->eval(std::clamp(t, eps_, T_), 0); }
  /// The untruncated coefficient on (0, T], frozen beyond T.
  double original(double t, int order) const {
    if (t > T_) return order == 0 ? src_->eval(T_, 0) : 0.0;
    return src_->eval(t, order);
  }
  double eps() const { return eps_; }
  double T() const { return T_; }

 private:
  std::shared_ptr<const TimeProfile> src_;
  double eps_;
  double T_;
};

/// rho_eta *_t truncated profile, eta = eps/2. Derivatives are taken on the
/// kernel. Weights are normalized by the discrete kernel mass so constants
/// are reproduced exactly.
class MollifiedTime final : public TimeProfile {
 public:
  MollifiedTime(std::shared_ptr<const TruncatedTime> src, double eta, QuadSpec quad)
      : src_(std::move(src)), eta_(eta), quad_(quad) {
    if (quad_.nodes() < 256) throw QuadratureError("mollify_time: quadrature needs at least 256 nodes");
    const auto rule = gauss_rule(-1.0, 1.0, quad_);
    double mass = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) mass += rule.w[i] * smooth::bump(rule.x[i])[0];
    if (std::abs(mass - 1.0) > 1e-10)
      throw QuadratureError("mollify_time: kernel mass off by " + std::to_string(mass - 1.0));
  }

  double eval(double t, int order) const override {
    if (src_->is_constant()) return order == 0 ? src_->value(t) : 0.0;
    const std::array<double, 2> breaks{(t - src_->eps()) / eta_, (t - src_->T()) / eta_};
    const auto rule = gauss_rule_split(-1.0, 1.0, breaks, quad_);
    const double centre = src_->value(t);
    double mass = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const auto k = smooth::bump(rule.x[i]);
      mass += rule.w[i] * k[0];
      acc += rule.w[i] * k[order] * (src_->value(t - eta_ * rule.x[i]) - centre);
    }
    if (order == 0) return centre + acc / mass;
    return acc / mass / std::pow(eta_, order);
  }
  bool is_constant() const override { return src_->is_constant(); }

 private:
  std::shared_ptr<const TruncatedTime> src_;
  double eta_;
  QuadSpec quad_;
};

/// a_eps = mollified * theta_eps + a * (1 - theta_eps).
class BlendedTime final : public TimeProfile {
 public:
  BlendedTime(std::shared_ptr<const TruncatedTime> trunc, std::shared_ptr<const MollifiedTime> mol, double eps)
      : trunc_(std::move(trunc)), mol_(std::move(mol)), theta_(eps) {}

  double eval(double t, int order) const override {
    const double eps = theta_.eps();
    if (t <= 0.5 * eps) return order == 0 ? trunc_->value(eps) : 0.0;
    if (t >= 2.0 * eps) return trunc_->original(t, order);
    const auto th = theta_.eval(t);
    const double m0 = mol_->eval(t, 0), a0 = trunc_->original(t, 0);
    if (order == 0) return m0 * th[0] + a0 * (1.0 - th[0]);
    const double m1 = mol_->eval(t, 1), a1 = trunc_->original(t, 1);
    if (order == 1) return m1 * th[0] + (m0 - a0) * th[1] + a1 * (1.0 - th[0]);
    const double m2 = mol_->eval(t, 2), a2 = trunc_->original(t, 2);
    return m2 * th[0] + 2.0 * (m1 - a1) * th[1] + (m0 - a0) * th[2] + a2 * (1.0 - th[0]);
  }
  bool is_constant() const override { return trunc_->is_constant(); }

 private:
  std::shared_ptr<const TruncatedTime> trunc_;
  std::shared_ptr<const MollifiedTime> mol_;
  ThetaCutoff theta_;
};

void check_eps(const CoefficientField& base, double eps) {
  if (!(eps > 0.0) || eps > 0.5 * base.constants().T_final)
    throw std::invalid_argument("regularize: eps must lie in (0, T/2]");
}

std::vector<std::shared_ptr<const TruncatedTime>> truncated_terms(const CoefficientField& base, double eps) {
  std::vector<std::shared_ptr<const TruncatedTime>> out;
  for (const auto& term : base.terms())
    out.push_back(std::make_shared<TruncatedTime>(term.time, eps, base.constants().T_final));
  return out;
}

}  // namespace

std::array<double, 3> theta_shape(double s) { return smooth::cutoff(s, 0.25, 0.75); }

ThetaCutoff::ThetaCutoff(double eps) : eps_(eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("cutoff_theta: eps must be positive");
}

std::array<double, 3> ThetaCutoff::eval(double t) const {
  const double scale = 1.0 / (3.0 * eps_);
  const auto h = theta_shape(t * scale + 1.0 / 12.0);
  return {h[0], h[1] * scale, h[2] * scale * scale};
}

ThetaCutoff cutoff_theta(double eps) { return ThetaCutoff(eps); }

CoefficientField truncate_time(const CoefficientField& base, double eps) {
  check_eps(base, eps);
  auto tr = truncated_terms(base, eps);
  std::vector<SeparableTerm> terms;
  for (std::size_t r = 0; r < tr.size(); ++r) terms.push_back({tr[r], base.terms()[r].space});
  return CoefficientField(base.family(), base.dim(), std::move(terms), base.constants());
}

CoefficientField mollify_time(const CoefficientField& truncated_source, double eps, const QuadSpec& quad) {
  std::vector<SeparableTerm> terms;
  for (const auto& term : truncated_source.terms()) {
    auto tr = std::dynamic_pointer_cast<const TruncatedTime>(term.time);
    if (!tr) throw std::invalid_argument("mollify_time: expects the output of truncate_time");
    terms.push_back({std::make_shared<MollifiedTime>(tr, 0.5 * eps, quad), term.space});
  }
  return CoefficientField(truncated_source.family(), truncated_source.dim(), std::move(terms),
                          truncated_source.constants());
}

RegularizedCoefficient blend(const CoefficientField& base, double eps, const QuadSpec& quad) {
  check_eps(base, eps);
  auto tr = truncated_terms(base, eps);
  std::vector<SeparableTerm> terms;
  for (std::size_t r = 0; r < tr.size(); ++r) {
    auto mol = std::make_shared<MollifiedTime>(tr[r], 0.5 * eps, quad);
    terms.push_back({std::make_shared<BlendedTime>(tr[r], mol, eps), base.terms()[r].space});
  }
  return {base, eps, CoefficientField(base.family(), base.dim(), std::move(terms), base.constants())};
}

PhiFunction::PhiFunction(double eps) : eps_(eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("phi: eps must be positive");
}

namespace {
/// The ramp of phi completes over this fraction of [eps/2, eps]. A slower ramp
/// lets the mollifier's second derivative outgrow phi^2 just after eps/2.
constexpr double kPhiRampWidth = 0.25;
}  // namespace

double PhiFunction::operator()(double t) const {
  const double half = 0.5 * eps_;
  if (t <= half) return 0.0;
  return smooth::ramp((t - half) / (half * kPhiRampWidth))[0] / t;
}

PhiFunction phi(double eps) { return PhiFunction(eps); }

double f_weight(int nu, double t, const QuadSpec& quad) {
  if (nu < 0) throw std::invalid_argument("f_weight: nu must be >= 0");
  if (t <= 0.0) return 0.0;
  const double eps = std::ldexp(1.0, -nu);
  const PhiFunction ph(eps);
  double phi_sq = 0.0;
  const double ramp_end = 0.5 * eps * (1.0 + kPhiRampWidth);
  const auto sq = [&](double s) { const double p = ph(s); return p * p; };
  if (t > 0.5 * eps) phi_sq += integrate(sq, 0.5 * eps, std::min(t, ramp_end), quad);
  if (t > ramp_end) phi_sq += 1.0 / ramp_end - 1.0 / t;
  const double indicator = std::ldexp(1.0, nu) * std::min(t, 2.0 * eps);
  return phi_sq * eps + indicator;
}

DerivativeConstants empirical_derivative_constants(const RegularizedCoefficient& reg, const SamplingPlan& plan) {
  const PhiFunction ph(reg.eps);
  const auto xs = reg.field.time_only() ? std::vector<Point>{Point{0.0, 0.0}} : plan.points(reg.field.dim());
  DerivativeConstants c;
  for (double t : plan.times()) {
    const double p = ph(t);
    // Skip the onset of the ramp where both sides vanish to all orders.
    if (p * t < 1e-9) continue;
    for (const auto& x : xs) {
      c.C1 = std::max(c.C1, std::abs(reg.field.scalar(t, x, 1)) / p);
      c.C3 = std::max(c.C3, std::abs(reg.field.scalar(t, x, 2)) / (p * p));
    }
  }
  return c;
}

}  // namespace oscillab
