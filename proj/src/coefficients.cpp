#include "oscillab/coefficients.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace oscillab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class ConstantTime final : public TimeProfile {
 public:
  explicit ConstantTime(double c) : c_(c) {}
  double eval(double, int order) const override { return order == 0 ? c_ : 0.0; }
  bool is_constant() const override { return true; }

 private:
  double c_;
};

/// rho * sin(log t)
class LogSine final : public TimeProfile {
 public:
  explicit LogSine(double rho) : rho_(rho) {}
  double eval(double t, int order) const override {
    const double s = std::sin(std::log(t)), c = std::cos(std::log(t));
    switch (order) {
      case 0: return rho_ * s;
      case 1: return rho_ * c / t;
      default: return -rho_ * (s + c) / (t * t);
    }
  }

 private:
  double rho_;
};

/// rho * sin(L^(1+delta) / (1+delta)), L = -log t, for 0 < t <= 1.
class GradedOscillation final : public TimeProfile {
 public:
  GradedOscillation(double rho, double delta) : rho_(rho), delta_(delta) {}
  double eval(double t, int order) const override {
    const double L = std::max(-std::log(t), 0.0);
    const double phase = std::pow(L, 1.0 + delta_) / (1.0 + delta_);
    const double s = std::sin(phase), c = std::cos(phase);
    const double Ld = std::pow(L, delta_);
    switch (order) {
      case 0: return rho_ * s;
      case 1: return -rho_ * c * Ld / t;
      default: {
        double lower = 0.0;
        if (delta_ > 0.0) lower = delta_ * c * std::pow(L, delta_ - 1.0);
        return rho_ / (t * t) * (-s * Ld * Ld + lower + c * Ld);
      }
    }
  }

 private:
  double rho_;
  double delta_;
};

/// rho * sin(t^(1-q) / (q-1))
class FastOscillation final : public TimeProfile {
 public:
  FastOscillation(double rho, double q) : rho_(rho), q_(q) {}
  double eval(double t, int order) const override {
    const double phase = std::pow(t, 1.0 - q_) / (q_ - 1.0);
    const double s = std::sin(phase), c = std::cos(phase);
    const double d1 = -std::pow(t, -q_);
    switch (order) {
      case 0: return rho_ * s;
      case 1: return rho_ * c * d1;
      default: return rho_ * (-s * d1 * d1 + c * q_ * std::pow(t, -q_ - 1.0));
    }
  }

 private:
  double rho_;
  double q_;
};

class OneProfile final : public SpatialProfile {
 public:
  double eval(const Point&) const override { return 1.0; }
  double sup_abs() const override { return 1.0; }
  std::optional<int> band() const override { return 0; }
  std::string name() const override { return "one"; }
};

class SineProfile final : public SpatialProfile {
 public:
  explicit SineProfile(int dim) : dim_(dim) {}
  double eval(const Point& x) const override {
    return dim_ == 1 ? std::sin(x[0]) : 0.5 * (std::sin(x[0]) + std::sin(x[1]));
  }
  double sup_abs() const override { return 1.0; }
  std::optional<int> band() const override { return 1; }
  std::string name() const override { return "sine"; }
  double lipschitz() const { return dim_ == 1 ? 1.0 : std::sqrt(0.5); }

 private:
  int dim_;
};

class WeierstrassProfile final : public SpatialProfile {
 public:
  WeierstrassProfile(int dim, int J) : dim_(dim), J_(J) {}
  double eval(const Point& x) const override {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
      double scale = 1.0;
      for (int j = 1; j <= J_; ++j) {
        scale *= 2.0;
        s += std::cos(scale * x[a]) / scale;
      }
    }
    return s / dim_;
  }
  double sup_abs() const override { return 1.0 - std::ldexp(1.0, -J_); }
  std::optional<int> band() const override { return 1 << J_; }
  std::string name() const override { return "weierstrass"; }

 private:
  int dim_;
  int J_;
};

int profile_ell(const std::string& name) { return name == "weierstrass" ? 1 : 0; }

}  // namespace

std::shared_ptr<const SpatialProfile> make_profile(const std::string& name, int dim, int J) {
  if (name == "one") return std::make_shared<OneProfile>();
  if (name == "sine") return std::make_shared<SineProfile>(dim);
  if (name == "weierstrass") {
    if (J < 1 || J > 40) throw FamilyError("weierstrass profile: J must be in [1, 40]");
    return std::make_shared<WeierstrassProfile>(dim, J);
  }
  throw FamilyError("unknown spatial profile '" + name + "'");
}

int weierstrass_terms_for_grid(int n) {
  int J = 0;
  while ((2 << J) <= n / 3.0) ++J;
  return std::max(J, 1);
}

CoefficientField::CoefficientField(std::string family, int dim, std::vector<SeparableTerm> terms,
                                   FieldConstants constants)
    : family_(std::move(family)), dim_(dim), terms_(std::move(terms)), constants_(constants) {
  if (dim_ != 1 && dim_ != 2) throw FamilyError("coefficient field: dim must be 1 or 2");
}

bool CoefficientField::time_only() const {
  for (const auto& term : terms_)
    if (term.space->band().value_or(1) != 0) return false;
  return true;
}

double CoefficientField::scalar(double t, const Point& x, int order) const {
  double s = 0.0;
  for (const auto& term : terms_) {
    if (order > 0 && term.time->is_constant()) continue;
    s += term.time->eval(t, order) * term.space->eval(x);
  }
  return s;
}

CoefficientField::GridCache CoefficientField::cache_grid(const Grid& g, bool band_limit) const {
  GridCache cache{g, {}};
  for (const auto& term : terms_) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = term.space->eval(g.point(i));
    const auto band = term.space->band();
    if (band_limit && (!band || *band > g.dealias_limit())) {
      auto f = SpectralField::from_physical(g, v);
      f.dealias();
      v = f.physical();
    }
    cache.profiles.push_back(std::move(v));
  }
  return cache;
}

void CoefficientField::scalar_on_grid(double t, const GridCache& cache, int order, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < terms_.size(); ++r) {
    if (order > 0 && terms_[r].time->is_constant()) continue;
    const double c = terms_[r].time->eval(t, order);
    const auto& prof = cache.profiles[r];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * prof[i];
  }
}

CoefficientField make_family(const std::string& name, const FamilyParams& p) {
  if (p.dim != 1 && p.dim != 2) throw FamilyError("dim must be 1 or 2");
  const auto one = std::make_shared<OneProfile>();
  FieldConstants k;
  if (name == "constant") {
    if (!(p.c > 0.0)) throw FamilyError("constant: c must be positive");
    k.lambda0 = k.Lambda0 = p.c;
    k.osc = {0.0, 0.0, 0.0, 0.0, 0.0};
    k.T_final = p.T_final;
    return CoefficientField(name, p.dim, {{std::make_shared<ConstantTime>(p.c), one}}, k);
  }
  if (name == "yamazaki-osc") {
    if (p.rho < 0.0) throw FamilyError("yamazaki-osc: rho must be non-negative");
    const int J = p.J > 0 ? p.J : weierstrass_terms_for_grid(p.grid_n);
    const auto g = make_profile(p.profile, p.dim, J);
    const double amp = p.rho * g->sup_abs();
    if (!(p.m - amp > 0.0)) throw FamilyError("yamazaki-osc: rho * sup|g| >= m makes lambda0 <= 0");
    k.lambda0 = p.m - amp;
    k.Lambda0 = p.m + amp;
    k.ell = profile_ell(p.profile);
    if (auto* sine = dynamic_cast<const SineProfile*>(g.get())) {
      k.osc.C0 = p.rho * sine->lipschitz();
      k.osc.C2 = k.osc.C0;
    } else if (p.profile == "one") {
      k.osc.C0 = 0.0;
      k.osc.C2 = 0.0;
    }
    k.osc.C1 = amp;
    k.osc.C3 = std::sqrt(2.0) * amp;
    k.osc.graded = 0.5 * amp;
    k.T_final = p.T_final;
    return CoefficientField(name, p.dim,
                            {{std::make_shared<ConstantTime>(p.m), one}, {std::make_shared<LogSine>(p.rho), g}}, k);
  }
  if (name == "delta-osc") {
    if (p.delta < 0.0 || p.delta > 1.0) throw FamilyError("delta-osc: delta must lie in [0, 1]");
    if (p.rho < 0.0 || !(p.m - p.rho > 0.0)) throw FamilyError("delta-osc: need 0 <= rho < m");
    k.lambda0 = p.m - p.rho;
    k.Lambda0 = p.m + p.rho;
    k.delta = p.delta;
    k.osc.C0 = 0.0;
    k.osc.C2 = 0.0;
    if (p.delta == 0.0) {
      k.osc.C1 = p.rho;
      k.osc.C3 = std::sqrt(2.0) * p.rho;
      k.osc.graded = 0.5 * p.rho;
    } else {
      k.osc.graded = p.rho;
    }
    k.T_final = 1.0;
    return CoefficientField(
        name, p.dim, {{std::make_shared<ConstantTime>(p.m), one}, {std::make_shared<GradedOscillation>(p.rho, p.delta), one}},
        k);
  }
  if (name == "violator") {
    if (!(p.q > 1.0)) throw FamilyError("violator: q must exceed 1");
    if (p.rho < 0.0 || !(p.m - p.rho > 0.0)) throw FamilyError("violator: need 0 <= rho < m");
    k.lambda0 = p.m - p.rho;
    k.Lambda0 = p.m + p.rho;
    k.osc.C0 = 0.0;
    k.osc.C2 = 0.0;
    k.T_final = 1.0;
    return CoefficientField(
        name, p.dim, {{std::make_shared<ConstantTime>(p.m), one}, {std::make_shared<FastOscillation>(p.rho, p.q), one}}, k);
  }
  throw FamilyError("unknown coefficient family '" + name + "'");
}

std::vector<double> SamplingPlan::times() const {
  if (!(t_min > 0.0) || !(t_max > t_min)) throw std::invalid_argument("SamplingPlan: need 0 < t_min < t_max");
  const double decades = std::log10(t_max / t_min);
  const int count = std::max(2, int(std::ceil(decades * per_decade)) + 1);
  std::vector<double> ts(count);
  for (int i = 0; i < count; ++i) ts[i] = t_min * std::pow(10.0, decades * i / (count - 1));
  ts.back() = t_max;
  return ts;
}

std::vector<Point> SamplingPlan::points(int dim) const {
  // R2 low-discrepancy sequence with a seeded offset.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double off0 = uni(rng), off1 = uni(rng);
  const double a1 = dim == 1 ? 0.6180339887498949 : 0.7548776662466927;
  const double a2 = 0.5698402909980532;
  std::vector<Point> pts(x_samples);
  for (int i = 0; i < x_samples; ++i) {
    const double u = std::fmod(off0 + a1 * (i + 1), 1.0);
    const double v = std::fmod(off1 + a2 * (i + 1), 1.0);
    pts[i] = {kTwoPi * u, dim == 1 ? 0.0 : kTwoPi * v};
  }
  return pts;
}

namespace {

std::vector<Point> field_points(const CoefficientField& f, const SamplingPlan& plan) {
  if (f.time_only()) return {Point{0.0, 0.0}};
  return plan.points(f.dim());
}

}  // namespace

EllipticityReport check_ellipticity(const CoefficientField& field, const SamplingPlan& plan) {
  const auto ts = plan.times();
  const auto xs = field_points(field, plan);
  std::mt19937_64 rng(plan.seed + 17);
  std::normal_distribution<double> gauss;
  std::vector<std::array<double, 2>> dirs;
  for (int d = 0; d < std::max(1, plan.directions); ++d) {
    if (field.dim() == 1) {
      dirs.push_back({d % 2 == 0 ? 1.0 : -1.0, 0.0});
    } else {
      const double a = gauss(rng), b = gauss(rng), r = std::hypot(a, b);
      dirs.push_back({a / r, b / r});
    }
  }
  EllipticityReport rep{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const int n = field.dim();
  for (double t : ts)
    for (const auto& x : xs)
      for (const auto& xi : dirs) {
        double q = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) q += field.eval(t, x, j, k) * xi[j] * xi[k];
        if (!(q > 0.0))
          throw NonHyperbolicError("ellipticity: non-positive Rayleigh quotient at t=" + std::to_string(t));
        rep.lambda_min = std::min(rep.lambda_min, q);
        rep.lambda_max = std::max(rep.lambda_max, q);
      }
  return rep;
}

ModulusReport estimate_space_modulus(const CoefficientField& field, int ell, const SamplingPlan& plan, int halvings) {
  const auto ts = plan.times();
  const auto xs = plan.points(field.dim());
  const auto& terms = field.terms();
  // Time factors once; the spatial increments are then combined per (x, y).
  std::vector<std::vector<double>> tvals(terms.size(), std::vector<double>(ts.size()));
  for (std::size_t r = 0; r < terms.size(); ++r)
    for (std::size_t i = 0; i < ts.size(); ++i) tvals[r][i] = terms[r].time->eval(ts[i], 0);

  std::mt19937_64 rng(plan.seed + 29);
  std::normal_distribution<double> gauss;
  std::vector<std::array<double, 2>> dirs;
  if (field.dim() == 1) {
    dirs = {{1.0, 0.0}, {-1.0, 0.0}};
  } else {
    for (int d = 0; d < std::max(2, plan.directions); ++d) {
      const double a = gauss(rng), b = gauss(rng), r = std::hypot(a, b);
      dirs.push_back({a / r, b / r});
    }
  }

  ModulusReport rep;
  std::vector<double> incr(terms.size());
  for (int m = 1; m <= halvings; ++m) {
    const double y = std::ldexp(1.0, -m);
    const double denom = y * (ell == 1 ? std::log1p(1.0 / y) : 1.0);
    double best = 0.0;
    for (const auto& x : xs)
      for (const auto& d : dirs) {
        const Point xy{x[0] + y * d[0], x[1] + y * d[1]};
        for (std::size_t r = 0; r < terms.size(); ++r)
          incr[r] = terms[r].space->eval(xy) - terms[r].space->eval(x);
        for (std::size_t i = 0; i < ts.size(); ++i) {
          double diff = 0.0;
          for (std::size_t r = 0; r < terms.size(); ++r) diff += tvals[r][i] * incr[r];
          best = std::max(best, std::abs(diff));
        }
      }
    rep.steps.push_back(y);
    rep.per_step.push_back(best / denom);
    rep.sup = std::max(rep.sup, best / denom);
  }
  return rep;
}

namespace {

template <class Visit>
void visit_time_derivatives(const CoefficientField& field, const SamplingPlan& plan, Visit&& visit) {
  const auto ts = plan.times();
  const auto xs = field_points(field, plan);
  const auto& terms = field.terms();
  std::vector<std::vector<double>> prof(terms.size(), std::vector<double>(xs.size()));
  for (std::size_t r = 0; r < terms.size(); ++r)
    for (std::size_t j = 0; j < xs.size(); ++j) prof[r][j] = terms[r].space->eval(xs[j]);
  std::vector<double> d1(terms.size()), d2(terms.size());
  for (double t : ts) {
    for (std::size_t r = 0; r < terms.size(); ++r) {
      const bool c = terms[r].time->is_constant();
      d1[r] = c ? 0.0 : terms[r].time->eval(t, 1);
      d2[r] = c ? 0.0 : terms[r].time->eval(t, 2);
    }
    for (std::size_t j = 0; j < xs.size(); ++j) {
      double a1 = 0.0, a2 = 0.0;
      for (std::size_t r = 0; r < terms.size(); ++r) {
        a1 += d1[r] * prof[r][j];
        a2 += d2[r] * prof[r][j];
      }
      visit(t, a1, a2);
    }
  }
}

}  // namespace

OscillationReport check_oscillation_bounds(const CoefficientField& field, const SamplingPlan& plan) {
  const double delta = field.constants().delta.value_or(0.0);
  OscillationReport rep;
  visit_time_derivatives(field, plan, [&](double t, double a1, double a2) {
    const double logt = std::abs(std::log(t));
    rep.sup_t_dta = std::max(rep.sup_t_dta, std::abs(t * a1));
    rep.sup_t2_dtta = std::max(rep.sup_t2_dtta, std::abs(t * t * a2));
    rep.sup_graded = std::max(rep.sup_graded, std::abs(a1) * t / (1.0 + std::pow(logt, delta)));
  });
  return rep;
}

std::vector<double> oscillation_by_decade(const CoefficientField& field, const SamplingPlan& plan) {
  const int decades = int(std::ceil(std::log10(plan.t_max / plan.t_min) - 1e-12));
  std::vector<double> sup(std::max(decades, 1), 0.0);
  visit_time_derivatives(field, plan, [&](double t, double a1, double) {
    int d = int(std::floor(std::log10(plan.t_max / t) + 1e-12));
    d = std::clamp(d, 0, int(sup.size()) - 1);
    sup[d] = std::max(sup[d], std::abs(t * a1));
  });
  return sup;
}

}  // namespace oscillab
