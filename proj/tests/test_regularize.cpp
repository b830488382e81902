#include <doctest.h>

#include <cmath>

#include "oscillab/regularize.hpp"

using namespace oscillab;

namespace {

CoefficientField yamazaki(const std::string& profile = "one") {
  FamilyParams p;
  p.m = 2.0;
  p.rho = 0.5;
  p.profile = profile;
  return make_family("yamazaki-osc", p);
}

double a_of(const CoefficientField& f, double t) { return f.scalar(t, {0.0, 0.0}, 0); }

}  // namespace

TEST_SUITE("regularize") {
  TEST_CASE("theta cutoff endpoints and monotonicity") {
    const auto th = cutoff_theta(1.0);
    CHECK(th(0.5) == 1.0);
    CHECK(th(2.0) == 0.0);
    const double mid = th(1.0);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    // mpmath: theta(1/3 + 1/12)
    CHECK(mid == doctest::Approx(0.81757447619364372170).epsilon(1e-14));
    double prev = 1.0 + 1e-12;
    for (int i = 0; i <= 100; ++i) {
      const double v = th(0.5 + 1.5 * i / 100.0);
      // Flat to machine precision near both ends.
      CHECK(v <= prev);
      if (i >= 10 && i <= 90) CHECK(v < prev);
      prev = v;
    }
    CHECK_THROWS(cutoff_theta(0.0));
  }

  TEST_CASE("truncation freezes below eps") {
    FamilyParams p;
    const auto a = make_family("delta-osc", p);
    const auto tr = truncate_time(a, 0.1);
    CHECK(a_of(tr, 0.05) == a_of(a, 0.1));
    CHECK(a_of(tr, 0.5) == a_of(a, 0.5));
    FamilyParams c;
    const auto one = truncate_time(make_family("constant", c), 0.25);
    CHECK(a_of(one, 0.01) == 1.0);
    CHECK_THROWS(truncate_time(a, 0.75));
  }

  TEST_CASE("mollification reproduces constants and the refined oracle") {
    FamilyParams c;
    c.c = 3.0;
    const auto cst = mollify_time(truncate_time(make_family("constant", c), 0.25), 0.25);
    CHECK(a_of(cst, 0.1) == 3.0);

    const double eps = std::ldexp(1.0, -6);
    const auto base = yamazaki();
    const auto mol = mollify_time(truncate_time(base, eps), eps);
    // mpmath quadrature of the convolution at t = 3 eps
    CHECK(a_of(mol, 3.0 * eps) == doctest::Approx(1.96056811497186917945).epsilon(1e-12));
    QuadSpec fine;
    fine.panels = 80;
    const auto ref = mollify_time(truncate_time(base, eps), eps, fine);
    CHECK(std::abs(a_of(mol, 3.0 * eps) - a_of(ref, 3.0 * eps)) <= 1e-9);
    // Kernel window straddles the kink at eps.
    CHECK(mol.scalar(eps, {0, 0}, 1) == doctest::Approx(-8.82283987778335325177).epsilon(1e-8));
  }

  TEST_CASE("mollification of a linear function is exact at the centre") {
    FamilyParams p;
    p.delta = 0.0;
    const auto a = make_family("delta-osc", p);
    // Far from the kinks a smooth profile is nearly linear on a tiny window.
    const double eps = 1e-6;
    const auto mol = mollify_time(truncate_time(a, eps), eps);
    CHECK(std::abs(a_of(mol, 0.5) - a_of(a, 0.5)) < 1e-12);
  }

  TEST_CASE("quadrature needs at least 64 nodes") {
    QuadSpec coarse;
    coarse.panels = 2;
    CHECK_THROWS_AS(mollify_time(truncate_time(yamazaki(), 0.1), 0.1, coarse), QuadratureError);
  }

  TEST_CASE("blend: exact regions and interior oracle values") {
    FamilyParams c;
    const auto one = blend(make_family("constant", c), 0.25);
    for (double t : {-1.0, 0.01, 0.2, 0.7, 2.0}) CHECK(one.eval(t, {0, 0}, 0, 0) == 1.0);

    const auto base = yamazaki("sine");
    const double eps = std::ldexp(1.0, -4);
    const auto reg = blend(base, eps);
    for (double x : {0.1, 1.3, 4.0}) {
      CHECK(reg.eval(0.25, {x, 0}, 0, 0) == base.eval(0.25, {x, 0}, 0, 0));
      CHECK(std::abs(reg.eval(eps / 2, {x, 0}, 0, 0) - base.eval(eps, {x, 0}, 0, 0)) <= 1e-10);
      CHECK(reg.eval(-3.0, {x, 0}, 0, 0) == base.eval(eps, {x, 0}, 0, 0));
      CHECK(reg.eval(5.0, {x, 0}, 0, 0) == base.eval(1.0, {x, 0}, 0, 0));
    }

    // mpmath oracle for g = 1, eps = 2^-6
    const auto reg1 = blend(yamazaki(), std::ldexp(1.0, -6));
    const double e6 = std::ldexp(1.0, -6);
    CHECK(a_of(reg1.field, e6) == doctest::Approx(2.40663216653288290755).epsilon(1e-12));
    CHECK(a_of(reg1.field, 0.75 * e6) == doctest::Approx(2.42363972185861991331).epsilon(1e-12));
    CHECK(a_of(reg1.field, 1.25 * e6) == doctest::Approx(2.35545958617225531590).epsilon(1e-12));
    CHECK(a_of(reg1.field, 1.75 * e6) == doctest::Approx(2.22094334536613905693).epsilon(1e-12));
  }

  TEST_CASE("blend derivatives match finite differences") {
    const auto reg = blend(yamazaki(), std::ldexp(1.0, -5));
    const double eps = reg.eps;
    for (double t : {0.6 * eps, 0.9 * eps, 1.1 * eps, 1.5 * eps, 1.9 * eps}) {
      const double h = eps * 1e-5;
      const double d1 = (a_of(reg.field, t + h) - a_of(reg.field, t - h)) / (2 * h);
      const double d2 = (reg.field.scalar(t + h, {0, 0}, 1) - reg.field.scalar(t - h, {0, 0}, 1)) / (2 * h);
      CHECK(reg.field.scalar(t, {0, 0}, 1) == doctest::Approx(d1).epsilon(1e-6));
      CHECK(reg.field.scalar(t, {0, 0}, 2) == doctest::Approx(d2).epsilon(1e-5));
    }
  }

  TEST_CASE("ellipticity and modulus are preserved") {
    const auto base = yamazaki("sine");
    SamplingPlan plan;
    plan.per_decade = 30;
    plan.x_samples = 34;
    const double base_mod = estimate_space_modulus(base, 0, plan, 12).sup;
    for (int nu = 1; nu <= 10; ++nu) {
      const auto reg = blend(base, std::ldexp(1.0, -nu));
      const auto e = check_ellipticity(reg.field, plan);
      CHECK(e.lambda_min >= base.constants().lambda0 - 1e-12);
      CHECK(e.lambda_max <= base.constants().Lambda0 + 1e-12);
      CHECK(estimate_space_modulus(reg.field, 0, plan, 12).sup <= 2.0 * base_mod);
    }
  }

  TEST_CASE("derivative constants are uniform in nu") {
    const auto base = yamazaki("sine");
    SamplingPlan plan;
    plan.per_decade = 100;
    plan.x_samples = 8;
    const double C1 = *base.constants().osc.C1, C3 = *base.constants().osc.C3;
    double lo = 1e300, hi = 0.0;
    for (int nu = 1; nu <= 10; ++nu) {
      const auto c = empirical_derivative_constants(blend(base, std::ldexp(1.0, -nu)), plan);
      CHECK(c.C1 / C1 <= 10.0);
      CHECK(c.C3 / C3 <= 10.0);
      lo = std::min({lo, c.C1 / C1, c.C3 / C3});
      hi = std::max({hi, c.C1 / C1, c.C3 / C3});
    }
    CHECK(hi / lo <= 10.0);
  }

  TEST_CASE("phi envelope") {
    const auto p = phi(1.0);
    CHECK(p(0.4) == 0.0);
    CHECK(p(2.0) == 0.5);
    for (int nu = 0; nu <= 12; ++nu) {
      const auto q = phi(std::ldexp(1.0, -nu));
      for (double t = 1e-5; t <= 1.0; t *= 1.07) {
        CHECK(q(t) * std::ldexp(1.0, -nu) <= 2.0);
        CHECK(q(t) <= 1.0 / t + 1e-15);
      }
    }
    // C2: the second-derivative jump across each ramp end shrinks linearly with the offset.
    const double h = 1e-5;
    for (double t : {0.5, 0.625}) {
      auto dd = [&](double s) { return (p(s + h) - 2 * p(s) + p(s - h)) / (h * h); };
      const double wide = std::abs(dd(t + 1e-2) - dd(t - 1e-2)), narrow = std::abs(dd(t + 1e-3) - dd(t - 1e-3));
      CHECK(narrow < 0.2 * wide + 1e-3);
    }
  }

  TEST_CASE("f weight values and bound") {
    CHECK(f_weight(3, 0.0) == 0.0);
    // Beyond t = 2^-2 the indicator is spent and phi^2 = 1/t^2.
    CHECK(f_weight(3, 1.0) - f_weight(3, 0.5) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(f_weight(3, 0.25) - f_weight(3, 0.125) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(f_weight(3, 1.0) == doctest::Approx(3.61300728365272228728).epsilon(1e-12));
    CHECK(f_weight(0, 1.0) == doctest::Approx(1.73800728365272228728).epsilon(1e-12));
    CHECK(f_weight(1, 1.0) == doctest::Approx(3.23800728365272228728).epsilon(1e-12));
    CHECK(f_weight(5, 1.0) == doctest::Approx(3.70675728365272228728).epsilon(1e-12));
    CHECK(f_weight(12, 1.0) == doctest::Approx(3.73776314302772228728).epsilon(1e-12));
    for (int nu = 0; nu <= 12; ++nu) {
      double prev = 0.0;
      for (double t = 0.0; t <= 1.0; t += 1.0 / 64) {
        const double f = f_weight(nu, t);
        CHECK(f >= prev);
        CHECK(f <= 4.0);
        prev = f;
      }
    }
    // The phi^2 term alone for nu = 3, t = 1 stays below 2.
    CHECK(f_weight(3, 1.0) - 2.0 < 2.0);
  }
}
