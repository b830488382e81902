#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oscillab/solver.hpp"
#include "support.hpp"

using namespace oscillab;

namespace {

CoefficientField identity(int dim = 1, double c = 1.0) {
  FamilyParams p;
  p.dim = dim;
  p.c = c;
  return make_family("constant", p);
}

/// d/dx of real samples through an explicit O(n^2) trigonometric sum.
std::vector<double> dense_derivative(const std::vector<double>& u) {
  const int n = int(u.size());
  std::vector<double> out(n, 0.0);
  for (int k = -n / 2 + 1; k < n / 2; ++k) {
    std::complex<double> c = 0.0;
    for (int j = 0; j < n; ++j) c += u[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / n);
    c /= double(n);
    for (int j = 0; j < n; ++j)
      out[j] += (std::complex<double>(0.0, k) * c * std::polar(1.0, 2.0 * std::numbers::pi * k * j / n)).real();
  }
  return out;
}

double rel_diff(const SpectralField& a, const SpectralField& b) { return (a - b).norm_l2() / b.norm_l2(); }

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("rhs of a single mode under the identity") {
    const Grid g{1, 64};
    const WaveOperator op(identity(), g);
    const auto u = testing::single_mode(g, 7);
    const auto r = rhs(WaveState{0.0, u, SpectralField(g)}, op);
    CHECK(rel_diff(r, -49.0 * u) <= 1e-14);
  }

  TEST_CASE("rhs in 2D") {
    const Grid g{2, 32};
    const WaveOperator op(identity(2, 3.0), g);
    const auto u = SpectralField::from_function(g, [](double x, double y) { return std::cos(2 * x + 3 * y); });
    const auto r = rhs(WaveState{0.0, u, SpectralField(g)}, op);
    CHECK(rel_diff(r, -39.0 * u) <= 1e-14);
  }

  TEST_CASE("rhs of cos x under a = 2 + sin x") {
    const Grid g{1, 64};
    const WaveOperator op(testing::static_field(2.0, 1.0), g);
    const auto u = testing::single_mode(g, 1);
    const auto r = rhs(WaveState{0.0, u, SpectralField(g)}, op);
    // d/dx((2 + sin x)(-sin x)) = -2 cos x - sin 2x
    const auto ex = SpectralField::from_function(g, [](double x, double) { return -2 * std::cos(x) - std::sin(2 * x); });
    CHECK(rel_diff(r, ex) <= 1e-13);
  }

  TEST_CASE("rhs matches dense differentiation") {
    const Grid g{1, 64};
    const WaveOperator op(testing::static_field(2.0, 1.0), g);
    const auto u = testing::random_band_field(g, 21, 8);
    const auto r = rhs(WaveState{0.0, u, SpectralField(g)}, op);
    auto du = dense_derivative(u.physical());
    for (int j = 0; j < g.n; ++j) du[j] *= 2.0 + std::sin(g.point(j)[0]);
    auto ex = SpectralField::from_physical(g, dense_derivative(du));
    ex.dealias();
    CHECK(rel_diff(r, ex) <= 1e-12);
  }

  TEST_CASE("forcing passes through") {
    const Grid g{1, 32};
    const WaveOperator op(identity(), g);
    const auto f = testing::random_band_field(g, 8, 1);
    const Forcing force = [&](double) { return f; };
    const auto r = rhs(WaveState{0.0, SpectralField(g), SpectralField(g)}, op, &force);
    CHECK(rel_diff(r, f) <= 1e-15);
  }

  TEST_CASE("RK4 returns after one period") {
    const Grid g{1, 64};
    const WaveOperator op(identity(), g);
    const int k = 5;
    WaveState s{0.0, testing::single_mode(g, k), SpectralField(g)};
    const auto u0 = s.u;
    const double period = 2.0 * std::numbers::pi / k, dt = period / 200.0;
    for (int i = 0; i < 200; ++i) s = step(s, op, dt);
    CHECK(rel_diff(s.u, u0) <= 1e-6);
    CHECK(s.ut.norm_l2() <= 1e-6 * k * u0.norm_l2());
  }

  TEST_CASE("RK4 global error ratio is about 16") {
    const Grid g{1, 32};
    const WaveOperator op(testing::static_field(2.0, 1.0), g);
    const auto u0 = testing::random_band_field(g, 4, 2);
    auto solve = [&](int n) {
      WaveState s{0.0, u0, SpectralField(g)};
      for (int i = 0; i < n; ++i) s = step(s, op, 1.0 / n);
      return s.u;
    };
    const auto ref = solve(1280);
    const double e1 = (solve(20) - ref).norm_l2(), e2 = (solve(40) - ref).norm_l2();
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(2.0 / 16.0));
  }

  TEST_CASE("zero state stays zero") {
    const Grid g{1, 32};
    const WaveOperator op(testing::static_field(2.0, 1.0), g);
    const auto s = step(WaveState{0.0, SpectralField(g), SpectralField(g)}, op, 0.01);
    CHECK(s.u.is_zero());
    CHECK(s.ut.is_zero());
    CHECK_THROWS(step(s, op, 0.0));
  }

  TEST_CASE("CFL step") {
    CHECK(cfl_dt(256, 1.0, 0.5) == doctest::Approx(0.5 / (256.0 / 3.0)).epsilon(1e-15));
    CHECK(cfl_dt(256, 1.0, 0.5) == doctest::Approx(5.859375e-3).epsilon(1e-12));
    CHECK(cfl_dt(256, 4.0, 0.5) == doctest::Approx(0.5 * cfl_dt(256, 1.0, 0.5)).epsilon(1e-15));
    CHECK_THROWS(cfl_dt(4, 1.0, 0.5));
    CHECK_THROWS(cfl_dt(64, 1.0, 1.5));
  }

  TEST_CASE("constant coefficient modes at the default step") {
    for (int dim = 1; dim <= 2; ++dim) {
      const Grid g{dim, 64};
      const double c = 2.0;
      const WaveOperator op(identity(dim, c), g);
      const int k = 2;
      WaveState s{0.0, SpectralField::from_function(g, [&](double x, double) { return std::cos(k * x); }), SpectralField(g)};
      IntegrateOptions opt;
      opt.dt_max = cfl_dt(g.n, c, 0.5);
      double worst = 0.0;
      opt.sample_times = {0.25, 0.5, 0.75};
      integrate(s, op, 1.0, opt, [&](const WaveState& st) {
        const auto ex = SpectralField::from_function(
            g, [&](double x, double) { return std::cos(std::sqrt(c) * k * st.t) * std::cos(k * x); });
        worst = std::max(worst, (st.u - ex).norm_l2() / ex.norm_l2() * std::abs(std::cos(std::sqrt(c) * k * st.t)));
      });
      const auto ex = SpectralField::from_function(
          g, [&](double x, double) { return std::cos(std::sqrt(c) * k * 1.0) * std::cos(k * x); });
      worst = std::max(worst, (s.u - ex).norm_l2() / testing::single_mode(g, k).norm_l2());
      CHECK(worst <= 1e-6);
      CHECK(s.t == 1.0);
    }
  }

  TEST_CASE("energy is conserved for time-independent coefficients") {
    const Grid g{1, 64};
    const WaveOperator op(testing::static_field(2.0, 1.0), g);
    WaveState s{0.0, testing::random_band_field(g, 12, 4), testing::random_band_field(g, 12, 5)};
    const double e0 = wave_energy(s, op);
    IntegrateOptions opt;
    opt.dt_max = cfl_dt(g.n, 3.0, 0.1);
    for (int i = 1; i <= 10; ++i) opt.sample_times.push_back(i / 10.0);
    double worst = 0.0;
    integrate(s, op, 1.0, opt, [&](const WaveState& st) { worst = std::max(worst, std::abs(wave_energy(st, op) / e0 - 1.0)); });
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("forward then backward returns") {
    FamilyParams p;
    p.profile = "sine";
    const Grid g{1, 64};
    const WaveOperator op(make_family("yamazaki-osc", p), g);
    WaveState s{0.1, testing::random_band_field(g, 10, 6), SpectralField(g)};
    const auto u0 = s.u;
    IntegrateOptions opt;
    opt.dt_max = cfl_dt(g.n, 2.5, 0.5);
    opt.rel_dt = 0.01;
    integrate(s, op, 1.0, opt);
    integrate(s, op, 0.1, opt);
    CHECK(rel_diff(s.u, u0) <= 1e-5);
    CHECK(s.t == 0.1);
  }

  TEST_CASE("integrate lands on sample times") {
    const Grid g{1, 16};
    const WaveOperator op(identity(), g);
    WaveState s{0.0, testing::single_mode(g, 1), SpectralField(g)};
    IntegrateOptions opt;
    opt.dt_max = 0.07;
    opt.sample_times = {0.1, 0.35, 0.5};
    std::vector<double> seen;
    const auto st = integrate(s, op, 0.5, opt, [&](const WaveState& w) { seen.push_back(w.t); });
    CHECK(seen == std::vector<double>{0.1, 0.35, 0.5});
    CHECK(st.steps >= 8);
  }

  TEST_CASE("mode ODE with constant coefficient") {
    const auto a = [](double) { return 4.0; };
    ModeOptions opt;
    opt.tol = 1e-10;
    opt.Lambda0 = 4.0;
    const double t1 = 2.0 * std::numbers::pi / 6.0;
    const auto tr = solve_mode(a, ModeState{3.0, 0.0, 1.0, 0.0}, t1, opt);
    CHECK(std::abs(tr.samples.back().v - 1.0) <= 1e-10 * 10);
    CHECK(tr.samples.back().t == t1);
    const auto P = mode_propagator(a, 3.0, 0.0, t1, opt);
    CHECK(std::abs(P.wronskian() - 1.0) <= 10 * opt.tol);
  }

  TEST_CASE("mode ODE Wronskian stays constant on an oscillating coefficient") {
    FamilyParams p;
    const auto field = make_family("delta-osc", p);
    const auto a = [&](double t) { return field.scalar(t, {0, 0}, 0); };
    ModeOptions opt;
    opt.tol = 1e-10;
    opt.Lambda0 = 2.5;
    const auto P = mode_propagator(a, 64.0, 1e-6, 1.0, opt);
    CHECK(std::abs(P.wronskian() - 1.0) <= 10 * opt.tol);
  }

  TEST_CASE("delta-osc energy ratio is bounded uniformly in xi") {
    FamilyParams p;
    p.delta = 0.0;
    const auto field = make_family("delta-osc", p);
    const auto a = [&](double t) { return field.scalar(t, {0, 0}, 0); };
    auto ratio = [&](double xi, double tol) {
      ModeOptions opt;
      opt.tol = tol;
      opt.Lambda0 = 2.5;
      const auto tr = solve_mode(a, ModeState{xi, 1e-6, 1.0, 0.0}, 1.0, opt);
      const auto& e = tr.samples.back();
      const double E0 = a(1e-6), E1 = e.vp * e.vp / (xi * xi) + a(1.0) * e.v * e.v;
      return E1 / E0;
    };
    double lo = 1e300, hi = 0.0;
    for (int e = 4; e <= 12; e += 2) {
      const double r = ratio(std::ldexp(1.0, e), 1e-10);
      CHECK(r == doctest::Approx(ratio(std::ldexp(1.0, e), 1e-12)).epsilon(1e-6));
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    MESSAGE("energy ratio range [" << lo << ", " << hi << "]");
    CHECK(hi / lo <= 10.0);
  }

  TEST_CASE("mode ODE reports step underflow") {
    const auto a = [](double t) { return t > 0.5 ? 1e40 : 1.0; };
    ModeOptions opt;
    try {
      solve_mode(a, ModeState{1.0, 0.1, 1.0, 0.0}, 1.0, opt);
      FAIL("expected underflow");
    } catch (const StepUnderflow& e) {
      // Steps are rejected at the jump.
      CHECK(e.reached_time == doctest::Approx(0.5).epsilon(1e-9));
      CHECK(e.reached_time <= 0.5);
    }
  }
}
