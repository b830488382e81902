// Acceptance suite: one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "oscillab/harness.hpp"
#include "oscillab/regularize.hpp"
#include "oscillab/solver.hpp"

using namespace oscillab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void add(const std::string& what, bool ok, double value, double limit) {
    pass = pass && ok;
    std::ostringstream s;
    s << (ok ? "ok   " : "FAIL ") << what << ": " << format_number(value);
    if (!std::isnan(limit)) s << " (limit " << format_number(limit) << ")";
    lines.push_back(s.str());
  }
  void add(const CheckResult& c, const std::string& prefix = "") {
    add(prefix + c.name + " [" + c.detail + "]", c.pass, c.value, c.limit);
  }
  void note(const std::string& s) { lines.push_back("     " + s); }
};

struct Context {
  fs::path configs;
  fs::path out;
};

ExperimentConfig config(const Context& ctx, const std::string& name, const std::vector<std::string>& sets = {}) {
  auto cfg = load_config((ctx.configs / (name + ".cfg")).string());
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!ctx.out.empty()) cfg.output_dir = (ctx.out / (cfg.name + "-N" + std::to_string(cfg.N))).string();
  return cfg;
}

void add_theorem(Outcome& o, std::span<const RunReport> reports, Criterion c) {
  const auto res = check_theorem(reports, c);
  for (const auto& d : res.details) o.add(d);
  o.note("verdict " + res.verdict + ", margin " + format_number(res.margin));
  o.pass = o.pass && res.pass;
}

Outcome lp_suite(const Context&) {
  Outcome o;
  for (const auto& c : lp_selftest(256, 1000, 7)) o.add(c);
  return o;
}

Outcome positivity(const Context&) {
  Outcome o;
  for (int ell = 0; ell <= 1; ++ell) {
    ExperimentConfig cfg;
    cfg.family = "yamazaki-osc";
    cfg.profile = ell == 0 ? "sine" : "weierstrass";
    cfg.ell = ell;
    cfg.theta = ell == 0 ? 0.0 : 0.1;
    cfg.N = 256;
    cfg.nu_min = 2;
    cfg.nu_max = 6;
    const auto field = make_family(cfg.family, cfg.family_params());
    const Grid g{1, 256};
    const DyadicDecomposition dec(g);
    const std::string tag = "ell=" + std::to_string(ell) + " ";
    const auto trials = random_trial_fields(g, cfg.gamma_trials, cfg.seed);
    Gamma0Result res;
    try {
      res = search_gamma0(field, cfg, trials);
    } catch (const Gamma0Error& e) {
      o.add(tag + "gamma0 search [" + e.what() + "]", false, e.worst_quotient, field.constants().lambda0 / 2);
      continue;
    }
    o.add(tag + "gamma0 [finite, <= 2^10]", std::isfinite(res.gamma0) && res.gamma0 <= 1024.0, res.gamma0, 1024.0);

    // Both quotients on fresh fields at gamma0, over the same blocks and times.
    const auto fresh = random_trial_fields(g, 1000, cfg.seed + 1000);
    const auto cache = field.cache_grid(g, true);
    std::vector<PositivityCase> cases;
    for (int nu = cfg.nu_min; nu <= cfg.nu_max; ++nu) {
      const SymbolEvaluator ev(blend(field, BlockSymbols::block_eps(nu, 1.0)), res.gamma0);
      for (double t : {cfg.t0, std::sqrt(cfg.t0 * cfg.t1), cfg.t1})
        cases.push_back({ev.on_grid(t, cache, SymbolKind::alpha_inv_sqrt), ev.on_grid(t, cache, SymbolKind::w_symbol)});
    }
    const auto q = positivity_quotients(cases, fresh, res.gamma0, dec);
    const double half = field.constants().lambda0 / 2;
    o.add(tag + "L2 quotient on 1000 fresh fields [>= lambda0/2]", q.l2 >= half, q.l2, half);
    o.add(tag + "H1 quotient on 1000 fresh fields [>= lambda0/2]", q.h1 >= half, q.h1, half);
  }
  return o;
}

Outcome regularization(const Context&) {
  Outcome o;
  FamilyParams p;
  p.profile = "sine";
  const auto base = make_family("yamazaki-osc", p);
  const auto& k = base.constants();
  SamplingPlan plan;
  plan.per_decade = 100;
  plan.x_samples = 8;
  const auto xs = plan.points(1);

  double exact = 0.0;
  double lam_min = 1e300, lam_max = 0.0;
  double lo = 1e300, hi = 0.0, worst1 = 0.0, worst3 = 0.0;
  for (int nu = 1; nu <= 10; ++nu) {
    const double eps = std::ldexp(1.0, -nu);
    const auto reg = blend(base, eps);
    for (const auto& x : xs) {
      for (double t : {2.0 * eps, 3.0 * eps, 0.5, 1.0})
        if (t >= 2.0 * eps && t <= 1.0) exact = std::max(exact, std::abs(reg.field.scalar(t, x) - base.scalar(t, x)));
      for (double t : {0.0, 0.25 * eps, 0.5 * eps})
        exact = std::max(exact, std::abs(reg.field.scalar(t, x) - base.scalar(eps, x)));
    }
    const auto e = check_ellipticity(reg.field, plan);
    lam_min = std::min(lam_min, e.lambda_min);
    lam_max = std::max(lam_max, e.lambda_max);
    const auto c = empirical_derivative_constants(reg, plan);
    const double r1 = c.C1 / *k.osc.C1, r3 = c.C3 / *k.osc.C3;
    worst1 = std::max(worst1, r1);
    worst3 = std::max(worst3, r3);
    lo = std::min({lo, r1, r3});
    hi = std::max({hi, r1, r3});
  }
  o.add("exact-region identities", exact <= 1e-10, exact, 1e-10);
  o.add("lambda_min of a_eps over nu <= 10", lam_min >= k.lambda0 - 1e-12, lam_min, k.lambda0);
  o.add("lambda_max of a_eps over nu <= 10", lam_max <= k.Lambda0 + 1e-12, lam_max, k.Lambda0);
  o.add("C1 ratio to the declared constant", worst1 <= 10.0, worst1, 10.0);
  o.add("C3 ratio to the declared constant", worst3 <= 10.0, worst3, 10.0);
  o.add("ratio spread across nu", hi / lo <= 10.0, hi / lo, 10.0);
  double fmax = 0.0;
  for (int nu = 0; nu <= 12; ++nu) fmax = std::max(fmax, f_weight(nu, 1.0));
  o.add("max f_nu(1) over nu <= 12", fmax <= 4.0, fmax, 4.0);
  return o;
}

Outcome equivalence(const Context& ctx) {
  Outcome o;
  std::vector<RunReport> reps;
  for (const char* n : {"1024", "2048"}) {
    reps.push_back(run(config(ctx, "equivalence", {std::string("N=") + n})));
    for (const auto& c : reps.back().checks)
      if (c.name == "equivalence") o.add(c, std::string("N=") + n + " ");
  }
  add_theorem(o, reps, Criterion::equivalence);
  return o;
}

Outcome no_loss(const Context& ctx) {
  Outcome o;
  std::vector<RunReport> reps;
  for (const char* n : {"4096", "8192"}) {
    reps.push_back(run(config(ctx, "thm21", {std::string("N=") + n})));
    o.note(std::string("N=") + n + ": sup sigma " + format_number(reps.back().sup_sigma) + ", " +
           format_number(reps.back().wall_seconds) + " s");
  }
  add_theorem(o, reps, Criterion::thm_2_1);
  return o;
}

Outcome linear_loss(const Context& ctx) {
  Outcome o;
  const std::vector<RunReport> reps{run(config(ctx, "thm22"))};
  o.note("beta_hat " + format_number(reps[0].envelope.beta_hat) + ", max pair slope " +
         format_number(reps[0].envelope.max_pair_slope));
  add_theorem(o, reps, Criterion::thm_2_2);
  return o;
}

Outcome delta_family(const Context& ctx) {
  Outcome o;
  std::vector<RunReport> reps;
  for (const char* n : {"delta0", "delta1", "violator"}) {
    reps.push_back(run(config(ctx, n)));
    o.note(std::string(n) + ": ratio " + format_number(reps.back().amp_ratio) + ", exponent " +
           format_number(reps.back().amp_exponent) + ", top local exponent " +
           format_number(reps.back().local_exponents.back()));
  }
  add_theorem(o, reps, Criterion::delta_family);
  return o;
}

Outcome solver_oracles(const Context&) {
  Outcome o;
  FamilyParams unit;
  const auto identity = make_family("constant", unit);

  // Constant coefficient: cos(k x) cos(k t) at the default step.
  {
    const Grid g{1, 64};
    const WaveOperator op(identity, g);
    double worst = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const auto mode = [&](double t) {
        return SpectralField::from_function(g, [&](double x, double) { return std::cos(k * x) * std::cos(k * t); });
      };
      WaveState s{0.0, mode(0.0), SpectralField(g)};
      IntegrateOptions opt;
      opt.dt_max = cfl_dt(g.n, 1.0, 0.5);
      integrate(s, op, 1.0, opt);
      worst = std::max(worst, (s.u - mode(1.0)).norm_l2() / mode(0.0).norm_l2());
    }
    o.add("constant-coefficient mode error, k = 1..3", worst <= 1e-6, worst, 1e-6);
  }

  // Time-independent coefficient 2 + sin x.
  {
    FieldConstants kc;
    kc.lambda0 = 1.0;
    kc.Lambda0 = 3.0;
    struct One final : TimeProfile {
      double v;
      explicit One(double x) : v(x) {}
      double eval(double, int order) const override { return order == 0 ? v : 0.0; }
      bool is_constant() const override { return true; }
    };
    const auto field = CoefficientField(
        "static", 1,
        {{std::make_shared<One>(2.0), make_profile("one", 1, 0)}, {std::make_shared<One>(1.0), make_profile("sine", 1, 0)}},
        kc);
    const Grid g{1, 64};
    const WaveOperator op(field, g);
    WaveState s{0.0, SpectralField::from_function(g, [](double x, double) { return std::cos(3 * x) + 0.5 * std::sin(x); }),
                SpectralField(g)};
    const double e0 = wave_energy(s, op);
    IntegrateOptions opt;
    opt.dt_max = cfl_dt(g.n, 3.0, 0.1);
    for (int i = 1; i <= 10; ++i) opt.sample_times.push_back(i / 10.0);
    double worst = 0.0;
    integrate(s, op, 1.0, opt, [&](const WaveState& st) { worst = std::max(worst, std::abs(wave_energy(st, op) / e0 - 1.0)); });
    o.add("energy drift, time-independent coefficient", worst <= 1e-6, worst, 1e-6);

    // Step-halving ratio of RK4 errors against a fine reference.
    const auto solve = [&](int steps) {
      WaveState w{0.0, SpectralField::from_function(g, [](double x, double) { return std::cos(2 * x); }), SpectralField(g)};
      IntegrateOptions io;
      io.dt_max = 1.0 / steps;
      integrate(w, op, 1.0, io);
      return w.u;
    };
    const auto ref = solve(1280);
    const double e1 = (solve(40) - ref).norm_l2(), e2 = (solve(80) - ref).norm_l2();
    o.add("RK4 error ratio under step halving [16 +- 2]", std::abs(e1 / e2 - 16.0) <= 2.0, e1 / e2, 16.0);
  }

  // Wronskian of the mode ODE on every time-only family.
  {
    const double tol = 1e-10;
    double worst = 0.0;
    for (const char* fam : {"delta-osc", "violator"})
      for (double delta : {0.0, 1.0}) {
        if (std::string(fam) == "violator" && delta > 0.0) continue;
        FamilyParams p;
        p.m = 1.0;
        p.rho = 0.9;
        p.delta = delta;
        const auto field = make_family(fam, p);
        const auto a = [&](double t) { return field.scalar(t, Point{0.0, 0.0}, 0); };
        for (int e : {4, 8, 12}) {
          ModeOptions mo;
          mo.tol = tol;
          mo.Lambda0 = field.constants().Lambda0;
          const auto P = mode_propagator(a, std::ldexp(1.0, e), 1e-6, 1.0, mo);
          worst = std::max(worst, std::abs(P.wronskian() - 1.0));
        }
      }
    o.add("Wronskian drift, xi = 2^4, 2^8, 2^12 [<= 10 tol]", worst <= 10 * tol, worst, 10 * tol);
  }
  return o;
}

struct Criterion_ {
  std::string name;
  double budget_s;
  std::function<Outcome(const Context&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Context ctx;
  std::string configs = OSCILLAB_CONFIG_DIR, out;
  std::vector<std::string> only;
  app.add_option("--configs", configs, "Directory holding the experiment configs")->capture_default_str();
  app.add_option("--out", out, "Write run artifacts here");
  app.add_option("--only", only, "Run only the named criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.configs = configs;
  ctx.out = out;

  const std::vector<Criterion_> all{
      {"lp-selftest", 30, lp_suite},
      {"positivity", 300, positivity},
      {"regularization", 120, regularization},
      {"energy-equivalence", 600, equivalence},
      {"no-loss", 1200, no_loss},
      {"linear-loss", 1200, linear_loss},
      {"delta-trichotomy", 600, delta_family},
      {"solver-oracles", 600, solver_oracles},
  };

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("FAIL exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.add("runtime seconds", secs <= c.budget_s, secs, c.budget_s);
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << "\n";
    for (const auto& l : o.lines) std::cout << "       " << l << "\n";
    std::cout.flush();
    if (!o.pass) ++failed;
  }
  std::cout << (failed == 0 ? "all " : "") << ran - failed << " of " << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
