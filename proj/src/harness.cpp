#include "oscillab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "oscillab/regularize.hpp"
#include "oscillab/solver.hpp"

namespace oscillab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Blocks below this share of the classical energy are left out of the sum;
// blocks below kRatioShare are left out of the equivalence ratio.
constexpr double kSumShare = 1e-10;
constexpr double kRatioShare = 1e-3;

constexpr double kNoLossTol = 0.05;
constexpr double kDriftTol = 0.02;
constexpr double kEquivalenceLimit = 20.0;
constexpr double kEquivalenceDrift = 0.2;
constexpr double kBoundedRatio = 10.0;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double get_num(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return kNaN;
  return j[key].get<double>();
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double xb = 0.0, yb = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xb += x[i];
    yb += y[i];
  }
  xb /= double(x.size());
  yb /= double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - xb) * (y[i] - yb);
    sxx += (x[i] - xb) * (x[i] - xb);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

struct BlockTotals {
  double e = 0.0;
  double e_cl = 0.0;
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = 0.0;
  double dt_const = 0.0;
};

BlockTotals block_totals(const WaveState& s, const BlockSymbols& symbols, const DyadicDecomposition& dec,
                         ParaMethod method) {
  std::vector<double> cl(dec.max_block() + 1);
  double sum_cl = 0.0;
  for (int mu = 0; mu <= dec.max_block(); ++mu) sum_cl += cl[mu] = classical_block_energy(s, mu, dec);
  BlockTotals out;
  for (int mu = 0; mu <= dec.max_block(); ++mu) {
    if (cl[mu] < kSumShare * sum_cl || cl[mu] == 0.0) continue;
    const auto b = block_energy(s, symbols, mu, dec, method);
    out.e += b.e_nu;
    out.e_cl += b.e_classical;
    if (cl[mu] >= kRatioShare * sum_cl) {
      const double r = b.e_nu / b.e_classical;
      out.ratio_min = std::min(out.ratio_min, r);
      out.ratio_max = std::max(out.ratio_max, r);
      out.dt_const = std::max(out.dt_const, b.dt_norm / std::sqrt(b.e_nu));
    }
  }
  return out;
}

/// Travelling wave cos(k (x0 - t)) at t = 0, k = 2^nu. Under A = Id every
/// part of the block energy is then constant in time.
WaveState block_data(const Grid& g, int nu, double t0) {
  const double k = std::ldexp(1.0, nu);
  return {t0, SpectralField::from_function(g, [k](double x0, double) { return std::cos(k * x0); }),
          SpectralField::from_function(g, [k](double x0, double) { return k * std::sin(k * x0); })};
}

void run_pde(const ExperimentConfig& cfg, const CoefficientField& field, RunReport& rep) {
  const Grid g{cfg.dim, cfg.N};
  const DyadicDecomposition dec(g);
  const auto& k = field.constants();

  BlockSymbols symbols = [&] {
    try {
      return BlockSymbols(field, g, rep.gamma0);
    } catch (const std::exception& e) {
      throw StageError("regularize", e.what());
    }
  }();
  const WaveOperator op(field, g);
  const auto times = sample_times(cfg.t0, cfg.t1, cfg.samples);
  IntegrateOptions opt;
  opt.dt_max = cfl_dt(cfg.N, k.Lambda0, cfg.cfl_safety);
  opt.rel_dt = cfg.rel_dt;
  // t0 is recorded before integrating.
  opt.sample_times.assign(times.begin() + 1, times.end());

  const int n_nu = cfg.nu_max - cfg.nu_min + 1;
  std::vector<std::vector<BlockTotals>> per_run(n_nu);
  std::vector<long> steps(n_nu, 0);
  std::vector<std::string> errors(n_nu);
  parallel_for(std::size_t(n_nu), [&](std::size_t i) {
    try {
      const int nu = cfg.nu_min + int(i);
      WaveState s = block_data(g, nu, cfg.t0);
      std::vector<BlockTotals> rows;
      const auto on_sample = [&](const WaveState& st) {
        rows.push_back(block_totals(st, symbols, dec, cfg.para_method()));
      };
      on_sample(s);
      const auto st = integrate(s, op, cfg.t1, opt, on_sample);
      steps[i] = st.steps;
      per_run[i] = std::move(rows);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw StageError("solve", e);

  EnergyLedger& L = rep.ledger;
  L.times = times;
  L.weights = EnergyWeights{cfg.theta, cfg.beta, cfg.K1};
  for (int i = 0; i < n_nu; ++i) L.nus.push_back(cfg.nu_min + i);
  L.samples.assign(times.size(), std::vector<BlockEnergySample>(n_nu));
  rep.eq_min = std::numeric_limits<double>::infinity();
  rep.eq_max = 0.0;
  for (int i = 0; i < n_nu; ++i) {
    if (per_run[i].size() != times.size()) throw StageError("energy", "sample count mismatch");
    const double e0 = per_run[i][0].e, c0 = per_run[i][0].e_cl;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const auto& b = per_run[i][ti];
      auto& s = L.samples[ti][i];
      s.nu = L.nus[i];
      s.t = times[ti];
      s.e_nu = b.e / e0;
      s.e_classical = b.e_cl / c0;
      rep.eq_min = std::min(rep.eq_min, b.ratio_min);
      rep.eq_max = std::max(rep.eq_max, b.ratio_max);
      rep.dt_constant = std::max(rep.dt_constant, b.dt_const);
    }
    rep.steps += steps[i];
  }
  rep.C_eq = std::max(rep.eq_max, 1.0 / rep.eq_min);

  try {
    rep.loss = fit_loss(L, cfg.nu_min, cfg.nu_max);
  } catch (const std::exception& e) {
    throw StageError("fit", e.what());
  }
  rep.envelope = fit_envelope(rep.loss);
  rep.sup_sigma = -std::numeric_limits<double>::infinity();
  for (double s : rep.loss.sigma) rep.sup_sigma = std::max(rep.sup_sigma, s);

  rep.checks.push_back({"equivalence", rep.C_eq <= kEquivalenceLimit, rep.C_eq, kEquivalenceLimit,
                        "e_nu / e_classical in [" + format_number(rep.eq_min) + ", " + format_number(rep.eq_max) + "]"});
  const double dt_limit = 10.0 * (1.0 + 1.0 / k.lambda0);
  rep.checks.push_back({"dt-bound", rep.dt_constant <= dt_limit, rep.dt_constant, dt_limit,
                        "||dt u_nu|| <= C e_nu^(1/2)"});
  if (cfg.ell == 0) {
    rep.checks.push_back({"no-loss", rep.sup_sigma <= kNoLossTol, rep.sup_sigma, kNoLossTol, "sup_t sigma(t)"});
  } else {
    const bool ok = std::isfinite(rep.envelope.beta_hat) && rep.envelope.max_excess <= kNoLossTol &&
                    rep.envelope.residual <= kNoLossTol;
    rep.checks.push_back({"linear-loss", ok, rep.envelope.max_excess, kNoLossTol,
                          "beta_hat = " + format_number(rep.envelope.beta_hat) +
                              ", residual = " + format_number(rep.envelope.residual)});
  }
}

void run_mode(const ExperimentConfig& cfg, const CoefficientField& field, RunReport& rep) {
  const int p = cfg.xi_per_octave;
  std::vector<double> xis;
  for (int e = cfg.xi_min_exp; e <= cfg.xi_max_exp; ++e)
    for (int i = 0; i < p; ++i) xis.push_back(std::exp2(e + (i + 0.5) / p - 0.5));
  rep.xi_samples.resize(xis.size());
  std::vector<std::string> errors(xis.size());
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : 1.0;
  rep.gamma0 = gamma;
  parallel_for(xis.size(), [&](std::size_t i) {
    try {
      rep.xi_samples[i] = mode_amplification(field, xis[i], cfg.t0, cfg.t1, gamma, cfg.mode_tol);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw StageError("solve", e);

  for (int e = cfg.xi_min_exp; e <= cfg.xi_max_exp; ++e) {
    double acc = 0.0;
    for (int i = 0; i < p; ++i) acc += std::log2(rep.xi_samples[std::size_t((e - cfg.xi_min_exp) * p + i)].amplification);
    rep.octaves.push_back(e);
    rep.octave_log2_amp.push_back(acc / p);
  }
  for (const auto& s : rep.xi_samples) rep.steps += s.steps;

  std::vector<double> x(rep.octaves.begin(), rep.octaves.end());
  rep.amp_exponent = ls_slope(x, rep.octave_log2_amp);
  const auto [lo, hi] = std::minmax_element(rep.octave_log2_amp.begin(), rep.octave_log2_amp.end());
  rep.amp_ratio = std::exp2(*hi - *lo);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i < 2) {
      rep.local_exponents.push_back(kNaN);
      continue;
    }
    rep.local_exponents.push_back(ls_slope({x[i - 2], x[i - 1], x[i]},
                                           {rep.octave_log2_amp[i - 2], rep.octave_log2_amp[i - 1], rep.octave_log2_amp[i]}));
  }

  if (cfg.family == "violator") {
    const double first = rep.local_exponents[2], last = rep.local_exponents.back();
    rep.checks.push_back({"growing-exponent", last > first, last, first, "local exponent at the top vs the bottom"});
  } else if (cfg.delta == 0.0) {
    rep.checks.push_back({"bounded-amplification", rep.amp_ratio <= kBoundedRatio, rep.amp_ratio, kBoundedRatio,
                          "max/min amplification across xi"});
  } else {
    const bool ok = std::isfinite(rep.amp_exponent) && rep.amp_exponent > 0.0;
    rep.checks.push_back({"positive-exponent", ok, rep.amp_exponent, 0.0, "slope of log2 amplification vs log2 xi"});
  }
}

}  // namespace

int thread_count() {
  if (const char* env = std::getenv("OSCILLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(thread_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<double> sample_times(double t0, double t1, int count) {
  if (!(t1 > t0) || count < 2) throw std::invalid_argument("sample_times: need t1 > t0 and count >= 2");
  std::vector<double> out{t0};
  const int n_log = (count - 1) / 2, n_lin = count - 1 - n_log;
  if (t0 > 0.0)
    for (int i = 1; i <= n_log; ++i) out.push_back(t0 * std::pow(t1 / t0, double(i) / n_log));
  for (int i = 1; i <= n_lin + (t0 > 0.0 ? 0 : n_log); ++i) {
    const int n = n_lin + (t0 > 0.0 ? 0 : n_log);
    out.push_back(t0 + (t1 - t0) * double(i) / n);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }),
            out.end());
  out.back() = t1;
  return out;
}

Gamma0Result search_gamma0(const CoefficientField& field, const ExperimentConfig& cfg,
                           std::span<const SpectralField> trials) {
  const Grid g{cfg.dim, std::min(cfg.N, cfg.gamma_grid)};
  const DyadicDecomposition dec(g);
  const auto cache = field.cache_grid(g, true);
  const double T = field.constants().T_final;
  std::vector<RegularizedCoefficient> regs;
  for (int nu = cfg.nu_min; nu <= cfg.nu_max; ++nu) regs.push_back(blend(field, BlockSymbols::block_eps(nu, T)));
  const std::vector<double> ts{cfg.t0, std::sqrt(std::max(cfg.t0, 1e-12) * cfg.t1), cfg.t1};
  const auto cases_for = [&](double gamma) {
    std::vector<PositivityCase> cases;
    for (const auto& reg : regs) {
      const SymbolEvaluator ev(reg, gamma);
      for (double t : ts)
        cases.push_back({ev.on_grid(t, cache, SymbolKind::alpha_inv_sqrt), ev.on_grid(t, cache, SymbolKind::w_symbol)});
    }
    return cases;
  };
  return find_gamma0(cases_for, trials, field.constants().lambda0, dec, cfg.gamma_max_exp);
}

XiSample mode_amplification(const CoefficientField& field, double xi, double t0, double t1, double gamma,
                            double tol) {
  const auto& k = field.constants();
  const auto a = [&](double t) { return field.scalar(t, Point{0.0, 0.0}, 0); };
  ModeOptions opt;
  opt.tol = tol;
  opt.Lambda0 = k.Lambda0;
  const Propagator P = mode_propagator(a, xi, t0, t1, opt);

  const RegularizedCoefficient reg = blend(field, std::min(1.0 / xi, 0.5 * k.T_final));
  const double g2 = gamma * gamma, bottom = g2 + xi * xi;
  // Rows map (v, v') to the two components of the block energy, plus |v|.
  const auto tarama = [&](double t) {
    const double s = reg.field.scalar(t, Point{0.0, 0.0}, 0), ds = reg.field.scalar(t, Point{0.0, 0.0}, 1);
    const double alpha = std::sqrt((g2 + s * xi * xi) / bottom);
    const double d = ds * (-0.25 * std::pow(alpha, -2.5) * xi * xi / bottom);
    return std::array<double, 4>{-d, 1.0 / std::sqrt(alpha), std::sqrt(alpha * bottom + 1.0), 0.0};
  };
  const auto classical = [&](double t) { return std::array<double, 4>{0.0, 1.0 / xi, std::sqrt(a(t)), 0.0}; };
  const auto gain = [&](const std::array<double, 4>& q1, const std::array<double, 4>& q0) {
    // sigma_max(Q1 M Q0^-1)^2
    const double det0 = q0[0] * q0[3] - q0[1] * q0[2];
    const std::array<double, 4> inv{q0[3] / det0, -q0[1] / det0, -q0[2] / det0, q0[0] / det0};
    auto mul = [](const std::array<double, 4>& x, const std::array<double, 4>& y) {
      return std::array<double, 4>{x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
                                   x[2] * y[1] + x[3] * y[3]};
    };
    const auto A = mul(mul(q1, P.m), inv);
    const double fro = A[0] * A[0] + A[1] * A[1] + A[2] * A[2] + A[3] * A[3];
    const double det = A[0] * A[3] - A[1] * A[2];
    return 0.5 * (fro + std::sqrt(std::max(0.0, fro * fro - 4.0 * det * det)));
  };
  XiSample out;
  out.xi = xi;
  out.amplification = gain(tarama(t1), tarama(t0));
  out.classical = gain(classical(t1), classical(t0));
  out.wronskian_drift = std::abs(P.wronskian() - 1.0);
  out.steps = P.steps;
  return out;
}

RunReport run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  try {
    validate_config(cfg);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    if (msg.rfind("config: ", 0) == 0) msg.erase(0, 8);
    throw StageError("config", msg);
  }
  RunReport rep;
  rep.name = cfg.name;
  rep.config_hash = config_hash(cfg);
  rep.config_text = serialize_config(cfg);
  rep.mode = cfg.mode;
  rep.family = cfg.family;
  rep.ell = cfg.ell;
  rep.N = cfg.N;

  CoefficientField field = make_family(cfg.family, cfg.family_params());
  const auto& k = field.constants();
  try {
    SamplingPlan plan;
    plan.t_min = std::max(cfg.t0, 1e-8);
    plan.t_max = cfg.t1;
    plan.per_decade = 40;
    plan.x_samples = 16;
    plan.seed = cfg.seed;
    const auto ell = check_ellipticity(field, plan);
    rep.checks.push_back({"ellipticity", ell.lambda_min >= k.lambda0 - 1e-12 && ell.lambda_max <= k.Lambda0 + 1e-12,
                          ell.lambda_min, k.lambda0,
                          "observed [" + format_number(ell.lambda_min) + ", " + format_number(ell.lambda_max) + "]"});
    if (k.osc.C1) {
      const auto osc = check_oscillation_bounds(field, plan);
      rep.checks.push_back({"oscillation", osc.sup_t_dta <= *k.osc.C1 + 1e-9, osc.sup_t_dta, *k.osc.C1, "sup |t dt a|"});
    }
  } catch (const std::exception& e) {
    throw StageError("coefficients", e.what());
  }

  if (cfg.mode == "pde") {
    if (cfg.gamma > 0.0) {
      rep.gamma0 = cfg.gamma;
    } else {
      try {
        const Grid gg{cfg.dim, std::min(cfg.N, cfg.gamma_grid)};
        const auto trials = random_trial_fields(gg, cfg.gamma_trials, cfg.seed);
        const auto res = search_gamma0(field, cfg, trials);
        rep.gamma0 = res.gamma0;
        rep.gamma_history = res.history;
      } catch (const std::exception& e) {
        throw StageError("gamma", e.what());
      }
    }
    run_pde(cfg, field, rep);
  } else {
    run_mode(cfg, field, rep);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.output_dir.empty()) write_outputs(rep, cfg.output_dir);
  return rep;
}

std::string report_to_json(const RunReport& r) {
  json j;
  j["schema"] = "oscillab-run v1";
  j["name"] = r.name;
  j["config_hash"] = r.config_hash;
  j["config"] = r.config_text;
  j["mode"] = r.mode;
  j["family"] = r.family;
  j["ell"] = r.ell;
  j["N"] = r.N;
  j["gamma0"] = num(r.gamma0);
  json hist = json::array();
  for (const auto& [g, q] : r.gamma_history) hist.push_back({{"gamma", g}, {"l2", num(q.l2)}, {"h1", num(q.h1)}});
  j["gamma_history"] = hist;
  if (r.mode == "pde") {
    j["C_eq"] = num(r.C_eq);
    j["equivalence"] = {{"min", num(r.eq_min)}, {"max", num(r.eq_max)}};
    j["dt_constant"] = num(r.dt_constant);
    j["sup_sigma"] = num(r.sup_sigma);
    j["beta_hat"] = num(r.envelope.beta_hat);
    j["envelope"] = {{"beta_hat", num(r.envelope.beta_hat)},
                     {"residual", num(r.envelope.residual)},
                     {"max_excess", num(r.envelope.max_excess)},
                     {"max_pair_slope", num(r.envelope.max_pair_slope)}};
    j["loss"] = {{"t", r.loss.times}, {"sigma", r.loss.sigma}, {"residual", r.loss.residual}};
  } else {
    json xs = json::array();
    for (const auto& s : r.xi_samples)
      xs.push_back({{"xi", s.xi},
                    {"amplification", num(s.amplification)},
                    {"classical", num(s.classical)},
                    {"wronskian_drift", num(s.wronskian_drift)},
                    {"steps", s.steps}});
    j["amplification"] = xs;
    json oc = json::array();
    for (std::size_t i = 0; i < r.octaves.size(); ++i)
      oc.push_back({{"log2_xi", r.octaves[i]},
                    {"log2_amplification", num(r.octave_log2_amp[i])},
                    {"local_exponent", num(r.local_exponents[i])}});
    j["octaves"] = oc;
    j["amplification_ratio"] = num(r.amp_ratio);
    j["amplification_exponent"] = num(r.amp_exponent);
  }
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", num(c.value)}, {"limit", num(c.limit)},
                      {"detail", c.detail}});
  j["checks"] = checks;
  j["pass"] = r.passed();
  j["wall_seconds"] = r.wall_seconds;
  j["steps"] = r.steps;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema", "") != "oscillab-run v1") throw std::invalid_argument("report: unknown schema");
  RunReport r;
  r.name = j.value("name", "");
  r.config_hash = j.value("config_hash", "");
  r.config_text = j.value("config", "");
  r.mode = j.value("mode", "");
  r.family = j.value("family", "");
  r.ell = j.value("ell", 0);
  r.N = j.value("N", 0);
  r.gamma0 = get_num(j, "gamma0");
  for (const auto& h : j.value("gamma_history", json::array()))
    r.gamma_history.emplace_back(h["gamma"].get<double>(), PositivityQuotients{get_num(h, "l2"), get_num(h, "h1")});
  if (r.mode == "pde") {
    r.C_eq = get_num(j, "C_eq");
    r.eq_min = get_num(j["equivalence"], "min");
    r.eq_max = get_num(j["equivalence"], "max");
    r.dt_constant = get_num(j, "dt_constant");
    r.sup_sigma = get_num(j, "sup_sigma");
    const auto& e = j["envelope"];
    r.envelope = {get_num(e, "beta_hat"), get_num(e, "residual"), get_num(e, "max_excess"), get_num(e, "max_pair_slope")};
    r.loss.times = j["loss"]["t"].get<std::vector<double>>();
    r.loss.sigma = j["loss"]["sigma"].get<std::vector<double>>();
    r.loss.residual = j["loss"]["residual"].get<std::vector<double>>();
  } else {
    for (const auto& s : j["amplification"])
      r.xi_samples.push_back({s["xi"].get<double>(), get_num(s, "amplification"), get_num(s, "classical"),
                              get_num(s, "wronskian_drift"), s.value("steps", 0L)});
    for (const auto& o : j["octaves"]) {
      r.octaves.push_back(o["log2_xi"].get<int>());
      r.octave_log2_amp.push_back(get_num(o, "log2_amplification"));
      r.local_exponents.push_back(get_num(o, "local_exponent"));
    }
    r.amp_ratio = get_num(j, "amplification_ratio");
    r.amp_exponent = get_num(j, "amplification_exponent");
  }
  for (const auto& c : j["checks"])
    r.checks.push_back({c["name"], c["pass"], get_num(c, "value"), get_num(c, "limit"), c.value("detail", "")});
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.steps = j.value("steps", 0L);
  return r;
}

RunReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("report: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

void write_outputs(const RunReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text(fs::path(dir) / "run.json", report_to_json(r));

  std::ostringstream ledger, summary;
  summary << kCsvHeader << '\n';
  if (r.mode == "pde") {
    write_ledger_csv(ledger, r.ledger);
    summary << "t,sigma,residual,envelope\n";
    for (std::size_t i = 0; i < r.loss.times.size(); ++i)
      summary << format_number(r.loss.times[i]) << ',' << format_number(r.loss.sigma[i]) << ','
              << format_number(r.loss.residual[i]) << ','
              << format_number(r.envelope.beta_hat * r.loss.times[i] + kNoLossTol) << '\n';
  } else {
    // Start and end energies per frequency; nu carries round(log2 xi).
    EnergyLedger L;
    const auto cfg = parse_config(r.config_text);
    const double t0 = cfg.t0, t1 = cfg.t1;
    L.times = {t0, t1};
    for (const auto& s : r.xi_samples) L.nus.push_back(int(std::lround(std::log2(s.xi))));
    L.samples.resize(2);
    for (const auto& s : r.xi_samples) {
      L.samples[0].push_back({int(std::lround(std::log2(s.xi))), t0, 1.0, 1.0, 0.0});
      L.samples[1].push_back({int(std::lround(std::log2(s.xi))), t1, s.amplification, s.classical, 0.0});
    }
    write_ledger_csv(ledger, L);
    summary << "xi,amplification,classical,wronskian_drift\n";
    for (const auto& s : r.xi_samples)
      summary << format_number(s.xi) << ',' << format_number(s.amplification) << ',' << format_number(s.classical)
              << ',' << format_number(s.wronskian_drift) << '\n';
  }
  write_text(fs::path(dir) / "ledger.csv", ledger.str());
  write_text(fs::path(dir) / "summary.csv", summary.str());
}

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("axis: expected key=v1,v2,...");
  SweepAxis a{spec.substr(0, eq), {}};
  std::string rest = spec.substr(eq + 1), item;
  std::istringstream in(rest);
  while (std::getline(in, item, ','))
    if (!item.empty()) a.values.push_back(item);
  ExperimentConfig probe;
  for (const auto& v : a.values) set_config_value(probe, a.key, v);
  return a;
}

std::vector<SweepCell> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> combos{{}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) continue;
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& c : combos)
      for (const auto& v : axis.values) {
        auto e = c;
        e.emplace_back(axis.key, v);
        next.push_back(std::move(e));
      }
    combos = std::move(next);
  }
  std::vector<SweepCell> cells(combos.size());
  const bool single = combos.size() == 1 && combos[0].empty();
  parallel_for(cells.size(), [&](std::size_t i) {
    SweepCell& cell = cells[i];
    cell.assignment = combos[i];
    try {
      ExperimentConfig cfg = base;
      for (const auto& [k, v] : combos[i]) set_config_value(cfg, k, v);
      if (!base.output_dir.empty() && !single)
        cfg.output_dir = (std::filesystem::path(base.output_dir) / ("cell-" + std::to_string(i))).string();
      cell.report = run(cfg);
    } catch (const StageError& e) {
      cell.stage = e.stage;
      cell.error = e.what();
    } catch (const std::exception& e) {
      cell.stage = "config";
      cell.error = e.what();
    }
  });
  if (!base.output_dir.empty()) {
    std::ostringstream s;
    write_sweep_summary(s, cells, axes);
    std::filesystem::create_directories(base.output_dir);
    write_text(std::filesystem::path(base.output_dir) / "summary.csv", s.str());
  }
  return cells;
}

void write_sweep_summary(std::ostream& out, const std::vector<SweepCell>& cells, const std::vector<SweepAxis>& axes) {
  out << kCsvHeader << "\ncell";
  for (const auto& a : axes)
    if (!a.values.empty()) out << ',' << a.key;
  out << ",status,stage,gamma0,C_eq,sup_sigma,beta_hat,amp_exponent,pass\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    out << i;
    for (const auto& [k, v] : c.assignment) out << ',' << v;
    if (c.report) {
      const auto& r = *c.report;
      const bool pde = r.mode == "pde";
      out << ",ok,," << format_number(r.gamma0) << ',' << (pde ? format_number(r.C_eq) : "") << ','
          << (pde ? format_number(r.sup_sigma) : "") << ',' << (pde ? format_number(r.envelope.beta_hat) : "") << ','
          << (pde ? "" : format_number(r.amp_exponent)) << ',' << (r.passed() ? "true" : "false") << '\n';
    } else {
      out << ",error," << c.stage << ",,,,,,false\n";
    }
  }
}

Criterion parse_criterion(const std::string& name) {
  if (name == "thm-2.1") return Criterion::thm_2_1;
  if (name == "thm-2.2") return Criterion::thm_2_2;
  if (name == "delta-family") return Criterion::delta_family;
  if (name == "equivalence") return Criterion::equivalence;
  throw std::invalid_argument("unknown criterion '" + name + "'");
}

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::thm_2_1: return "thm-2.1";
    case Criterion::thm_2_2: return "thm-2.2";
    case Criterion::delta_family: return "delta-family";
    case Criterion::equivalence: return "equivalence";
  }
  return "?";
}

TheoremCheck check_theorem(std::span<const RunReport> reports, Criterion which) {
  TheoremCheck out;
  const auto need = [&](bool ok, const std::string& msg) {
    if (!ok) throw CriterionMismatch(criterion_name(which) + ": " + msg);
  };
  const auto same_times = [](const RunReport& a, const RunReport& b) {
    if (a.loss.times.size() != b.loss.times.size()) return false;
    for (std::size_t i = 0; i < a.loss.times.size(); ++i)
      if (std::abs(a.loss.times[i] - b.loss.times[i]) > 1e-12 * std::max(1.0, a.loss.times[i])) return false;
    return true;
  };
  switch (which) {
    case Criterion::thm_2_1: {
      need(reports.size() == 1 || reports.size() == 2, "expects one report or an N-doubled pair");
      for (const auto& r : reports) need(r.mode == "pde", "expects pde reports");
      const auto& r = reports[0];
      out.details.push_back({"sup-sigma", r.sup_sigma <= kNoLossTol, r.sup_sigma, kNoLossTol, "sup_t sigma(t)"});
      out.margin = kNoLossTol - r.sup_sigma;
      if (reports.size() == 2) {
        need(same_times(r, reports[1]), "reports use different sample times");
        double drift = 0.0;
        for (std::size_t i = 0; i < r.loss.sigma.size(); ++i)
          drift = std::max(drift, std::abs(r.loss.sigma[i] - reports[1].loss.sigma[i]));
        out.details.push_back({"resolution-drift", drift <= kDriftTol, drift, kDriftTol, "max |sigma_N - sigma_2N|"});
        out.details.push_back({"sup-sigma-2N", reports[1].sup_sigma <= kNoLossTol, reports[1].sup_sigma, kNoLossTol,
                               "sup_t sigma(t) at 2N"});
        out.margin = std::min({out.margin, kDriftTol - drift, kNoLossTol - reports[1].sup_sigma});
      }
      break;
    }
    case Criterion::thm_2_2: {
      need(reports.size() == 1 || reports.size() == 2, "expects one report or an N-doubled pair");
      for (const auto& r : reports) {
        need(r.mode == "pde", "expects pde reports");
        const auto& e = r.envelope;
        const std::string tag = &r == &reports[0] ? "" : "-2N";
        out.details.push_back({"beta-finite" + tag, std::isfinite(e.beta_hat), e.beta_hat, kNaN, "fitted beta_hat"});
        out.details.push_back({"envelope" + tag, e.max_excess <= kNoLossTol, e.max_excess, kNoLossTol,
                               "max of sigma(t) - beta_hat t"});
        out.details.push_back({"residual" + tag, e.residual <= kNoLossTol, e.residual, kNoLossTol, "RMS fit residual"});
      }
      const auto& e = reports[0].envelope;
      out.margin = std::min(kNoLossTol - e.max_excess, kNoLossTol - e.residual);
      break;
    }
    case Criterion::delta_family: {
      need(reports.size() == 3, "expects reports for delta = 0, delta = 1 and the violator");
      for (const auto& r : reports) need(r.mode == "mode-ode", "expects mode-ode reports");
      need(reports[2].family == "violator", "third report must be the violator");
      const auto& d0 = reports[0];
      const auto& d1 = reports[1];
      const auto& v = reports[2];
      out.details.push_back({"delta0-bounded", d0.amp_ratio <= kBoundedRatio, d0.amp_ratio, kBoundedRatio,
                             "max/min amplification across xi"});
      const bool pos = std::isfinite(d1.amp_exponent) && d1.amp_exponent > 0.0;
      out.details.push_back({"delta1-exponent", pos, d1.amp_exponent, 0.0, "finite positive exponent"});
      const double top = v.local_exponents.back(), bottom = v.local_exponents[2];
      out.details.push_back({"violator-growing", top > bottom, top, bottom, "local exponent at the top vs the bottom"});
      out.details.push_back({"violator-dominates", top >= 2.0 * d1.amp_exponent, top, 2.0 * d1.amp_exponent,
                             "violator exponent at the top vs twice the delta = 1 exponent"});
      out.margin = std::min({kBoundedRatio - d0.amp_ratio, d1.amp_exponent, top - bottom, top - 2.0 * d1.amp_exponent});
      break;
    }
    case Criterion::equivalence: {
      need(reports.size() == 2, "expects a run and its N-doubled twin");
      for (const auto& r : reports) need(r.mode == "pde", "expects pde reports");
      const double a = reports[0].C_eq, b = reports[1].C_eq;
      const double drift = std::abs(b - a) / a;
      out.details.push_back({"C_eq-finite", std::isfinite(a) && std::isfinite(b), a, kNaN, "C_eq at N"});
      out.details.push_back({"C_eq-drift", drift <= kEquivalenceDrift, drift, kEquivalenceDrift,
                             "relative change of C_eq under N-doubling"});
      out.margin = kEquivalenceDrift - drift;
      break;
    }
  }
  out.pass = std::all_of(out.details.begin(), out.details.end(), [](const CheckResult& c) { return c.pass; });
  if (out.pass) {
    out.verdict = "pass";
  } else if ((which == Criterion::thm_2_1) && reports[0].ell == 1) {
    out.verdict = "loss present";
  } else {
    out.verdict = "fail";
  }
  return out;
}

std::vector<CheckResult> lp_selftest(int n, int fields, std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (int dim = 1; dim <= 2; ++dim) {
    const Grid g{dim, n};
    const DyadicDecomposition dec(g);
    double worst = 0.0;
    for_each_mode(g, [&](const Mode& m) {
      double s = 0.0;
      for (int j = 0; j <= dec.max_block(); ++j) s += dec.block_multiplier(j, m.kabs);
      worst = std::max(worst, std::abs(s - 1.0));
    });
    out.push_back({"partition-of-unity-" + std::to_string(dim) + "d", worst <= 1e-12, worst, 1e-12,
                   "max |chi + sum phi_j - 1| over grid frequencies"});
  }

  const Grid g{1, n};
  const DyadicDecomposition dec(g);
  const auto trials = random_trial_fields(g, fields, seed);
  double recon = 0.0, bern_up = 0.0, bern_down = 0.0;
  for (const auto& u : trials) {
    SpectralField sum(g);
    for (int j = 0; j <= dec.max_block(); ++j) {
      const SpectralField b = dec.block(u, j);
      sum += b;
      const double l2 = b.norm_l2();
      if (j == 0 || l2 == 0.0) continue;
      const double gr = b.grad_norm_l2();
      bern_up = std::max(bern_up, gr / (std::ldexp(1.0, j + 1) * l2));
      bern_down = std::max(bern_down, l2 / (std::ldexp(1.0, 1 - j) * gr));
    }
    recon = std::max(recon, (sum - u).norm_l2() / u.norm_l2());
  }
  out.push_back({"block-reconstruction", recon <= 1e-12, recon, 1e-12, "max ||sum_j Delta_j u - u|| / ||u||"});
  out.push_back({"bernstein-upper", bern_up <= 1.0, bern_up, 1.0, "max ||grad Delta_j u|| / (2^(j+1) ||Delta_j u||)"});
  out.push_back({"bernstein-lower", bern_down <= 1.0, bern_down, 1.0, "max ||Delta_j u|| 2^(j-1) / ||grad Delta_j u||"});

  double telescope = 0.0;
  const std::size_t probe = std::min<std::size_t>(trials.size(), 50);
  for (double gamma : {1.0, 2.0, 8.0, 64.0})
    for (std::size_t i = 0; i < probe; ++i) {
      const double c = 1.0 + 0.37 * double(i % 7);
      const auto sym = multiplication_symbol(g, std::vector<double>(g.size(), c));
      const auto tu = paraproduct(sym, trials[i], gamma, dec);
      telescope = std::max(telescope, (tu - c * trials[i]).norm_l2() / (c * trials[i].norm_l2()));
    }
  out.push_back({"constant-symbol", telescope <= 1e-12, telescope, 1e-12, "max ||T_c u - c u|| / ||c u||"});
  return out;
}

}  // namespace oscillab
