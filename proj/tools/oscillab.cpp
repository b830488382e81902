#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "oscillab/harness.hpp"
#include "oscillab/regularize.hpp"

using namespace oscillab;

namespace {

void print_checks(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    std::cout << (c.pass ? "  PASS " : "  FAIL ") << std::left << std::setw(22) << c.name << " value "
              << format_number(c.value) << " limit " << format_number(c.limit) << "  (" << c.detail << ")\n";
}

void print_report(const RunReport& r) {
  std::cout << r.name << " [" << r.mode << ", " << r.family << ", N=" << r.N << "] hash " << r.config_hash << "\n"
            << "  gamma0 " << format_number(r.gamma0) << ", " << r.steps << " steps, " << std::setprecision(3)
            << r.wall_seconds << " s\n";
  if (r.mode == "pde")
    std::cout << "  sup sigma " << format_number(r.sup_sigma) << ", beta_hat " << format_number(r.envelope.beta_hat)
              << ", C_eq " << format_number(r.C_eq) << "\n";
  else
    std::cout << "  amplification ratio " << format_number(r.amp_ratio) << ", exponent "
              << format_number(r.amp_exponent) << "\n";
  print_checks(r.checks);
}

/// Applies `key=value` overrides to a config.
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'", s);
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
}

int simulate(const std::string& path, const std::vector<std::string>& sets, const std::string& out) {
  auto cfg = load_config(path);
  apply_overrides(cfg, sets);
  if (!out.empty()) cfg.output_dir = out;
  const auto r = run(cfg);
  print_report(r);
  if (!cfg.output_dir.empty()) std::cout << "  artifacts in " << cfg.output_dir << "\n";
  return r.passed() ? 0 : 1;
}

int do_sweep(const std::string& path, const std::vector<std::string>& axis_specs, const std::vector<std::string>& sets,
             const std::string& out) {
  auto cfg = load_config(path);
  apply_overrides(cfg, sets);
  if (!out.empty()) cfg.output_dir = out;
  std::vector<SweepAxis> axes;
  for (const auto& a : axis_specs) axes.push_back(parse_axis(a));
  const auto cells = sweep(cfg, axes);
  write_sweep_summary(std::cout, cells, axes);
  bool ok = true;
  for (const auto& c : cells) ok = ok && c.report && c.report->passed();
  return ok ? 0 : 1;
}

int check(const std::vector<std::string>& paths, const std::string& criterion) {
  std::vector<RunReport> reports;
  for (const auto& p : paths) {
    const auto file = std::filesystem::is_directory(p) ? std::filesystem::path(p) / "run.json" : std::filesystem::path(p);
    reports.push_back(load_report(file.string()));
  }
  const auto res = check_theorem(reports, parse_criterion(criterion));
  std::cout << criterion << ": " << res.verdict << " (margin " << format_number(res.margin) << ")\n";
  print_checks(res.details);
  return res.pass ? 0 : 1;
}

int selftest(int n, int fields, std::uint64_t seed) {
  const auto res = lp_selftest(n, fields, seed);
  print_checks(res);
  for (const auto& c : res)
    if (!c.pass) return 1;
  return 0;
}

int coeff_audit(const std::string& family, const std::vector<std::string>& sets, int nu_max) {
  ExperimentConfig cfg;
  cfg.family = family;
  apply_overrides(cfg, sets);
  const auto field = make_family(cfg.family, cfg.family_params());
  const auto& k = field.constants();
  const auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("-"); };
  std::cout << "family " << family << " (dim " << field.dim() << ", ell " << k.ell << ")\n"
            << "declared: lambda0 " << format_number(k.lambda0) << ", Lambda0 " << format_number(k.Lambda0) << ", C0 "
            << opt(k.osc.C0) << ", C1 " << opt(k.osc.C1) << ", C2 " << opt(k.osc.C2) << ", C3 " << opt(k.osc.C3)
            << "\n";
  SamplingPlan plan;
  const auto e = check_ellipticity(field, plan);
  std::cout << "ellipticity: [" << format_number(e.lambda_min) << ", " << format_number(e.lambda_max) << "]\n";
  std::cout << "space modulus (ell = " << k.ell << "): " << format_number(estimate_space_modulus(field, k.ell, plan).sup)
            << "\n";
  const auto o = check_oscillation_bounds(field, plan);
  std::cout << "sup |t dt a| " << format_number(o.sup_t_dta) << ", sup |t^2 dtt a| " << format_number(o.sup_t2_dtta)
            << ", graded " << format_number(o.sup_graded) << "\n";
  std::cout << "regularized constants:\n  nu  C1  C3  f_nu(1)\n";
  for (int nu = 1; nu <= nu_max; ++nu) {
    const double eps = std::ldexp(1.0, -nu);
    if (eps > 0.5 * k.T_final) continue;
    const auto c = empirical_derivative_constants(blend(field, eps), plan);
    std::cout << "  " << nu << "  " << format_number(c.C1) << "  " << format_number(c.C3) << "  "
              << format_number(f_weight(nu, 1.0)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-loss experiments for wave equations with oscillating coefficients"};
  app.require_subcommand(1);

  std::string config, out, criterion;
  std::vector<std::string> sets, axes, reports;

  auto* sim = app.add_subcommand("simulate", "Run one experiment");
  sim->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--set", sets, "Override a key, key=value");
  sim->add_option("-o,--out", out, "Output directory");

  auto* sw = app.add_subcommand("sweep", "Run a Cartesian sweep");
  sw->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axes, "Axis, key=v1,v2,...");
  sw->add_option("--set", sets, "Override a key, key=value");
  sw->add_option("-o,--out", out, "Output directory");

  auto* ck = app.add_subcommand("check", "Evaluate a criterion on saved reports");
  ck->add_option("reports", reports, "run.json files or run directories")->required();
  ck->add_option("--criterion", criterion, "thm-2.1 | thm-2.2 | delta-family | equivalence")->required();

  int n = 256, fields = 1000;
  std::uint64_t seed = 7;
  auto* lp = app.add_subcommand("lp-selftest", "Littlewood-Paley property suite");
  lp->add_option("-n", n, "Grid size")->capture_default_str();
  lp->add_option("--fields", fields, "Random fields per property")->capture_default_str();
  lp->add_option("--seed", seed, "Random seed")->capture_default_str();

  std::string family;
  int nu_max = 10;
  auto* audit = app.add_subcommand("coeff-audit", "Empirical hypothesis constants of a family");
  audit->add_option("family", family, "constant | yamazaki-osc | delta-osc | violator")->required();
  audit->add_option("--set", sets, "Family parameter, key=value");
  audit->add_option("--nu-max", nu_max, "Largest block for regularized constants")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return simulate(config, sets, out);
    if (*sw) return do_sweep(config, axes, sets, out);
    if (*ck) return check(reports, criterion);
    if (*lp) return selftest(n, fields, seed);
    if (*audit) return coeff_audit(family, sets, nu_max);
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.stage << ": " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
