#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oscillab/harness.hpp"

using namespace oscillab;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("oscillab-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

ExperimentConfig smoke_config() {
  ExperimentConfig c;
  c.name = "smoke";
  c.family = "constant";
  c.N = 64;
  c.nu_min = 0;
  c.nu_max = 4;
  c.t0 = 0.0;
  c.t1 = 0.5;
  c.samples = 8;
  c.gamma = 1.0;
  return c;
}

RunReport pde_report(double sup_sigma, std::vector<double> sigma) {
  RunReport r;
  r.mode = "pde";
  r.sup_sigma = sup_sigma;
  for (std::size_t i = 0; i < sigma.size(); ++i) r.loss.times.push_back(0.1 * double(i));
  r.loss.sigma = std::move(sigma);
  return r;
}

RunReport mode_report(std::string family, double ratio, double exponent, std::vector<double> local) {
  RunReport r;
  r.mode = "mode-ode";
  r.family = std::move(family);
  r.amp_ratio = ratio;
  r.amp_exponent = exponent;
  r.local_exponents = std::move(local);
  return r;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config text round-trips") {
    ExperimentConfig c;
    c.family = "yamazaki-osc";
    c.theta = 0.125;
    c.rho = 0.3;
    c.output_dir = "out";
    const auto back = parse_config(serialize_config(c));
    CHECK(serialize_config(back) == serialize_config(c));
    CHECK(back.theta == 0.125);
    CHECK(config_hash(back) == config_hash(c));
    // The output directory does not change the hash.
    auto moved = c;
    moved.output_dir = "elsewhere";
    CHECK(config_hash(moved) == config_hash(c));
    moved.rho = 0.31;
    CHECK(config_hash(moved) != config_hash(c));
  }

  TEST_CASE("config parser rejects bad input") {
    CHECK_THROWS_AS(parse_config("thetta = 0.1\n"), ConfigError);
    try {
      parse_config("# comment\nN = 64\nthetta = 0.1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key == "thetta");
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("N = 64\nN = 128\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("N = sixty\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("N 64\n"), ConfigError);
  }

  TEST_CASE("validation") {
    auto c = smoke_config();
    CHECK_NOTHROW(validate_config(c));
    c.family = "yamazaki-osc";
    c.profile = "weierstrass";
    c.ell = 1;
    c.theta = 0.0;
    c.t0 = 1e-4;
    CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
    c.theta = 0.1;
    CHECK_NOTHROW(validate_config(c));
    auto d = smoke_config();
    d.N = 100;
    CHECK_THROWS(validate_config(d));
    d = smoke_config();
    d.t1 = 2.0;
    CHECK_THROWS(validate_config(d));
    d = smoke_config();
    d.nu_max = 6;  // 2^6 > 64 / 3
    CHECK_THROWS(validate_config(d));
  }

  TEST_CASE("invalid config fails in the config stage") {
    auto c = smoke_config();
    c.N = 12;
    try {
      run(c);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.stage == "config");
    }
  }

  TEST_CASE("constant-coefficient smoke run") {
    const auto start = std::chrono::steady_clock::now();
    const auto r = run(smoke_config());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 10.0);
    CHECK(r.passed());
    CHECK(std::abs(r.sup_sigma) <= 1e-3);
    CHECK(r.loss.times.size() == r.ledger.times.size());
    CHECK(r.steps > 0);
  }

  TEST_CASE("sample times") {
    const auto t = sample_times(1e-4, 1.0, 32);
    CHECK(t.front() == 1e-4);
    CHECK(t.back() == 1.0);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
    CHECK(t.size() <= 32);
  }

  TEST_CASE("artifacts are deterministic and round-trip") {
    auto c = smoke_config();
    const auto a = scratch("det-a"), b = scratch("det-b");
    c.output_dir = a.string();
    const auto ra = run(c);
    c.output_dir = b.string();
    run(c);
    for (const char* f : {"ledger.csv", "summary.csv"}) {
      const auto x = read_file(a / f);
      CHECK(!x.empty());
      CHECK(x == read_file(b / f));
      CHECK(x.rfind(kCsvHeader, 0) == 0);
    }
    const auto back = load_report((a / "run.json").string());
    CHECK(back.config_hash == ra.config_hash);
    CHECK(back.loss.sigma == ra.loss.sigma);
    CHECK(back.checks.size() == ra.checks.size());
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
  }

  TEST_CASE("sweeps") {
    const auto axis = parse_axis("gamma=1,2");
    CHECK(axis.key == "gamma");
    CHECK(axis.values == std::vector<std::string>{"1", "2"});
    CHECK_THROWS(parse_axis("gamma"));

    auto c = smoke_config();
    const auto single = sweep(c, {});
    REQUIRE(single.size() == 1);
    REQUIRE(single[0].report);
    const auto direct = run(c);
    CHECK(single[0].report->loss.sigma == direct.loss.sigma);

    // One cell with an invalid N fails on its own.
    const auto cells = sweep(c, {parse_axis("N=64,12")});
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].report.has_value());
    CHECK(!cells[1].report.has_value());
    CHECK(cells[1].stage == "config");
    std::ostringstream out;
    write_sweep_summary(out, cells, {parse_axis("N=64,12")});
    CHECK(out.str().find("config") != std::string::npos);
  }

  TEST_CASE("theorem checks") {
    const std::vector<RunReport> ok{pde_report(0.01, {0.0, 0.01, 0.005}), pde_report(0.012, {0.0, 0.012, 0.004})};
    CHECK(check_theorem(ok, Criterion::thm_2_1).pass);

    const std::vector<RunReport> drift{pde_report(0.01, {0.0, 0.01, 0.04}), pde_report(0.01, {0.0, 0.01, 0.0})};
    CHECK(!check_theorem(drift, Criterion::thm_2_1).pass);

    auto lossy = pde_report(0.3, {0.0, 0.3});
    lossy.ell = 1;
    const std::vector<RunReport> one{lossy};
    const auto v = check_theorem(one, Criterion::thm_2_1);
    CHECK(!v.pass);
    CHECK(v.verdict == "loss present");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<RunReport> fam{mode_report("delta-osc", 3.0, 0.01, {}), mode_report("delta-osc", 2.0, 0.3, {}),
                                     mode_report("violator", 100.0, 0.9, {nan, nan, 0.4, 0.8, 1.3})};
    CHECK(check_theorem(fam, Criterion::delta_family).pass);
    const std::vector<RunReport> wrong{fam[0], fam[1]};
    CHECK_THROWS_AS(check_theorem(wrong, Criterion::delta_family), CriterionMismatch);
    CHECK_THROWS_AS(check_theorem(fam, Criterion::thm_2_1), CriterionMismatch);

    auto e1 = pde_report(0.0, {0.0}), e2 = pde_report(0.0, {0.0});
    e1.C_eq = 2.0;
    e2.C_eq = 2.2;
    const std::vector<RunReport> eq{e1, e2};
    CHECK(check_theorem(eq, Criterion::equivalence).pass);
    CHECK(parse_criterion(criterion_name(Criterion::thm_2_2)) == Criterion::thm_2_2);
    CHECK_THROWS(parse_criterion("thm-9"));
  }
}
