#include "oscillab/energy.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <ostream>

namespace oscillab {

double BlockSymbols::block_eps(int nu, double T_final) { return std::min(std::ldexp(1.0, -nu), 0.5 * T_final); }

BlockSymbols::BlockSymbols(const CoefficientField& base, Grid g, double gamma, const QuadSpec& quad)
    : grid_(g), gamma_(gamma), cache_(base.cache_grid(g, true)) {
  const DyadicDecomposition dec(g);
  const double T = base.constants().T_final;
  for (int nu = 0; nu <= dec.max_block(); ++nu)
    evaluators_.emplace_back(blend(base, block_eps(nu, T), quad), gamma);
}

BlockFields block_fields(const WaveState& state, const BlockSymbols& symbols, int nu, const DyadicDecomposition& dec,
                         ParaMethod method) {
  BlockFields out{dec.block(state.u, nu), dec.block(state.ut, nu), {}, {}};
  const auto& ev = symbols.evaluator(nu);
  const double gamma = symbols.gamma();
  const auto inv = ev.on_grid(state.t, symbols.cache(), SymbolKind::alpha_inv_sqrt);
  out.v_nu = paraproduct(inv, out.ut_nu, gamma, dec, method);
  const auto dinv = ev.on_grid(state.t, symbols.cache(), SymbolKind::dt_alpha_inv_sqrt);
  const bool moving = std::any_of(dinv.weight.begin(), dinv.weight.end(), [](double w) { return w != 0.0; });
  if (moving) out.v_nu -= paraproduct(dinv, out.u_nu, gamma, dec, method);
  const auto w = ev.on_grid(state.t, symbols.cache(), SymbolKind::w_symbol);
  out.w_nu = paraproduct(w, out.u_nu, gamma, dec, method);
  return out;
}

double classical_block_energy(const WaveState& state, int nu, const DyadicDecomposition& dec) {
  const SpectralField u = dec.block(state.u, nu), ut = dec.block(state.ut, nu);
  const double a = ut.norm_l2(), b = u.norm_l2(), c = u.grad_norm_l2();
  return a * a + b * b + c * c;
}

BlockEnergySample block_energy(const WaveState& state, const BlockSymbols& symbols, int nu,
                               const DyadicDecomposition& dec, ParaMethod method) {
  const auto f = block_fields(state, symbols, nu, dec, method);
  BlockEnergySample s;
  s.nu = nu;
  s.t = state.t;
  const double v = f.v_nu.norm_l2(), w = f.w_nu.norm_l2(), u = f.u_nu.norm_l2();
  s.e_nu = v * v + w * w + u * u;
  const double ut = f.ut_nu.norm_l2(), gu = f.u_nu.grad_norm_l2();
  s.e_classical = ut * ut + u * u + gu * gu;
  s.dt_norm = ut;
  return s;
}

void validate_weights(const EnergyWeights& w, int ell) {
  if (!(w.theta >= 0.0 && w.theta < 1.0)) throw WeightError("theta must lie in [0, 1)");
  if (ell == 1 && !(w.theta > 0.0)) throw WeightError("theta must be positive when ell = 1");
  if (!(w.beta >= 0.0)) throw WeightError("beta must be nonnegative");
  if (!(w.K1 >= 0.0)) throw WeightError("K1 must be nonnegative");
}

double energy_weight(int nu, double t, const EnergyWeights& w, const QuadSpec& quad) {
  const double f = w.K1 == 0.0 ? 0.0 : f_weight(nu, t, quad);
  return std::exp(-w.K1 * f) * std::exp(-2.0 * w.beta * (nu + 1) * t) * std::exp2(-2.0 * nu * w.theta);
}

std::vector<double> total_energy(const EnergyLedger& ledger, const QuadSpec& quad) {
  std::vector<double> out(ledger.times.size(), 0.0);
  for (std::size_t i = 0; i < ledger.times.size(); ++i)
    for (std::size_t j = 0; j < ledger.nus.size(); ++j)
      out[i] += energy_weight(ledger.nus[j], ledger.times[i], ledger.weights, quad) * ledger.at(i, j).e_nu;
  return out;
}

LossCurve fit_loss(const EnergyLedger& ledger, int nu_min, int nu_max) {
  if (nu_max - nu_min < 4) throw FitError("fit_loss: need nu_max - nu_min >= 4");
  if (ledger.times.empty()) throw FitError("fit_loss: empty ledger");
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < ledger.nus.size(); ++j)
    if (ledger.nus[j] >= nu_min && ledger.nus[j] <= nu_max) cols.push_back(j);
  if (cols.size() < 2) throw FitError("fit_loss: fewer than two blocks in range");

  double xbar = 0.0;
  for (auto j : cols) xbar += ledger.nus[j];
  xbar /= double(cols.size());
  double sxx = 0.0;
  for (auto j : cols) sxx += (ledger.nus[j] - xbar) * (ledger.nus[j] - xbar);

  LossCurve c;
  for (std::size_t i = 0; i < ledger.times.size(); ++i) {
    std::vector<double> y;
    for (auto j : cols) {
      const double e0 = ledger.at(0, j).e_nu, e = ledger.at(i, j).e_nu;
      if (!(e0 > 0.0 && e > 0.0)) throw FitError("fit_loss: nonpositive block energy");
      y.push_back(0.5 * std::log2(e / e0));
    }
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= double(y.size());
    double sxy = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) sxy += (ledger.nus[cols[k]] - xbar) * (y[k] - ybar);
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double r = y[k] - ybar - slope * (ledger.nus[cols[k]] - xbar);
      rss += r * r;
    }
    c.times.push_back(ledger.times[i]);
    c.sigma.push_back(slope);
    c.residual.push_back(std::sqrt(rss / double(cols.size())));
  }
  return c;
}

LinearEnvelope fit_envelope(const LossCurve& curve) {
  LinearEnvelope env;
  double stt = 0.0, sts = 0.0;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    stt += curve.times[i] * curve.times[i];
    sts += curve.times[i] * curve.sigma[i];
  }
  env.beta_hat = stt > 0.0 ? std::max(0.0, sts / stt) : 0.0;
  double rss = 0.0;
  env.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double r = curve.sigma[i] - env.beta_hat * curve.times[i];
    rss += r * r;
    env.max_excess = std::max(env.max_excess, r);
    for (std::size_t k = 0; k < i; ++k) {
      const double gap = curve.times[i] - curve.times[k];
      if (gap >= 0.1) env.max_pair_slope = std::max(env.max_pair_slope, (curve.sigma[i] - curve.sigma[k]) / gap);
    }
  }
  env.residual = curve.times.empty() ? 0.0 : std::sqrt(rss / double(curve.times.size()));
  return env;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger, const QuadSpec& quad) {
  const auto total = total_energy(ledger, quad);
  out << kCsvHeader << '\n' << "t,nu,e_nu,e_classical,weight,total\n";
  for (std::size_t i = 0; i < ledger.times.size(); ++i)
    for (std::size_t j = 0; j < ledger.nus.size(); ++j) {
      const auto& s = ledger.at(i, j);
      out << format_number(ledger.times[i]) << ',' << ledger.nus[j] << ',' << format_number(s.e_nu) << ','
          << format_number(s.e_classical) << ','
          << format_number(energy_weight(ledger.nus[j], ledger.times[i], ledger.weights, quad)) << ','
          << format_number(total[i]) << '\n';
    }
}

}  // namespace oscillab
