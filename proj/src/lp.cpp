#include "oscillab/lp.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "oscillab/smooth.hpp"

namespace oscillab {

namespace {

std::size_t wrap_index(int k, int n) { return std::size_t((k % n + n) % n); }

/// Places an n-grid spectrum into a larger grid by signed frequency.
std::vector<cplx> embed(std::span<const cplx> spec, const Grid& from, int n_to) {
  if (n_to == from.n) return {spec.begin(), spec.end()};
  const Grid to{from.dim, n_to};
  std::vector<cplx> out(to.size(), cplx{0.0, 0.0});
  for_each_mode(from, [&](const Mode& m) {
    if (spec[m.index] == cplx{0.0, 0.0}) return;
    const std::size_t idx = from.dim == 1 ? wrap_index(m.k0, n_to)
                                          : wrap_index(m.k0, n_to) * n_to + wrap_index(m.k1, n_to);
    out[idx] = spec[m.index];
  });
  return out;
}

/// Keeps the modes of a larger-grid spectrum that exist on `to` (Nyquist excluded).
std::vector<cplx> restrict_to(std::span<const cplx> big, int n_big, const Grid& to) {
  if (n_big == to.n) {
    std::vector<cplx> out(big.begin(), big.end());
    for_each_mode(to, [&](const Mode& m) {
      if (m.kmax_axis >= to.n / 2) out[m.index] = 0.0;
    });
    return out;
  }
  std::vector<cplx> out(to.size(), cplx{0.0, 0.0});
  for_each_mode(to, [&](const Mode& m) {
    if (m.kmax_axis >= to.n / 2) return;
    const std::size_t idx = to.dim == 1 ? wrap_index(m.k0, n_big)
                                        : wrap_index(m.k0, n_big) * n_big + wrap_index(m.k1, n_big);
    out[m.index] = big[idx];
  });
  return out;
}

struct Term {
  int f_level;
  std::vector<cplx> u_part;  // multiplier applied to u_hat
  int band_u = 0;            // max-axis band of u_part
  bool empty = true;
};

std::vector<Term> para_terms(const SpectralField& u, double gamma, const DyadicDecomposition& dec) {
  const int mu = para_mu(gamma);
  const int J = dec.max_block();
  const Grid& g = u.grid();
  std::vector<Term> terms;
  auto make = [&](int f_level, auto&& mult) {
    Term t{f_level, std::vector<cplx>(g.size(), cplx{0.0, 0.0})};
    const auto c = u.coefficients();
    for_each_mode(g, [&](const Mode& m) {
      if (c[m.index] == cplx{0.0, 0.0}) return;
      const double w = mult(m.kabs);
      if (w == 0.0) return;
      t.u_part[m.index] = w * c[m.index];
      t.band_u = std::max(t.band_u, m.kmax_axis);
      t.empty = false;
    });
    if (!t.empty) terms.push_back(std::move(t));
  };
  make(std::max(mu - 1, 0), [&](double k) { return dec.low_multiplier(mu + 2, k); });
  for (int nu = mu; nu + 3 <= J; ++nu) make(nu, [&](double k) { return dec.block_multiplier(nu + 3, k); });
  return terms;
}

int eval_size(const Grid& g, int f_level, int band_u) {
  const double band_f = std::min(1.9 * std::ldexp(1.0, f_level), g.n / 2.0);
  return band_f + band_u < g.n / 2.0 ? g.n : 2 * g.n;
}

class Accumulator {
 public:
  explicit Accumulator(const Grid& g) : grid_(g) {}
  std::vector<cplx>& buffer(int n_eval) {
    auto& b = n_eval == grid_.n ? small_ : big_;
    if (b.empty()) b.assign(Grid{grid_.dim, n_eval}.size(), cplx{0.0, 0.0});
    return b;
  }
  SpectralField finish() {
    SpectralField out(grid_);
    auto oc = out.coefficients();
    for (auto* b : {&small_, &big_}) {
      if (b->empty()) continue;
      const int n_eval = b == &small_ ? grid_.n : 2 * grid_.n;
      fft_plan(grid_.dim, n_eval).forward(*b);
      const auto r = restrict_to(*b, n_eval, grid_);
      for (std::size_t i = 0; i < r.size(); ++i) oc[i] += r[i];
    }
    return out;
  }

 private:
  Grid grid_;
  std::vector<cplx> small_, big_;
};

/// S_j multiplier at every mode of g.
std::vector<double> low_table(const Grid& g, int level, const DyadicDecomposition& dec) {
  std::vector<double> t(g.size());
  for_each_mode(g, [&](const Mode& m) { t[m.index] = dec.low_multiplier(level, m.kabs); });
  return t;
}

/// f spectrum times a per-mode multiplier, synthesized on the evaluation grid.
std::vector<cplx> smoothed_on(std::span<const cplx> f_hat, const Grid& g, std::span<const double> mult, int n_eval) {
  std::vector<cplx> s(f_hat.begin(), f_hat.end());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= mult[i];
  auto e = embed(s, g, n_eval);
  fft_plan(g.dim, n_eval).inverse(e);
  return e;
}

std::vector<cplx> synthesize(std::span<const cplx> spec, const Grid& g, int n_eval) {
  auto e = embed(spec, g, n_eval);
  fft_plan(g.dim, n_eval).inverse(e);
  return e;
}

SpectralField paraproduct_direct(const GridSymbol& f, const SpectralField& u, double gamma,
                                 const DyadicDecomposition& dec) {
  const Grid& g = u.grid();
  Accumulator acc(g);
  for (const auto& term : para_terms(u, gamma, dec)) {
    const int n_eval = eval_size(g, term.f_level, term.band_u);
    auto& out = acc.buffer(n_eval);
    const auto mult = low_table(g, term.f_level, dec);
    const Grid eg{g.dim, n_eval};
    std::vector<cplx> roots(n_eval);
    for (int j = 0; j < n_eval; ++j) roots[j] = std::polar(1.0, 2.0 * std::numbers::pi * j / n_eval);
    std::map<double, std::vector<cplx>> columns;
    for_each_mode(g, [&](const Mode& m) {
      const cplx uk = term.u_part[m.index];
      if (uk == cplx{0.0, 0.0}) return;
      auto it = columns.find(m.ksq);
      if (it == columns.end()) {
        std::vector<cplx> col(g.size());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = f.eval(i, m.ksq);
        fft_plan(g.dim, g.n).forward(col);
        it = columns.emplace(m.ksq, smoothed_on(col, g, mult, n_eval)).first;
      }
      const auto& sf = it->second;
      if (g.dim == 1) {
        for (int x = 0; x < n_eval; ++x) out[x] += sf[x] * uk * roots[wrap_index(m.k0 * x, n_eval)];
      } else {
        for (int x0 = 0; x0 < n_eval; ++x0)
          for (int x1 = 0; x1 < n_eval; ++x1) {
            const std::size_t i = std::size_t(x0) * n_eval + x1;
            out[i] += sf[i] * uk * roots[wrap_index(m.k0 * x0 + m.k1 * x1, n_eval)];
          }
      }
      (void)eg;
    });
  }
  return acc.finish();
}

/// Chebyshev coefficients of F(., ksq) on [lo, hi], truncated at tol.
constexpr int kNodes = 64;

/// cos(pi p (j + 1/2) / kNodes), row p.
const std::vector<double>& chebyshev_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kNodes * kNodes);
    for (int p = 0; p < kNodes; ++p)
      for (int j = 0; j < kNodes; ++j) t[p * kNodes + j] = std::cos(std::numbers::pi * p * (j + 0.5) / kNodes);
    return t;
  }();
  return table;
}

std::vector<double> chebyshev_fit(const std::function<double(double)>& F, double lo, double hi) {
  const auto& table = chebyshev_table();
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  std::array<double, kNodes> vals;
  for (int j = 0; j < kNodes; ++j) vals[j] = F(mid + half * table[kNodes + j]);
  std::vector<double> c(kNodes);
  double cmax = 0.0;
  for (int p = 0; p < kNodes; ++p) {
    double s = 0.0;
    for (int j = 0; j < kNodes; ++j) s += vals[j] * table[p * kNodes + j];
    c[p] = (p == 0 ? 1.0 : 2.0) * s / kNodes;
    cmax = std::max(cmax, std::abs(c[p]));
  }
  int keep = kNodes;
  while (keep > 1 && std::abs(c[keep - 1]) <= 1e-16 * cmax) --keep;
  c.resize(keep);
  return c;
}

SpectralField paraproduct_separated(const GridSymbol& f, const SpectralField& u, double gamma,
                                    const DyadicDecomposition& dec) {
  const Grid& g = u.grid();
  const auto terms = para_terms(u, gamma, dec);
  if (terms.empty()) return SpectralField(g);

  double lo = f.s[0], hi = f.s[0];
  for (double v : f.s) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool flat = hi - lo <= 1e-14 * std::max(1.0, std::abs(hi));

  // Chebyshev coefficients per distinct |k|^2 among the modes of u.
  std::map<double, std::vector<double>> coeffs;
  std::size_t P = 1;
  for_each_mode(g, [&](const Mode& m) {
    if (u[m.index] == cplx{0.0, 0.0} || coeffs.count(m.ksq)) return;
    std::vector<double> c;
    if (flat) {
      c = {f.F(lo, m.ksq)};
    } else {
      c = chebyshev_fit([&](double s) { return f.F(s, m.ksq); }, lo, hi);
    }
    P = std::max(P, c.size());
    coeffs.emplace(m.ksq, std::move(c));
  });

  // Basis fields weight * T_p(s_hat) as spectra on the grid.
  std::vector<std::vector<cplx>> basis(P);
  {
    const double mid = 0.5 * (lo + hi), half = flat ? 1.0 : 0.5 * (hi - lo);
    std::vector<double> tm1(g.size(), 1.0), t0(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) t0[i] = flat ? 0.0 : (f.s[i] - mid) / half;
    std::vector<double> cur = tm1, prev;
    for (std::size_t p = 0; p < P; ++p) {
      if (p == 0) {
        cur = tm1;
      } else if (p == 1) {
        prev = tm1;
        cur = t0;
      } else {
        std::vector<double> next(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) next[i] = 2.0 * t0[i] * cur[i] - prev[i];
        prev = std::move(cur);
        cur = std::move(next);
      }
      std::vector<cplx> b(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) b[i] = (f.weight.empty() ? 1.0 : f.weight[i]) * cur[i];
      fft_plan(g.dim, g.n).forward(b);
      basis[p] = std::move(b);
    }
  }

  std::vector<const std::vector<double>*> mode_coeffs(g.size(), nullptr);
  for_each_mode(g, [&](const Mode& m) {
    if (u[m.index] != cplx{0.0, 0.0}) mode_coeffs[m.index] = &coeffs.at(m.ksq);
  });

  Accumulator acc(g);
  std::vector<cplx> up(g.size());
  for (const auto& term : terms) {
    const int n_eval = eval_size(g, term.f_level, term.band_u);
    auto& out = acc.buffer(n_eval);
    const auto mult = low_table(g, term.f_level, dec);
    for (std::size_t p = 0; p < P; ++p) {
      bool any = false;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const cplx v = term.u_part[i];
        if (v == cplx{0.0, 0.0}) {
          up[i] = 0.0;
          continue;
        }
        const auto& c = *mode_coeffs[i];
        up[i] = p < c.size() ? c[p] * v : cplx{0.0, 0.0};
        any = any || p < c.size();
      }
      if (!any) continue;
      const auto uphys = synthesize(up, g, n_eval);
      const auto fphys = smoothed_on(basis[p], g, mult, n_eval);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += fphys[i] * uphys[i];
    }
  }
  return acc.finish();
}

}  // namespace

DyadicDecomposition::DyadicDecomposition(Grid g) : grid_(g) {
  validate_grid(g);
  J_ = 0;
  while ((1 << J_) < g.n) ++J_;  // 2^J = n
}

double DyadicDecomposition::chi(double r) { return smooth::cutoff(r, 1.1, 1.9)[0]; }

double DyadicDecomposition::low_multiplier(int j, double kabs) const {
  if (j < 0) return 0.0;
  return chi(std::ldexp(kabs, -j));
}

double DyadicDecomposition::block_multiplier(int j, double kabs) const {
  if (j < 0) return 0.0;
  if (j == 0) return chi(kabs);
  return chi(std::ldexp(kabs, -j)) - chi(std::ldexp(kabs, 1 - j));
}

SpectralField DyadicDecomposition::block(const SpectralField& u, int j) const {
  if (j < 0 || j > J_) throw std::out_of_range("block: index out of range");
  return u.with_multiplier([&](const Mode& m) { return block_multiplier(j, m.kabs); });
}

SpectralField DyadicDecomposition::low_pass(const SpectralField& u, int j) const {
  return u.with_multiplier([&](const Mode& m) { return low_multiplier(j, m.kabs); });
}

double sobolev_norm(const SpectralField& u, double s, double gamma) {
  const SpectralField w = u.with_multiplier([&](const Mode& m) { return std::pow(gamma * gamma + m.ksq, 0.5 * s); });
  return w.norm_l2();
}

double dyadic_sobolev_norm(const SpectralField& u, double s, const DyadicDecomposition& dec) {
  double acc = 0.0;
  for (int j = 0; j <= dec.max_block(); ++j) {
    const double b = dec.block(u, j).norm_l2();
    acc += std::pow(2.0, 2.0 * s * j) * b * b;
  }
  return std::sqrt(acc);
}

GridSymbol multiplication_symbol(Grid g, std::vector<double> values) {
  return GridSymbol{g, std::move(values), {}, [](double s, double) { return s; }};
}

int para_mu(double gamma) {
  if (!(gamma >= 1.0)) throw std::invalid_argument("paraproduct: gamma must be >= 1");
  return int(std::floor(std::log2(gamma) + 1e-12));
}

SpectralField paraproduct(const GridSymbol& f, const SpectralField& u, double gamma, const DyadicDecomposition& dec,
                          ParaMethod method) {
  para_mu(gamma);
  if (!(f.grid == u.grid()) || !(dec.grid() == u.grid())) throw std::invalid_argument("paraproduct: grid mismatch");
  if (f.s.size() != u.grid().size()) throw std::invalid_argument("paraproduct: symbol size mismatch");
  return method == ParaMethod::direct ? paraproduct_direct(f, u, gamma, dec) : paraproduct_separated(f, u, gamma, dec);
}

double SymbolEvaluator::shape(double s, double ksq, double gamma, SymbolKind kind) {
  const double g2 = gamma * gamma;
  const double top = g2 + s * ksq, bottom = g2 + ksq;
  const double alpha = std::sqrt(top / bottom);
  switch (kind) {
    case SymbolKind::alpha: return alpha;
    case SymbolKind::alpha_sqrt: return std::sqrt(alpha);
    case SymbolKind::alpha_inv_sqrt: return 1.0 / std::sqrt(alpha);
    case SymbolKind::dt_alpha_inv_sqrt: return -0.25 * std::pow(alpha, -2.5) * ksq / bottom;
    case SymbolKind::w_symbol: return std::sqrt(alpha) * std::sqrt(bottom);
    case SymbolKind::alpha_sq_weight: return top;
  }
  return 0.0;
}

SymbolEvaluator::SymbolEvaluator(RegularizedCoefficient reg, double gamma) : reg_(std::move(reg)), gamma_(gamma) {
  if (!(gamma >= 1.0)) throw std::invalid_argument("alpha_symbol: gamma must be >= 1");
}

double SymbolEvaluator::eval(double t, const Point& x, const std::array<double, 2>& xi, SymbolKind kind) const {
  const double ksq = xi[0] * xi[0] + xi[1] * xi[1];
  const double s = reg_.field.scalar(t, x, 0);
  const double v = shape(s, ksq, gamma_, kind);
  return kind == SymbolKind::dt_alpha_inv_sqrt ? v * reg_.field.scalar(t, x, 1) : v;
}

GridSymbol SymbolEvaluator::on_grid(double t, const CoefficientField::GridCache& cache, SymbolKind kind) const {
  GridSymbol sym{cache.grid, std::vector<double>(cache.grid.size()), {}, {}};
  reg_.field.scalar_on_grid(t, cache, 0, sym.s);
  if (kind == SymbolKind::dt_alpha_inv_sqrt) {
    sym.weight.resize(cache.grid.size());
    reg_.field.scalar_on_grid(t, cache, 1, sym.weight);
  }
  const double gamma = gamma_;
  sym.F = [gamma, kind](double s, double ksq) { return shape(s, ksq, gamma, kind); };
  return sym;
}

SymbolEvaluator alpha_symbol(const RegularizedCoefficient& reg, double gamma) { return SymbolEvaluator(reg, gamma); }

PositivityQuotients positivity_quotients(std::span<const PositivityCase> cases, std::span<const SpectralField> trials,
                                         double gamma, const DyadicDecomposition& dec) {
  PositivityQuotients q{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& c : cases)
    for (const auto& u : trials) {
      const double n0 = u.norm_l2();
      if (n0 == 0.0) continue;
      q.l2 = std::min(q.l2, paraproduct(c.inv_sqrt, u, gamma, dec).norm_l2() / n0);
      q.h1 = std::min(q.h1, paraproduct(c.w_symbol, u, gamma, dec).norm_l2() / sobolev_norm(u, 1.0, gamma));
    }
  return q;
}

Gamma0Result find_gamma0(const std::function<std::vector<PositivityCase>(double)>& cases_for_gamma,
                         std::span<const SpectralField> trials, double lambda0, const DyadicDecomposition& dec,
                         int max_exponent) {
  Gamma0Result res;
  const double target = 0.5 * lambda0;
  double worst = 0.0;
  for (int e = 0; e <= max_exponent; ++e) {
    const double gamma = std::ldexp(1.0, e);
    const auto cases = cases_for_gamma(gamma);
    const auto q = positivity_quotients(cases, trials, gamma, dec);
    res.history.emplace_back(gamma, q);
    worst = std::min(q.l2, q.h1);
    if (q.l2 >= target && q.h1 >= target) {
      res.gamma0 = gamma;
      res.at_gamma0 = q;
      return res;
    }
  }
  throw Gamma0Error("find_gamma0: no gamma <= 2^" + std::to_string(max_exponent) +
                        " satisfies positivity; worst quotient " + std::to_string(worst),
                    worst);
}

std::vector<SpectralField> random_trial_fields(const Grid& g, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<SpectralField> out;
  out.reserve(count);
  const double lim = g.dealias_limit();
  for (int i = 0; i < count; ++i) {
    SpectralField f(g);
    if (i % 5 == 4) {
      const int k = int(uni(rng) * 5.0);
      const double phase = 2.0 * std::numbers::pi * uni(rng);
      const std::size_t idx = g.dim == 1 ? wrap_index(k, g.n) : wrap_index(k, g.n) * g.n;
      f[idx] = std::polar(1.0, k == 0 ? 0.0 : phase);
    } else {
      const double slope = 2.0 * uni(rng);
      for_each_mode(g, [&](const Mode& m) {
        if (m.kmax_axis > lim || m.kmax_axis >= g.n / 2) return;
        f[m.index] = cplx{gauss(rng), gauss(rng)} * std::pow(1.0 + m.ksq, -0.5 * slope);
      });
    }
    f.symmetrize();
    const double n = f.norm_l2();
    if (n > 0.0) f *= 1.0 / n;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace oscillab
