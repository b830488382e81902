#include "oscillab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>

namespace oscillab {

WaveOperator::WaveOperator(CoefficientField field, Grid grid)
    : field_(std::move(field)), grid_(grid), cache_(field_.cache_grid(grid, true)) {
  validate_grid(grid);
  if (field_.dim() != grid.dim) throw std::invalid_argument("WaveOperator: dimension mismatch");
}

SpectralField WaveOperator::apply(double t, const SpectralField& u, const Forcing* forcing) const {
  const Grid& g = grid_;
  const FftPlan& plan = fft_plan(g.dim, g.n);
  std::vector<double> a(g.size());
  field_.scalar_on_grid(t, cache_, 0, a);

  SpectralField out(g);
  auto oc = out.coefficients();
  const auto uc = u.coefficients();
  std::vector<cplx> buf(g.size());
  for (int axis = 0; axis < g.dim; ++axis) {
    for_each_mode(g, [&](const Mode& m) {
      const int k = axis == 0 ? m.k0 : m.k1;
      buf[m.index] = cplx{0.0, double(k)} * uc[m.index];
    });
    plan.inverse(buf);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = a[i] * buf[i].real();
    plan.forward(buf);
    for_each_mode(g, [&](const Mode& m) {
      const int k = axis == 0 ? m.k0 : m.k1;
      oc[m.index] += cplx{0.0, double(k)} * buf[m.index];
    });
  }
  if (forcing && *forcing) out += (*forcing)(t);
  out.dealias();
  return out;
}

SpectralField rhs(const WaveState& state, const WaveOperator& op, const Forcing* forcing) {
  return op.apply(state.t, state.u, forcing);
}

WaveState step(const WaveState& s, const WaveOperator& op, double dt, const Forcing* forcing) {
  if (dt == 0.0 || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be nonzero and finite");
  const double h = dt, t = s.t;
  const SpectralField k1u = s.ut;
  const SpectralField k1v = op.apply(t, s.u, forcing);
  const SpectralField u2 = s.u + (0.5 * h) * k1u, v2 = s.ut + (0.5 * h) * k1v;
  const SpectralField k2v = op.apply(t + 0.5 * h, u2, forcing);
  const SpectralField u3 = s.u + (0.5 * h) * v2, v3 = s.ut + (0.5 * h) * k2v;
  const SpectralField k3v = op.apply(t + 0.5 * h, u3, forcing);
  const SpectralField u4 = s.u + h * v3, v4 = s.ut + h * k3v;
  const SpectralField k4v = op.apply(t + h, u4, forcing);

  WaveState out{t + h, s.u, s.ut};
  out.u += (h / 6.0) * (k1u + 2.0 * v2 + 2.0 * v3 + v4);
  out.ut += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return out;
}

double cfl_dt(int n, double Lambda0, double safety) {
  if (n < 8) throw std::invalid_argument("cfl_dt: n must be >= 8");
  if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("cfl_dt: safety must be in (0, 1]");
  if (!(Lambda0 > 0.0)) throw std::invalid_argument("cfl_dt: Lambda0 must be positive");
  return safety / (std::sqrt(Lambda0) * (n / 3.0));
}

IntegrateStats integrate(WaveState& state, const WaveOperator& op, double t1, const IntegrateOptions& opt,
                         const std::function<void(const WaveState&)>& on_sample) {
  if (!(opt.dt_max > 0.0)) throw std::invalid_argument("integrate: dt_max must be positive");
  const double dir = t1 >= state.t ? 1.0 : -1.0;
  std::vector<double> marks;
  for (double ts : opt.sample_times)
    if ((ts - state.t) * dir >= 0.0 && (t1 - ts) * dir >= 0.0) marks.push_back(ts);
  std::sort(marks.begin(), marks.end(), [&](double a, double b) { return a * dir < b * dir; });
  marks.push_back(t1);
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  IntegrateStats stats;
  stats.dt_min = std::numeric_limits<double>::infinity();
  std::size_t next = 0;
  while (next < marks.size()) {
    const double target = marks[next];
    const double gap = (target - state.t) * dir;
    if (gap <= 1e-14 * std::max(1.0, std::abs(target))) {
      state.t = target;
      if (next + 1 < marks.size() || std::count(opt.sample_times.begin(), opt.sample_times.end(), target))
        if (on_sample) on_sample(state);
      ++next;
      continue;
    }
    double h = opt.dt_max;
    if (opt.rel_dt > 0.0 && state.t != 0.0) h = std::min(h, opt.rel_dt * std::abs(state.t));
    // Avoid a sliver step before the mark.
    if (h >= gap) {
      h = gap;
    } else if (h > 0.5 * gap) {
      h = 0.5 * gap;
    }
    const double t_new = h == gap ? target : state.t + dir * h;
    state = step(state, op, t_new - state.t, opt.forcing);
    state.t = t_new;
    ++stats.steps;
    stats.dt_min = std::min(stats.dt_min, h);
  }
  return stats;
}

double wave_energy(const WaveState& state, const WaveOperator& op) {
  const Grid& g = op.grid();
  std::vector<double> a(g.size());
  op.field().scalar_on_grid(state.t, op.cache(), 0, a);
  double pot = 0.0;
  for (int axis = 0; axis < g.dim; ++axis) {
    SpectralField grad(g);
    for_each_mode(g, [&](const Mode& m) {
      const int k = axis == 0 ? m.k0 : m.k1;
      grad[m.index] = cplx{0.0, double(k)} * state.u[m.index];
    });
    const auto phys = grad.physical();
    for (std::size_t i = 0; i < phys.size(); ++i) pot += a[i] * phys[i] * phys[i];
  }
  const double cell = std::pow(g.spacing(), g.dim);
  const double kin = state.ut.norm_l2();
  return kin * kin + pot * cell;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

/// System in scaled variables y = (v, v'/xi) for K independent solutions.
template <int K>
struct ModeSystem {
  using Vec = std::array<double, 2 * K>;
  const std::function<double(double)>& a;
  double xi;

  Vec f(double t, const Vec& y) const {
    const double ax = a(t) * xi;
    Vec d;
    for (int k = 0; k < K; ++k) {
      d[2 * k] = xi * y[2 * k + 1];
      d[2 * k + 1] = -ax * y[2 * k];
    }
    return d;
  }
};

template <int K>
struct DpResult {
  std::vector<std::pair<double, std::array<double, 2 * K>>> samples;
  long steps = 0;
  long rejected = 0;
};

template <int K>
DpResult<K> dormand_prince(const ModeSystem<K>& sys, double t0, std::array<double, 2 * K> y, double t1,
                           const ModeOptions& opt) {
  using Vec = std::array<double, 2 * K>;
  if (!(opt.tol >= 1e-12)) throw std::invalid_argument("solve_mode: tol must be >= 1e-12");
  if (!(t1 > t0)) throw std::invalid_argument("solve_mode: t1 must exceed t0");
  if (!(sys.xi > 0.0)) throw std::invalid_argument("solve_mode: xi must be positive");

  std::vector<double> marks;
  for (double ts : opt.sample_times)
    if (ts > t0 && ts < t1) marks.push_back(ts);
  std::sort(marks.begin(), marks.end());
  marks.push_back(t1);

  DpResult<K> res;
  res.samples.emplace_back(t0, y);
  // Per-step errors add up over the periods, so tol is shared between them.
  const double periods = sys.xi * std::sqrt(opt.Lambda0) * (t1 - t0) / (2.0 * std::numbers::pi);
  const double local_tol = std::max(opt.tol / (1.0 + periods), 1e-14);
  const double wave_cap = 0.2 / (sys.xi * std::sqrt(opt.Lambda0));
  double t = t0;
  double h_try = std::min(0.1 * std::abs(t0), wave_cap) * 0.1;
  if (h_try <= 0.0) h_try = wave_cap * 0.1;
  Vec k1 = sys.f(t, y);
  std::size_t next = 0;
  while (next < marks.size()) {
    const double target = marks[next];
    const double cap = std::min(t > 0.0 ? 0.1 * t : wave_cap, wave_cap);
    h_try = std::min(h_try, cap);
    double h = h_try;
    bool hit = false;
    if (t + h >= target) {
      h = target - t;
      hit = true;
    }
    if (h < 1e-15 * std::max(1.0, std::abs(t)))
      throw StepUnderflow("solve_mode: step size underflow at t = " + std::to_string(t), t);

    auto stage = [&](std::initializer_list<std::pair<double, const Vec*>> terms, double dt) {
      Vec z = y;
      for (const auto& [c, k] : terms)
        for (int i = 0; i < 2 * K; ++i) z[i] += h * c * (*k)[i];
      return sys.f(t + dt * h, z);
    };
    const Vec k2 = stage({{a21, &k1}}, c2);
    const Vec k3 = stage({{a31, &k1}, {a32, &k2}}, c3);
    const Vec k4 = stage({{a41, &k1}, {a42, &k2}, {a43, &k3}}, c4);
    const Vec k5 = stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, c5);
    const Vec k6 = stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, 1.0);
    Vec yn = y;
    for (int i = 0; i < 2 * K; ++i) yn[i] += h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    const Vec k7 = sys.f(t + h, yn);
    double err = 0.0;
    for (int i = 0; i < 2 * K; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = local_tol * (1.0 + std::max(std::abs(y[i]), std::abs(yn[i])));
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0) {
      t = hit ? target : t + h;
      y = yn;
      k1 = k7;
      ++res.steps;
      if (hit) {
        res.samples.emplace_back(t, y);
        ++next;
      }
    } else {
      ++res.rejected;
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    // A step shortened to land on a mark says little about the next one.
    if (!hit || err > 1.0) h_try = h * factor;
  }
  return res;
}

}  // namespace

ModeTrajectory solve_mode(const std::function<double(double)>& a, ModeState start, double t1,
                          const ModeOptions& opt) {
  const ModeSystem<1> sys{a, start.xi};
  const auto r = dormand_prince<1>(sys, start.t, {start.v, start.vp / start.xi}, t1, opt);
  ModeTrajectory out;
  out.steps = r.steps;
  out.rejected = r.rejected;
  for (const auto& [t, y] : r.samples) out.samples.push_back(ModeState{start.xi, t, y[0], y[1] * start.xi});
  return out;
}

Propagator mode_propagator(const std::function<double(double)>& a, double xi, double t0, double t1,
                           const ModeOptions& opt) {
  const ModeSystem<2> sys{a, xi};
  ModeOptions o = opt;
  o.sample_times.clear();
  // Both columns start at unit size in scaled variables so the error scale fits each.
  const auto r = dormand_prince<2>(sys, t0, {1.0, 0.0, 0.0, 1.0}, t1, o);
  const auto& y = r.samples.back().second;
  Propagator p;
  // Columns: solution from (1, 0) and from (0, 1).
  p.m = {y[0], y[2] / xi, y[1] * xi, y[3]};
  p.steps = r.steps;
  return p;
}

}  // namespace oscillab
