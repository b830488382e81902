#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "oscillab/coefficients.hpp"
#include "oscillab/spectral.hpp"

namespace oscillab {

/// Solution snapshot (u, du/dt) at time t, both band-limited to |k| <= n/3.
struct WaveState {
  double t = 0.0;
  SpectralField u;
  SpectralField ut;
};

using Forcing = std::function<SpectralField(double t)>;

/// div(A(t, .) grad u) on one grid. Caches the spatial profiles of A.
class WaveOperator {
 public:
  WaveOperator(CoefficientField field, Grid grid);

  const Grid& grid() const { return grid_; }
  const CoefficientField& field() const { return field_; }
  const CoefficientField::GridCache& cache() const { return cache_; }

  /// Pseudo-spectral div(a grad u) + forcing(t), truncated to |k| <= n/3.
  SpectralField apply(double t, const SpectralField& u, const Forcing* forcing = nullptr) const;

 private:
  CoefficientField field_;
  Grid grid_;
  CoefficientField::GridCache cache_;
};

SpectralField rhs(const WaveState& state, const WaveOperator& op, const Forcing* forcing = nullptr);

/// One classical RK4 step of (u, ut)' = (ut, rhs). dt may be negative.
WaveState step(const WaveState& state, const WaveOperator& op, double dt, const Forcing* forcing = nullptr);

/// safety / (sqrt(Lambda0) n/3).
double cfl_dt(int n, double Lambda0, double safety);

struct IntegrateOptions {
  double dt_max = 0.0;     // required, > 0
  double rel_dt = 0.0;     // if > 0, also cap |dt| by rel_dt * |t|
  std::vector<double> sample_times;
  const Forcing* forcing = nullptr;
};

struct IntegrateStats {
  long steps = 0;
  double dt_min = 0.0;
};

/// Advances state to t1, landing exactly on every sample time in between
/// and calling on_sample there (including t1 if listed).
IntegrateStats integrate(WaveState& state, const WaveOperator& op, double t1, const IntegrateOptions& opt,
                         const std::function<void(const WaveState&)>& on_sample = {});

/// Energy ||ut||^2 + int a |grad u|^2 at the state time.
double wave_energy(const WaveState& state, const WaveOperator& op);

/// Amplitude pair for v'' + a(t) xi^2 v = 0.
struct ModeState {
  double xi = 0.0;
  double t = 0.0;
  double v = 0.0;
  double vp = 0.0;
};

class StepUnderflow : public std::runtime_error {
 public:
  StepUnderflow(const std::string& what, double reached) : std::runtime_error(what), reached_time(reached) {}
  double reached_time;
};

struct ModeOptions {
  double tol = 1e-10;
  double Lambda0 = 1.0;
  std::vector<double> sample_times;
};

struct ModeTrajectory {
  std::vector<ModeState> samples;  // initial state, each sample time, final state
  long steps = 0;
  long rejected = 0;
};

/// Dormand-Prince 5(4) integration with local error tol, step capped by
/// min(0.1 t, 0.2 / (xi sqrt(Lambda0))).
ModeTrajectory solve_mode(const std::function<double(double)>& a, ModeState start, double t1,
                          const ModeOptions& opt);

/// Fundamental matrix M with (v, v')(t1) = M (v, v')(t0).
struct Propagator {
  std::array<double, 4> m{};  // row-major 2x2
  double wronskian() const { return m[0] * m[3] - m[1] * m[2]; }
  long steps = 0;
};

Propagator mode_propagator(const std::function<double(double)>& a, double xi, double t0, double t1,
                           const ModeOptions& opt);

}  // namespace oscillab
