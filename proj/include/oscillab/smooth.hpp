#pragma once

#include <array>
#include <cmath>

namespace oscillab::smooth {

/// C-infinity transition h(u): 0 for u <= 0, 1 for u >= 1, strictly increasing
/// in between. Returns {h, h', h''}.
inline std::array<double, 3> transition(double u) {
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0, 0.0};
  // h = 1 / (1 + exp(z)), z = 1/u - 1/(1-u)
  const double v = 1.0 - u;
  const double z = 1.0 / u - 1.0 / v;
  const double dz = -1.0 / (u * u) - 1.0 / (v * v);
  const double ddz = 2.0 / (u * u * u) - 2.0 / (v * v * v);
  double h;
  if (z > 0.0) {
    const double e = std::exp(-z);
    h = e / (1.0 + e);
  } else {
    h = 1.0 / (1.0 + std::exp(z));
  }
  const double hh = h * (1.0 - h);
  const double d1 = -hh * dz;
  const double d2 = -d1 * (1.0 - 2.0 * h) * dz - hh * ddz;
  return {h, d1, d2};
}

/// Monotone cutoff: 1 for s <= lo, 0 for s >= hi. Returns {value, d/ds, d2/ds2}.
inline std::array<double, 3> cutoff(double s, double lo, double hi) {
  const double w = hi - lo;
  const auto h = transition((hi - s) / w);
  return {h[0], -h[1] / w, h[2] / (w * w)};
}

/// Normalizing mass of exp(-1/(1-s^2)) over (-1, 1).
inline constexpr double kBumpMass = 0.44399381616807943782;

/// Unit-mass even mollifier supported in (-1, 1) and its first two
/// derivatives.
inline std::array<double, 3> bump(double s) {
  if (s <= -1.0 || s >= 1.0) return {0.0, 0.0, 0.0};
  const double q = 1.0 - s * s;
  const double val = std::exp(-1.0 / q) / kBumpMass;
  const double p1 = -2.0 * s / (q * q);
  const double p2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
  return {val, val * p1, val * (p1 * p1 + p2)};
}

/// C2 ramp: 0 at s <= 0, 1 at s >= 1, with vanishing first and second
/// derivatives at both ends.
inline std::array<double, 3> ramp(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  const double s2 = s * s;
  return {s2 * s * (10.0 - 15.0 * s + 6.0 * s2), 30.0 * s2 * (1.0 - s) * (1.0 - s),
          60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)};
}

}  // namespace oscillab::smooth
