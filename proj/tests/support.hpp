#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "oscillab/coefficients.hpp"
#include "oscillab/spectral.hpp"

namespace testing {

using namespace oscillab;

class FixedTime final : public TimeProfile {
 public:
  explicit FixedTime(double c) : c_(c) {}
  double eval(double, int order) const override { return order == 0 ? c_ : 0.0; }
  bool is_constant() const override { return true; }

 private:
  double c_;
};

class SinSpace final : public SpatialProfile {
 public:
  double eval(const Point& x) const override { return std::sin(x[0]); }
  double sup_abs() const override { return 1.0; }
  std::optional<int> band() const override { return 1; }
  std::string name() const override { return "sin"; }
};

class UnitSpace final : public SpatialProfile {
 public:
  double eval(const Point&) const override { return 1.0; }
  double sup_abs() const override { return 1.0; }
  std::optional<int> band() const override { return 0; }
  std::string name() const override { return "one"; }
};

/// a(x) = base + amp sin x0, constant in time.
inline CoefficientField static_field(double base, double amp, int dim = 1) {
  FieldConstants k;
  k.lambda0 = base - amp;
  k.Lambda0 = base + amp;
  return CoefficientField("static", dim,
                          {{std::make_shared<FixedTime>(base), std::make_shared<UnitSpace>()},
                           {std::make_shared<FixedTime>(amp), std::make_shared<SinSpace>()}},
                          k);
}

/// Random real field with modes |k| <= band, unit L2 norm.
inline SpectralField random_band_field(const Grid& g, int band, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  SpectralField f(g);
  for_each_mode(g, [&](const Mode& m) {
    if (m.kmax_axis <= band) f[m.index] = cplx{n(rng), n(rng)};
  });
  f.symmetrize();
  f *= 1.0 / f.norm_l2();
  return f;
}

/// cos(k x0) with exactly two nonzero coefficients.
inline SpectralField single_mode(const Grid& g, int k) {
  SpectralField f(g);
  for_each_mode(g, [&](const Mode& m) {
    if (m.k1 == 0 && std::abs(m.k0) == k) f[m.index] = k == 0 ? cplx{1.0, 0.0} : cplx{0.5, 0.0};
  });
  return f;
}

}  // namespace testing
