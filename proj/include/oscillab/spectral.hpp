#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "oscillab/fft.hpp"

namespace oscillab {

/// Uniform periodic grid on the torus [0, 2pi)^dim with n points per axis.
struct Grid {
  int dim = 1;
  int n = 64;

  std::size_t size() const {
    return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
  }
  /// Signed integer frequency stored at FFT index i along one axis.
  int freq(int i) const { return i <= n / 2 - 1 ? i : i - n; }
  /// Largest retained frequency under the two-thirds rule.
  double dealias_limit() const { return n / 3.0; }
  double spacing() const;
  /// Physical coordinates of flat index idx.
  std::array<double, 2> point(std::size_t idx) const;

  bool operator==(const Grid&) const = default;
};

/// Throws unless dim is 1 or 2 and n is a power of two >= 8.
void validate_grid(const Grid& g);

struct Mode {
  std::size_t index;
  int k0;
  int k1;  // 0 in 1D
  double ksq;
  double kabs;
  int kmax_axis;  // max(|k0|, |k1|)
};

template <class F>
void for_each_mode(const Grid& g, F&& f) {
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) {
      const int k = g.freq(i);
      const double ksq = double(k) * k;
      f(Mode{std::size_t(i), k, 0, ksq, std::abs(double(k)), std::abs(k)});
    }
  } else {
    for (int i = 0; i < g.n; ++i) {
      const int k0 = g.freq(i);
      for (int j = 0; j < g.n; ++j) {
        const int k1 = g.freq(j);
        const double ksq = double(k0) * k0 + double(k1) * k1;
        f(Mode{std::size_t(i) * g.n + j, k0, k1, ksq, std::sqrt(ksq),
               std::max(std::abs(k0), std::abs(k1))});
      }
    }
  }
}

/// Real scalar field on the torus held as Fourier coefficients.
///
/// Coefficients follow the normalization of FftPlan::forward, so the L2 norm
/// over the torus is sqrt((2pi)^dim * sum |c_k|^2). The Nyquist row is never
/// populated by the constructors below.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(Grid g);

  static SpectralField from_physical(Grid g, std::span<const double> values);
  static SpectralField from_function(Grid g, const std::function<double(double, double)>& f);

  const Grid& grid() const { return grid_; }
  std::span<cplx> coefficients() { return coef_; }
  std::span<const cplx> coefficients() const { return coef_; }
  cplx& operator[](std::size_t i) { return coef_[i]; }
  const cplx& operator[](std::size_t i) const { return coef_[i]; }

  std::vector<double> physical() const;

  double norm_l2() const;
  /// Same norm evaluated by the trapezoid rule on the physical samples.
  double physical_norm_l2() const;
  /// L2 norm of the gradient.
  double grad_norm_l2() const;
  /// Worst violation of c_{-k} = conj(c_k), relative to the largest coefficient.
  double hermitian_defect() const;

  /// Keeps only modes with max_i |k_i| <= n/3 and clears the Nyquist row.
  void dealias();
  void symmetrize();
  void apply_multiplier(const std::function<double(const Mode&)>& m);
  SpectralField with_multiplier(const std::function<double(const Mode&)>& m) const;
  bool is_zero() const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  Grid grid_{};
  std::vector<cplx> coef_;
};

/// L2 inner product Re <a, b> over the torus.
double inner_l2(const SpectralField& a, const SpectralField& b);

}  // namespace oscillab
