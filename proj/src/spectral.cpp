#include "oscillab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oscillab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t mirror_index(const Grid& g, std::size_t idx) {
  if (g.dim == 1) return (g.n - idx) % g.n;
  const std::size_t i = idx / g.n, j = idx % g.n;
  return ((g.n - i) % g.n) * g.n + (g.n - j) % g.n;
}

double torus_volume(int dim) { return dim == 1 ? kTwoPi : kTwoPi * kTwoPi; }

}  // namespace

double Grid::spacing() const { return kTwoPi / n; }

std::array<double, 2> Grid::point(std::size_t idx) const {
  const double h = spacing();
  if (dim == 1) return {h * double(idx), 0.0};
  return {h * double(idx / n), h * double(idx % n)};
}

void validate_grid(const Grid& g) {
  if (g.dim != 1 && g.dim != 2) throw std::invalid_argument("grid: dim must be 1 or 2");
  if (g.n < 8 || (g.n & (g.n - 1)) != 0)
    throw std::invalid_argument("grid: n must be a power of two >= 8");
}

SpectralField::SpectralField(Grid g) : grid_(g), coef_(g.size(), cplx{0.0, 0.0}) {}

SpectralField SpectralField::from_physical(Grid g, std::span<const double> values) {
  if (values.size() != g.size()) throw std::invalid_argument("from_physical: size mismatch");
  SpectralField f(g);
  for (std::size_t i = 0; i < values.size(); ++i) f.coef_[i] = values[i];
  fft_plan(g.dim, g.n).forward(f.coef_);
  // The Nyquist row carries no signed frequency; drop it.
  for_each_mode(g, [&](const Mode& m) {
    if (m.kmax_axis >= g.n / 2) f.coef_[m.index] = 0.0;
  });
  return f;
}

SpectralField SpectralField::from_function(Grid g, const std::function<double(double, double)>& fn) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = g.point(i);
    v[i] = fn(p[0], p[1]);
  }
  return from_physical(g, v);
}

std::vector<double> SpectralField::physical() const {
  std::vector<cplx> work(coef_);
  fft_plan(grid_.dim, grid_.n).inverse(work);
  std::vector<double> out(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real();
  return out;
}

double SpectralField::norm_l2() const {
  double s = 0.0;
  for (const auto& c : coef_) s += std::norm(c);
  return std::sqrt(torus_volume(grid_.dim) * s);
}

double SpectralField::physical_norm_l2() const {
  const auto v = physical();
  double s = 0.0;
  for (double x : v) s += x * x;
  const double cell = grid_.dim == 1 ? grid_.spacing() : grid_.spacing() * grid_.spacing();
  return std::sqrt(cell * s);
}

double SpectralField::grad_norm_l2() const {
  double s = 0.0;
  for_each_mode(grid_, [&](const Mode& m) { s += m.ksq * std::norm(coef_[m.index]); });
  return std::sqrt(torus_volume(grid_.dim) * s);
}

double SpectralField::hermitian_defect() const {
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < coef_.size(); ++i) {
    scale = std::max(scale, std::abs(coef_[i]));
    worst = std::max(worst, std::abs(coef_[i] - std::conj(coef_[mirror_index(grid_, i)])));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

void SpectralField::dealias() {
  const double lim = grid_.dealias_limit();
  for_each_mode(grid_, [&](const Mode& m) {
    if (m.kmax_axis > lim || m.kmax_axis >= grid_.n / 2) coef_[m.index] = 0.0;
  });
}

void SpectralField::symmetrize() {
  std::vector<cplx> out(coef_.size());
  for (std::size_t i = 0; i < coef_.size(); ++i)
    out[i] = 0.5 * (coef_[i] + std::conj(coef_[mirror_index(grid_, i)]));
  coef_ = std::move(out);
}

void SpectralField::apply_multiplier(const std::function<double(const Mode&)>& mult) {
  for_each_mode(grid_, [&](const Mode& m) { coef_[m.index] *= mult(m); });
}

SpectralField SpectralField::with_multiplier(const std::function<double(const Mode&)>& mult) const {
  SpectralField out(*this);
  out.apply_multiplier(mult);
  return out;
}

bool SpectralField::is_zero() const {
  for (const auto& c : coef_)
    if (c != cplx{0.0, 0.0}) return false;
  return true;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (!(o.grid_ == grid_)) throw std::invalid_argument("SpectralField: grid mismatch");
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += o.coef_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (!(o.grid_ == grid_)) throw std::invalid_argument("SpectralField: grid mismatch");
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] -= o.coef_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coef_) c *= s;
  return *this;
}

double inner_l2(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("inner_l2: grid mismatch");
  double s = 0.0;
  const auto ca = a.coefficients(), cb = b.coefficients();
  for (std::size_t i = 0; i < ca.size(); ++i) s += (ca[i] * std::conj(cb[i])).real();
  return torus_volume(a.grid().dim) * s;
}

}  // namespace oscillab
