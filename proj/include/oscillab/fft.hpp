#pragma once

#include <complex>
#include <span>

namespace oscillab {

using cplx = std::complex<double>;

/// In-place complex DFT on a periodic 1D line or 2D square, backed by FFTW.
///
/// forward() computes u_hat[k] = N^{-dim} sum_x u[x] exp(-i k x), so that
/// inverse() is the plain synthesis sum. Execution is reentrant; plans are
/// created once per (dim, n) under a lock and shared.
class FftPlan {
 public:
  FftPlan(int dim, int n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void forward(std::span<cplx> data) const;
  void inverse(std::span<cplx> data) const;

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t size() const;

 private:
  int dim_;
  int n_;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

/// Shared plan for the given shape.
const FftPlan& fft_plan(int dim, int n);

}  // namespace oscillab
