#include "oscillab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace oscillab {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FftPlan::FftPlan(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("FftPlan: dim must be 1 or 2");
  if (n < 2) throw std::invalid_argument("FftPlan: n must be >= 2");
  std::vector<cplx> scratch(size());
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (dim == 1) {
    fwd_ = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
    inv_ = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
  } else {
    fwd_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, flags);
    inv_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, flags);
  }
  if (!fwd_ || !inv_) throw std::runtime_error("FftPlan: FFTW planning failed");
}

FftPlan::~FftPlan() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

std::size_t FftPlan::size() const {
  return dim_ == 1 ? static_cast<std::size_t>(n_)
                   : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
}

void FftPlan::forward(std::span<cplx> data) const {
  if (data.size() != size()) throw std::invalid_argument("FftPlan::forward: size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), buf, buf);
  const double scale = 1.0 / static_cast<double>(size());
  for (auto& c : data) c *= scale;
}

void FftPlan::inverse(std::span<cplx> data) const {
  if (data.size() != size()) throw std::invalid_argument("FftPlan::inverse: size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(inv_), buf, buf);
}

const FftPlan& fft_plan(int dim, int n) {
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[{dim, n}];
  if (!slot) slot = std::make_unique<FftPlan>(dim, n);
  return *slot;
}

}  // namespace oscillab
