#pragma once

#include <chrono>
#include <cstdint>

namespace veloreg {

// Exact operation counts for the solver's computational kernels. One unit of
// a first-order count is one partial-derivative application (a gradient or a
// divergence contributes d = 3); one unit of fft_other is one per-component
// application of a high-order spectral operator; one unit of interp is one
// scattered evaluation sweep over a scalar field.
//
// The counters are thread-local: an operation is attributed to the thread
// that invoked it, which keeps concurrent solves independently scoped.
struct OperatorCounters {
  std::uint64_t fd_first_order = 0;
  std::uint64_t fft_first_order = 0;
  std::uint64_t fft_other = 0;
  std::uint64_t interp = 0;

  std::uint64_t first_order() const { return fd_first_order + fft_first_order; }

  OperatorCounters operator-(const OperatorCounters& o) const {
    return {fd_first_order - o.fd_first_order, fft_first_order - o.fft_first_order,
            fft_other - o.fft_other, interp - o.interp};
  }
};

OperatorCounters& counters();
void counters_reset();

// Accumulated wall time per kernel class, thread-local like the counters.
struct KernelTimers {
  double interp_s = 0.0;
  double first_order_s = 0.0;
  double fft_other_s = 0.0;
  double prefilter_s = 0.0;

  KernelTimers operator-(const KernelTimers& o) const {
    return {interp_s - o.interp_s, first_order_s - o.first_order_s,
            fft_other_s - o.fft_other_s, prefilter_s - o.prefilter_s};
  }
};

KernelTimers& kernel_timers();
void kernel_timers_reset();

class ScopedTimer {
 public:
  explicit ScopedTimer(double& slot)
      : slot_(slot), start_(std::chrono::steady_clock::now()) {}
  ~ScopedTimer() {
    slot_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  double& slot_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace veloreg
