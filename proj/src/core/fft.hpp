#pragma once

#include <complex>
#include <mutex>

#include "core/grid.hpp"

namespace veloreg {

// Cached single-precision real-to-complex transform workspace, one per grid
// shape. Plans use FFTW_ESTIMATE so planning is deterministic; a workspace is
// locked for the duration of one spectral operation (spectral calls are
// coarse, so contention is not a concern).
class SpectralWorkspace {
 public:
  static SpectralWorkspace& for_grid(const Grid& g);

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;
  ~SpectralWorkspace();

  std::mutex& mutex() { return mu_; }

  // Complex modes per field: n1 * n2 * (n3/2 + 1), x3 halved.
  std::int64_t spectral_size() const { return nspec_; }
  const std::array<int, 3>& dims() const { return dims_; }

  // Forward transform into the workspace's spectral buffer `slot` (0..3).
  void forward(const float* in, int slot);
  // Inverse transform of `slot` into `out`, including the 1/N normalization.
  void inverse(int slot, float* out);

  std::complex<float>* spec(int slot);

  // Symmetric integer wavenumber along `axis` for spectral index i.
  int wavenumber(int axis, int i) const {
    const int n = dims_[axis];
    return i <= n / 2 ? i : i - n;
  }
  // First-derivative wavenumber: the Nyquist mode of an odd operator on an
  // even grid is zeroed.
  int wavenumber_d1(int axis, int i) const {
    const int n = dims_[axis];
    if (i == n / 2) return 0;
    return i <= n / 2 ? i : i - n;
  }

 private:
  explicit SpectralWorkspace(const Grid& g);

  std::array<int, 3> dims_;
  std::int64_t nreal_ = 0;
  std::int64_t nspec_ = 0;
  std::mutex mu_;
  struct Impl;
  Impl* impl_ = nullptr;
};

}  // namespace veloreg
