#include "core/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>

namespace veloreg {

namespace {
constexpr int kSlots = 4;
}

struct SpectralWorkspace::Impl {
  float* real = nullptr;
  fftwf_complex* spec[kSlots] = {nullptr, nullptr, nullptr, nullptr};
  fftwf_plan fwd = nullptr;
  fftwf_plan inv = nullptr;
};

SpectralWorkspace::SpectralWorkspace(const Grid& g) : dims_(g.dims) {
  nreal_ = g.size();
  nspec_ = static_cast<std::int64_t>(dims_[0]) * dims_[1] * (dims_[2] / 2 + 1);
  impl_ = new Impl;
  impl_->real = fftwf_alloc_real(static_cast<std::size_t>(nreal_));
  for (int s = 0; s < kSlots; ++s) {
    impl_->spec[s] = fftwf_alloc_complex(static_cast<std::size_t>(nspec_));
  }
  impl_->fwd = fftwf_plan_dft_r2c_3d(dims_[0], dims_[1], dims_[2], impl_->real, impl_->spec[0],
                                     FFTW_ESTIMATE);
  impl_->inv = fftwf_plan_dft_c2r_3d(dims_[0], dims_[1], dims_[2], impl_->spec[0], impl_->real,
                                     FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->inv) fail(Errc::internal, "FFT planning failed");
}

SpectralWorkspace::~SpectralWorkspace() {
  if (!impl_) return;
  fftwf_destroy_plan(impl_->fwd);
  fftwf_destroy_plan(impl_->inv);
  fftwf_free(impl_->real);
  for (int s = 0; s < kSlots; ++s) fftwf_free(impl_->spec[s]);
  delete impl_;
}

SpectralWorkspace& SpectralWorkspace::for_grid(const Grid& g) {
  static std::mutex cache_mu;
  static std::map<std::array<int, 3>, std::unique_ptr<SpectralWorkspace>> cache;
  std::lock_guard<std::mutex> lock(cache_mu);
  auto it = cache.find(g.dims);
  if (it == cache.end()) {
    it = cache.emplace(g.dims, std::unique_ptr<SpectralWorkspace>(new SpectralWorkspace(g))).first;
  }
  return *it->second;
}

void SpectralWorkspace::forward(const float* in, int slot) {
  std::memcpy(impl_->real, in, static_cast<std::size_t>(nreal_) * sizeof(float));
  fftwf_execute_dft_r2c(impl_->fwd, impl_->real, impl_->spec[slot]);
}

void SpectralWorkspace::inverse(int slot, float* out) {
  // c2r transforms destroy their input, which is fine: every caller fills the
  // slot anew per operation.
  fftwf_execute_dft_c2r(impl_->inv, impl_->spec[slot], impl_->real);
  const float scale = 1.0f / static_cast<float>(nreal_);
  const std::int64_t n = nreal_;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = impl_->real[i] * scale;
}

std::complex<float>* SpectralWorkspace::spec(int slot) {
  return reinterpret_cast<std::complex<float>*>(impl_->spec[slot]);
}

}  // namespace veloreg
