#include "core/diffops.hpp"

#include <cmath>

#include "core/counters.hpp"
#include "core/fft.hpp"

namespace veloreg {

namespace {

// Central difference taps for offsets 1..4, divided by h at apply time.
constexpr double kFd8Tap[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};

void check_axis(int axis) {
  if (axis < 0 || axis > 2) fail(Errc::invalid_argument, "derivative axis must be 0, 1, or 2");
}

}  // namespace

template <typename T>
void fd8_partial_raw(const T* in, T* out, const std::array<int, 3>& dims, int axis, double h) {
  check_axis(axis);
  const int n = dims[axis];
  const double inv_h = 1.0 / h;
  std::int64_t stride = 1;
  for (int a = axis + 1; a < 3; ++a) stride *= dims[a];
  const std::int64_t total = static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  const std::int64_t nlines = total / n;

  // A "line" is one run of n samples along the differentiated axis. For
  // axis 1 the lines are indexed by (i1, i3) and are not contiguous.
  const std::int64_t n3 = dims[2];
  const std::int64_t plane = static_cast<std::int64_t>(dims[1]) * dims[2];

#pragma omp parallel for schedule(static)
  for (std::int64_t line = 0; line < nlines; ++line) {
    std::int64_t base;
    if (axis == 0) {
      base = line;
    } else if (axis == 1) {
      base = (line / n3) * plane + (line % n3);
    } else {
      base = line * n3;
    }
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int s = 1; s <= 4; ++s) {
        int ip = i + s;
        if (ip >= n) ip -= n;
        int im = i - s;
        if (im < 0) im += n;
        acc += kFd8Tap[s - 1] *
               (static_cast<double>(in[base + ip * stride]) - static_cast<double>(in[base + im * stride]));
      }
      out[base + i * stride] = static_cast<T>(acc * inv_h);
    }
  }
}

template void fd8_partial_raw<float>(const float*, float*, const std::array<int, 3>&, int, double);
template void fd8_partial_raw<double>(const double*, double*, const std::array<int, 3>&, int, double);

ScalarField fd8_partial(const ScalarField& f, int axis) {
  check_axis(axis);
  ScopedTimer t(kernel_timers().first_order_s);
  ScalarField out(f.grid);
  fd8_partial_raw(f.values.data(), out.values.data(), f.grid.dims, axis, f.grid.spacing[axis]);
  counters().fd_first_order += 1;
  return out;
}

VectorField fd8_gradient(const ScalarField& f) {
  VectorField g(f.grid);
  for (int a = 0; a < 3; ++a) g[a] = fd8_partial(f, a);
  return g;
}

ScalarField fd8_divergence(const VectorField& u) {
  ScalarField out = fd8_partial(u[0], 0);
  for (int a = 1; a < 3; ++a) {
    ScalarField d = fd8_partial(u[a], a);
    axpy(1.0f, d, out);
  }
  return out;
}

namespace {

// i*k multiply of slot `src` into slot `dst` for first derivatives along
// `axis`; the Nyquist mode is zeroed.
void spectral_d1_multiply(SpectralWorkspace& ws, int src, int dst, int axis) {
  const auto& d = ws.dims();
  const int n3c = d[2] / 2 + 1;
  const std::complex<float>* in = ws.spec(src);
  std::complex<float>* out = ws.spec(dst);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < d[0]; ++i1) {
    for (int i2 = 0; i2 < d[1]; ++i2) {
      std::int64_t m = (static_cast<std::int64_t>(i1) * d[1] + i2) * n3c;
      int k = 0;
      switch (axis) {
        case 0: k = ws.wavenumber_d1(0, i1); break;
        case 1: k = ws.wavenumber_d1(1, i2); break;
        default: break;
      }
      for (int i3 = 0; i3 < n3c; ++i3, ++m) {
        const float kk = static_cast<float>(axis == 2 ? ws.wavenumber_d1(2, i3) : k);
        const std::complex<float> v = in[m];
        out[m] = std::complex<float>(-kk * v.imag(), kk * v.real());
      }
    }
  }
}

void spectral_d1_accumulate(SpectralWorkspace& ws, int src, int dst, int axis) {
  const auto& d = ws.dims();
  const int n3c = d[2] / 2 + 1;
  const std::complex<float>* in = ws.spec(src);
  std::complex<float>* out = ws.spec(dst);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < d[0]; ++i1) {
    for (int i2 = 0; i2 < d[1]; ++i2) {
      std::int64_t m = (static_cast<std::int64_t>(i1) * d[1] + i2) * n3c;
      int k = 0;
      switch (axis) {
        case 0: k = ws.wavenumber_d1(0, i1); break;
        case 1: k = ws.wavenumber_d1(1, i2); break;
        default: break;
      }
      for (int i3 = 0; i3 < n3c; ++i3, ++m) {
        const float kk = static_cast<float>(axis == 2 ? ws.wavenumber_d1(2, i3) : k);
        const std::complex<float> v = in[m];
        out[m] += std::complex<float>(-kk * v.imag(), kk * v.real());
      }
    }
  }
}

}  // namespace

ScalarField spectral_partial(const ScalarField& f, int axis) {
  check_axis(axis);
  ScopedTimer t(kernel_timers().first_order_s);
  SpectralWorkspace& ws = SpectralWorkspace::for_grid(f.grid);
  std::lock_guard<std::mutex> lock(ws.mutex());
  ScalarField out(f.grid);
  ws.forward(f.values.data(), 0);
  spectral_d1_multiply(ws, 0, 1, axis);
  ws.inverse(1, out.values.data());
  counters().fft_first_order += 1;
  return out;
}

VectorField spectral_gradient(const ScalarField& f) {
  ScopedTimer t(kernel_timers().first_order_s);
  SpectralWorkspace& ws = SpectralWorkspace::for_grid(f.grid);
  std::lock_guard<std::mutex> lock(ws.mutex());
  VectorField g(f.grid);
  ws.forward(f.values.data(), 0);
  for (int a = 0; a < 3; ++a) {
    spectral_d1_multiply(ws, 0, 1, a);
    ws.inverse(1, g[a].values.data());
  }
  counters().fft_first_order += 3;
  return g;
}

ScalarField spectral_divergence(const VectorField& u) {
  ScopedTimer t(kernel_timers().first_order_s);
  SpectralWorkspace& ws = SpectralWorkspace::for_grid(u.grid());
  std::lock_guard<std::mutex> lock(ws.mutex());
  ScalarField out(u.grid());
  const std::int64_t ns = ws.spectral_size();
  std::complex<float>* acc = ws.spec(1);
  for (std::int64_t m = 0; m < ns; ++m) acc[m] = 0.0f;
  for (int a = 0; a < 3; ++a) {
    ws.forward(u[a].values.data(), 0);
    spectral_d1_accumulate(ws, 0, 1, a);
  }
  ws.inverse(1, out.values.data());
  counters().fft_first_order += 3;
  return out;
}

VectorField gradient(const ScalarField& f, DerivBackend b) {
  return b == DerivBackend::Fd8 ? fd8_gradient(f) : spectral_gradient(f);
}

ScalarField divergence(const VectorField& u, DerivBackend b) {
  return b == DerivBackend::Fd8 ? fd8_divergence(u) : spectral_divergence(u);
}

namespace {

enum class RegDir { Forward, Inverse };

// Shared driver for A and A^{-1}: both are per-mode 3x3 symmetric symbols in
// (k1,k2,k3) acting across the three spectral slots 0/1/2.
VectorField apply_reg_symbol(const VectorField& v, const RegularizationConfig& cfg, RegDir dir) {
  cfg.validate();
  ScopedTimer t(kernel_timers().fft_other_s);
  const Grid& g = v.grid();
  SpectralWorkspace& ws = SpectralWorkspace::for_grid(g);
  std::lock_guard<std::mutex> lock(ws.mutex());

  for (int a = 0; a < 3; ++a) ws.forward(v[a].values.data(), a);

  const auto& d = ws.dims();
  const int n3c = d[2] / 2 + 1;
  const double gamma = cfg.gamma;
  const double inv_beta = 1.0 / cfg.beta;
  std::complex<float>* s0 = ws.spec(0);
  std::complex<float>* s1 = ws.spec(1);
  std::complex<float>* s2 = ws.spec(2);

#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < d[0]; ++i1) {
    for (int i2 = 0; i2 < d[1]; ++i2) {
      const double k1 = ws.wavenumber(0, i1);
      const double k2 = ws.wavenumber(1, i2);
      std::int64_t m = (static_cast<std::int64_t>(i1) * d[1] + i2) * n3c;
      for (int i3 = 0; i3 < n3c; ++i3, ++m) {
        const double k3 = ws.wavenumber(2, i3);
        const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
        const std::complex<double> v1(s0[m]);
        const std::complex<double> v2(s1[m]);
        const std::complex<double> v3(s2[m]);
        std::complex<double> o1 = v1, o2 = v2, o3 = v3;
        if (ksq > 0.0) {
          const std::complex<double> kv = k1 * v1 + k2 * v2 + k3 * v3;
          if (dir == RegDir::Forward) {
            o1 = ksq * v1 + gamma * k1 * kv;
            o2 = ksq * v2 + gamma * k2 * kv;
            o3 = ksq * v3 + gamma * k3 * kv;
          } else {
            const double c = gamma / (ksq * ksq * (1.0 + gamma));
            o1 = v1 / ksq - c * k1 * kv;
            o2 = v2 / ksq - c * k2 * kv;
            o3 = v3 / ksq - c * k3 * kv;
          }
        }
        if (dir == RegDir::Inverse) {
          o1 *= inv_beta;
          o2 *= inv_beta;
          o3 *= inv_beta;
        }
        s0[m] = std::complex<float>(o1);
        s1[m] = std::complex<float>(o2);
        s2[m] = std::complex<float>(o3);
      }
    }
  }

  VectorField out(g);
  for (int a = 0; a < 3; ++a) ws.inverse(a, out[a].values.data());
  counters().fft_other += 3;
  return out;
}

}  // namespace

VectorField apply_regularization(const VectorField& v, const RegularizationConfig& cfg) {
  return apply_reg_symbol(v, cfg, RegDir::Forward);
}

VectorField apply_inverse_regularization(const VectorField& r, const RegularizationConfig& cfg) {
  return apply_reg_symbol(r, cfg, RegDir::Inverse);
}

}  // namespace veloreg
