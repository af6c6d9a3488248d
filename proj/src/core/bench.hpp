#pragma once

#include <string>
#include <string_view>

#include "core/optim.hpp"
#include "core/synth.hpp"

namespace veloreg {

// Analytic per-point operation model for the computational kernels. FLOPS
// count adds/multiplies as one and fused multiply-adds as two; MOPS assume
// every grid value is loaded exactly once. Interpolation moves five floats
// per target point (three coordinates in, one value in, one out).
struct KernelIntensity {
  double flops_per_point = 0.0;
  double bytes_per_point = 0.0;

  double intensity() const { return bytes_per_point > 0.0 ? flops_per_point / bytes_per_point : 0.0; }
};

// kernel is one of: prefilter, linear, lagrange, bspline, fd8-partial,
// copy-baseline.
KernelIntensity analytic_intensity(std::string_view kernel);

// Device peak numbers are configuration inputs; defaults are kept as
// reference metadata only and never asserted against measurements.
struct DeviceModel {
  double peak_gflops = 14000.0;
  double peak_bandwidth_gbs = 900.0;

  double intensity() const { return peak_gflops / peak_bandwidth_gbs; }
};

// A kernel is memory-bound when its arithmetic intensity sits below the
// device's flops-to-bandwidth ratio.
bool memory_bound(const KernelIntensity& k, const DeviceModel& d);

struct BenchRow {
  std::string kernel;
  int n = 0;
  double time_s = 0.0;
  double bytes = 0.0;    // modeled, never hardware counters
  double eff_bw = 0.0;   // bytes / time
  double rel_err = 0.0;
  double intensity = 0.0;

  std::string csv_line() const;
};

inline constexpr const char* kBenchCsvHeader = "kernel,N,time_s,bytes,eff_bw,rel_err,intensity";

// Relative L2 error of the x3 partial derivative of sin(w x3) + cos(w x3)
// against the analytic derivative, for w = 1 .. N/2. The finite-difference
// backend is evaluated on double-precision samples through the same stencil
// kernel so the sweep resolves its truncation error below the FP32 floor;
// the spectral backend runs the production single-precision pipeline.
std::vector<std::pair<int, double>> derivative_accuracy_sweep(int n, DerivBackend backend);

// The scattered-interpolation accuracy experiment: the synthetic test
// function sampled on an n^3 grid and evaluated at grid points perturbed
// uniformly in [-pert_frac*h, +pert_frac*h] per axis. Timing is averaged
// over `reps` kernel calls (prefiltering included for the B-spline variant).
BenchRow interp_accuracy_bench(int n, InterpVariant variant, std::uint64_t seed, double pert_frac,
                               int reps);

// Forward-then-backward advection of a synthetic image by a synthetic
// band-limited velocity; reports the relative round-trip mismatch. Two
// solves at nt = 4 cost 14 interpolation sweeps.
BenchRow advect_roundtrip_bench(int n, InterpVariant variant, int nt, std::uint64_t seed);

// Wall-time and model-bandwidth measurement of one kernel.
BenchRow throughput_bench(std::string_view kernel, int n, int reps, std::uint64_t seed);

}  // namespace veloreg
