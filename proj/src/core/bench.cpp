#include "core/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace veloreg {

KernelIntensity analytic_intensity(std::string_view kernel) {
  if (kernel == "prefilter") return {22.0, 8.0};
  if (kernel == "linear") return {30.0, 20.0};
  if (kernel == "lagrange") return {221.0, 20.0};
  if (kernel == "bspline") return {294.0, 20.0};  // evaluation only, prefilter modeled separately
  if (kernel == "fd8-partial") return {12.0, 8.0};
  if (kernel == "copy-baseline") return {0.0, 8.0};
  fail(Errc::invalid_argument, "unknown benchmark kernel '" + std::string(kernel) + "'");
}

bool memory_bound(const KernelIntensity& k, const DeviceModel& d) {
  return k.intensity() < d.intensity();
}

std::string BenchRow::csv_line() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.6e,%.6e,%.6e,%.6e,%.6g", kernel.c_str(), n, time_s, bytes,
                eff_bw, rel_err, intensity);
  return buf;
}

std::vector<std::pair<int, double>> derivative_accuracy_sweep(int n, DerivBackend backend) {
  const Grid g = make_grid({n, n, n});
  std::vector<std::pair<int, double>> rows;
  rows.reserve(static_cast<std::size_t>(n) / 2);

  const std::size_t total = static_cast<std::size_t>(g.size());
  std::vector<double> fd_in, fd_out;
  if (backend == DerivBackend::Fd8) {
    fd_in.resize(total);
    fd_out.resize(total);
  }

  for (int w = 1; w <= n / 2; ++w) {
    double err2 = 0.0, ref2 = 0.0;
    if (backend == DerivBackend::Fd8) {
      for (int i3 = 0; i3 < n; ++i3) {
        const double x3 = g.coord(2, i3);
        const double val = std::sin(w * x3) + std::cos(w * x3);
        for (std::int64_t line = 0; line < g.size() / n; ++line) {
          fd_in[static_cast<std::size_t>(line * n + i3)] = val;
        }
      }
      fd8_partial_raw(fd_in.data(), fd_out.data(), g.dims, 2, g.spacing[2]);
      for (int i3 = 0; i3 < n; ++i3) {
        const double x3 = g.coord(2, i3);
        const double exact = w * (std::cos(w * x3) - std::sin(w * x3));
        const double got = fd_out[static_cast<std::size_t>(i3)];  // constant across lines
        err2 += (got - exact) * (got - exact);
        ref2 += exact * exact;
      }
    } else {
      const ScalarField f = make_field(g, [w](double, double, double x3) {
        return std::sin(w * x3) + std::cos(w * x3);
      });
      const ScalarField d = spectral_partial(f, 2);
      const auto [n1, n2, n3] = g.dims;
      for (int i1 = 0; i1 < n1; ++i1) {
        for (int i2 = 0; i2 < n2; ++i2) {
          for (int i3 = 0; i3 < n3; ++i3) {
            const double x3 = g.coord(2, i3);
            const double exact = w * (std::cos(w * x3) - std::sin(w * x3));
            const double got = d.at(i1, i2, i3);
            err2 += (got - exact) * (got - exact);
            ref2 += exact * exact;
          }
        }
      }
    }
    rows.emplace_back(w, std::sqrt(err2 / ref2));
  }
  return rows;
}

namespace {

// Grid nodes perturbed per axis by uniform draws in [-pert*h, +pert*h],
// in lexicographic node order (three draws per node).
DeparturePoints perturbed_points(const Grid& g, std::uint64_t seed, double pert_frac) {
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(g.size());
  std::vector<double> x1(n), x2(n), x3(n);
  const auto [n1, n2, n3] = g.dims;
  std::size_t m = 0;
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      for (int i3 = 0; i3 < n3; ++i3, ++m) {
        x1[m] = g.coord(0, i1) + rng.uniform(-pert_frac, pert_frac) * g.spacing[0];
        x2[m] = g.coord(1, i2) + rng.uniform(-pert_frac, pert_frac) * g.spacing[1];
        x3[m] = g.coord(2, i3) + rng.uniform(-pert_frac, pert_frac) * g.spacing[2];
      }
    }
  }
  return make_departure_points(g, x1, x2, x3);
}

double rel_l2_points(const std::vector<float>& got, const DeparturePoints& pts,
                     double (*fn)(double, double, double)) {
  double err2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double exact = fn(pts.x1[i], pts.x2[i], pts.x3[i]);
    const double d = static_cast<double>(got[i]) - exact;
    err2 += d * d;
    ref2 += exact * exact;
  }
  return std::sqrt(err2 / ref2);
}

double sinsq_fn(double x1, double x2, double x3) {
  const double s1 = std::sin(8.0 * x1);
  const double s2 = std::sin(2.0 * x2);
  const double s3 = std::sin(4.0 * x3);
  return (s1 * s1 + s2 * s2 + s3 * s3) / 3.0;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchRow interp_accuracy_bench(int n, InterpVariant variant, std::uint64_t seed, double pert_frac,
                               int reps) {
  if (reps < 1) fail(Errc::invalid_argument, "reps must be positive");
  const Grid g = make_grid({n, n, n});
  const ScalarField f = make_sinsq(g);
  const DeparturePoints pts = perturbed_points(g, seed, pert_frac);

  ScalarField out(g);
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) {
    out = interp_field(f, pts, variant);
  }
  const double per_call = seconds_since(t0) / reps;

  BenchRow row;
  row.kernel = to_string(variant);
  row.n = n;
  row.time_s = per_call;
  row.bytes = 20.0 * static_cast<double>(g.size());
  row.eff_bw = row.bytes / per_call;
  row.rel_err = rel_l2_points(out.values, pts, sinsq_fn);
  row.intensity = analytic_intensity(to_string(variant)).intensity();
  return row;
}

BenchRow advect_roundtrip_bench(int n, InterpVariant variant, int nt, std::uint64_t seed) {
  const Grid g = make_grid({n, n, n});
  Rng rng(seed);
  const ScalarField image = make_blobs(g, rng);
  VectorField v = make_bandlimited_velocity(g, rng, 0.5, 2);
  const TimeGrid tg{nt};

  const auto t0 = std::chrono::steady_clock::now();
  const ScalarField forward = solve_state(v, image, tg, variant).final();
  VectorField v_back = v;
  scale(v_back, -1.0f);
  const ScalarField round_trip = solve_state(v_back, forward, tg, variant).final();
  const double elapsed = seconds_since(t0);

  BenchRow row;
  row.kernel = to_string(variant);
  row.n = n;
  row.time_s = elapsed;
  // Two advection solves: 2*(d + nt) interpolation sweeps at 20 B per point.
  row.bytes = 2.0 * (3.0 + nt) * 20.0 * static_cast<double>(g.size());
  row.eff_bw = row.bytes / elapsed;
  row.rel_err = norm2(subtract(round_trip, image)) / norm2(image);
  row.intensity = analytic_intensity(to_string(variant)).intensity();
  return row;
}

BenchRow throughput_bench(std::string_view kernel, int n, int reps, std::uint64_t seed) {
  if (reps < 1) fail(Errc::invalid_argument, "reps must be positive");
  const Grid g = make_grid({n, n, n});
  const KernelIntensity model = analytic_intensity(kernel);
  const std::size_t total = static_cast<std::size_t>(g.size());

  BenchRow row;
  row.kernel = std::string(kernel);
  row.n = n;
  row.bytes = model.bytes_per_point * static_cast<double>(total);
  row.intensity = model.intensity();

  const ScalarField f = make_sinsq(g);
  double per_call = 0.0;

  if (kernel == "copy-baseline") {
    std::vector<float> dst(total);
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
      const float* src = f.values.data();
      float* out = dst.data();
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i) out[i] = src[i];
    }
    per_call = seconds_since(t0) / reps;
    row.rel_err = 0.0;
  } else if (kernel == "fd8-partial") {
    ScalarField out(g);
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
      fd8_partial_raw(f.values.data(), out.values.data(), g.dims, 2, g.spacing[2]);
    }
    per_call = seconds_since(t0) / reps;
    // d/dx3 of the test function is (4/3) sin(8 x3).
    double err2 = 0.0, ref2 = 0.0;
    const auto [n1, n2, n3] = g.dims;
    for (int i1 = 0; i1 < n1; ++i1) {
      for (int i2 = 0; i2 < n2; ++i2) {
        for (int i3 = 0; i3 < n3; ++i3) {
          const double exact = 4.0 / 3.0 * std::sin(8.0 * g.coord(2, i3));
          const double d = static_cast<double>(out.at(i1, i2, i3)) - exact;
          err2 += d * d;
          ref2 += exact * exact;
        }
      }
    }
    row.rel_err = std::sqrt(err2 / ref2);
  } else if (kernel == "prefilter") {
    CoefficientField coeffs{ScalarField(g)};
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) coeffs = prefilter_bspline(f);
    per_call = seconds_since(t0) / reps;
    // Reconstruction error of the spline through the coefficients at the nodes.
    ScalarField recon(g);
    interp_eval(coeffs, identity_points(g), recon.values.data());
    row.rel_err = norm2(subtract(recon, f)) / norm2(f);
  } else {
    const InterpVariant variant = kernel == "linear"   ? InterpVariant::Linear
                                  : kernel == "lagrange" ? InterpVariant::Lagrange
                                                         : InterpVariant::Bspline;
    const DeparturePoints pts = perturbed_points(g, seed, 0.5);
    ScalarField out(g);
    if (variant == InterpVariant::Bspline) {
      // GPU-TXTSPL without prefilter: time the evaluation alone.
      const CoefficientField coeffs = prefilter_bspline(f);
      const auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r) interp_eval(coeffs, pts, out.values.data());
      per_call = seconds_since(t0) / reps;
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r) interp_eval(f, pts, variant, out.values.data());
      per_call = seconds_since(t0) / reps;
    }
    row.rel_err = rel_l2_points(out.values, pts, sinsq_fn);
  }

  row.time_s = per_call;
  row.eff_bw = row.bytes / per_call;
  return row;
}

}  // namespace veloreg
