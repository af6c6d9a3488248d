#include "core/synth.hpp"

#include <cmath>

namespace veloreg {

ScalarField make_sinsq(const Grid& g) {
  return make_field(g, [](double x1, double x2, double x3) {
    const double s1 = std::sin(8.0 * x1);
    const double s2 = std::sin(2.0 * x2);
    const double s3 = std::sin(4.0 * x3);
    return (s1 * s1 + s2 * s2 + s3 * s3) / 3.0;
  });
}

namespace {

double periodic_dist2(double x, double c) {
  double d = std::fabs(x - c);
  if (d > 0.5 * kTwoPi) d = kTwoPi - d;
  return d * d;
}

}  // namespace

ScalarField make_blobs(const Grid& g, Rng& rng) {
  struct Blob {
    double c[3];
    double inv_2s2;
    double amp;
  };
  std::vector<Blob> blobs(8);
  for (auto& b : blobs) {
    for (double& c : b.c) c = rng.uniform(0.0, kTwoPi);
    const double sigma = rng.uniform(0.45, 0.9);
    b.inv_2s2 = 1.0 / (2.0 * sigma * sigma);
    b.amp = rng.uniform(0.4, 1.0);
  }
  ScalarField f = make_field(g, [&](double x1, double x2, double x3) {
    double v = 0.0;
    for (const auto& b : blobs) {
      const double d2 = periodic_dist2(x1, b.c[0]) + periodic_dist2(x2, b.c[1]) + periodic_dist2(x3, b.c[2]);
      v += b.amp * std::exp(-d2 * b.inv_2s2);
    }
    return v;
  });
  const double peak = max_abs(f);
  if (peak > 0.0) scale(f, static_cast<float>(1.0 / peak));
  return f;
}

VectorField make_bandlimited_velocity(const Grid& g, Rng& rng, double amplitude, int kmax) {
  struct Mode {
    double k[3];
    double phase;
    double amp;
  };
  VectorField v(g);
  for (int c = 0; c < 3; ++c) {
    std::vector<Mode> modes(8);
    for (auto& m : modes) {
      // Reject the zero mode so the field has no drift component.
      do {
        for (double& k : m.k) k = rng.uniform_int(-kmax, kmax);
      } while (m.k[0] == 0.0 && m.k[1] == 0.0 && m.k[2] == 0.0);
      m.phase = rng.uniform(0.0, kTwoPi);
      m.amp = rng.uniform(0.3, 1.0);
    }
    v[c] = make_field(g, [&](double x1, double x2, double x3) {
      double s = 0.0;
      for (const auto& m : modes) {
        s += m.amp * std::sin(m.k[0] * x1 + m.k[1] * x2 + m.k[2] * x3 + m.phase);
      }
      return s;
    });
  }
  const double peak = max_abs(v);
  if (peak > 0.0) scale(v, static_cast<float>(amplitude / peak));
  return v;
}

LabelMap make_threshold_labels(const ScalarField& reference) {
  LabelMap m(reference.grid);
  const std::int64_t n = reference.grid.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const float v = reference.values[static_cast<std::size_t>(i)];
    m.labels[static_cast<std::size_t>(i)] = v > 0.5f ? 1 : (v > 0.25f ? 2 : 0);
  }
  return m;
}

SynthOutput make_synthetic(const SynthOptions& opt) {
  Rng rng(opt.seed);
  SynthOutput out;
  out.reference = opt.scase == SynthCase::SinSq ? make_sinsq(opt.grid) : make_blobs(opt.grid, rng);
  out.velocity = make_bandlimited_velocity(opt.grid, rng, opt.amplitude, opt.velocity_kmax);
  out.templ = solve_state(out.velocity, out.reference, opt.timegrid, opt.variant).final();
  if (opt.with_labels) out.labels = make_threshold_labels(out.reference);
  return out;
}

}  // namespace veloreg
