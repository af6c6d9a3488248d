#pragma once

#include <optional>

#include "core/rng.hpp"
#include "core/transport.hpp"

namespace veloreg {

enum class SynthCase { Blobs, SinSq };

struct SynthOptions {
  Grid grid;
  SynthCase scase = SynthCase::Blobs;
  std::uint64_t seed = 42;
  double amplitude = 0.3;  // peak velocity magnitude
  int velocity_kmax = 2;   // band limit per axis
  bool with_labels = false;
  TimeGrid timegrid;
  InterpVariant variant = InterpVariant::Bspline;
};

struct SynthOutput {
  ScalarField reference;
  VectorField velocity;  // ground truth v*
  ScalarField templ;     // reference advected by v*
  std::optional<LabelMap> labels;
};

// (sin^2(8 x1) + sin^2(2 x2) + sin^2(4 x3)) / 3
ScalarField make_sinsq(const Grid& g);

// Periodic Gaussian mixture in [0, 1].
ScalarField make_blobs(const Grid& g, Rng& rng);

// Random band-limited trigonometric velocity, rescaled so max |v| equals
// `amplitude` (componentwise max over the field).
VectorField make_bandlimited_velocity(const Grid& g, Rng& rng, double amplitude, int kmax);

// Two-label map from reference intensity thresholds.
LabelMap make_threshold_labels(const ScalarField& reference);

SynthOutput make_synthetic(const SynthOptions& opt);

}  // namespace veloreg
