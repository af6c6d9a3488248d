#pragma once

#include "core/grid.hpp"

namespace veloreg {

enum class DerivBackend { Fd8, Spectral };

struct RegularizationConfig {
  double beta = 5e-4;   // regularization weight, > 0
  double gamma = 1e-4;  // divergence-penalty weight, >= 0

  void validate() const {
    if (!(beta > 0.0)) fail(Errc::invalid_argument, "beta must be positive");
    if (gamma < 0.0) fail(Errc::invalid_argument, "gamma must be non-negative");
  }
};

// 9-point centered first difference of 8th order along `axis` (0-based) with
// periodic wrap. Taps are accumulated in double precision regardless of T.
template <typename T>
void fd8_partial_raw(const T* in, T* out, const std::array<int, 3>& dims, int axis, double h);

extern template void fd8_partial_raw<float>(const float*, float*, const std::array<int, 3>&, int, double);
extern template void fd8_partial_raw<double>(const double*, double*, const std::array<int, 3>&, int, double);

ScalarField fd8_partial(const ScalarField& f, int axis);
VectorField fd8_gradient(const ScalarField& f);
ScalarField fd8_divergence(const VectorField& u);

ScalarField spectral_partial(const ScalarField& f, int axis);
VectorField spectral_gradient(const ScalarField& f);
ScalarField spectral_divergence(const VectorField& u);

VectorField gradient(const ScalarField& f, DerivBackend b);
ScalarField divergence(const VectorField& u, DerivBackend b);

// Applies A = -lap - gamma*grad(div), i.e. the per-mode symbol
// |k|^2 I + gamma k k^T, with the zero mode passed through unchanged.
// The caller applies beta.
VectorField apply_regularization(const VectorField& v, const RegularizationConfig& cfg);

// (1/beta) A^{-1} r via the closed-form per-mode inverse
// I/|k|^2 - gamma k k^T / (|k|^4 (1+gamma)); identity on the zero mode.
VectorField apply_inverse_regularization(const VectorField& r, const RegularizationConfig& cfg);

}  // namespace veloreg
