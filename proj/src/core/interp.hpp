#pragma once

#include "core/grid.hpp"

namespace veloreg {

enum class InterpVariant { Linear, Lagrange, Bspline };

const char* to_string(InterpVariant v);

// Backtracked characteristic coordinates for one semi-Lagrangian step, one
// point per grid node, stored per axis. Coordinates are wrapped into
// [0, 2pi) exactly once, at construction.
struct DeparturePoints {
  Grid grid;
  std::vector<float> x1, x2, x3;

  const std::vector<float>& axis(int a) const { return a == 0 ? x1 : (a == 1 ? x2 : x3); }
};

// Wraps (in double precision) and validates; throws on non-finite input.
DeparturePoints make_departure_points(const Grid& g, const std::vector<double>& x1,
                                      const std::vector<double>& x2, const std::vector<double>& x3);

// Identity points y(x) = x.
DeparturePoints identity_points(const Grid& g);

// B-spline coefficients c_ijk such that the cubic B-spline interpolant of c
// reproduces the source field at the grid nodes (up to the truncation of the
// 15-tap inverse filter).
struct CoefficientField {
  ScalarField c;
};

// Separable 15-tap FIR inverse of B-spline nodal sampling, taps
// sqrt(3) * z1^|n| with z1 = sqrt(3)-2, |n| <= 7, renormalized to unit DC
// gain, applied with periodic wrap along each axis in turn.
CoefficientField prefilter_bspline(const ScalarField& f);

// The 15 prefilter taps for offsets -7..7 (index 0 is offset -7).
const std::array<double, 15>& bspline_prefilter_taps();

// Scattered evaluation at the departure points. Each call counts as one
// interpolation sweep. The Bspline variant requires prefiltered coefficients.
void interp_eval(const ScalarField& f, const DeparturePoints& pts, InterpVariant variant, float* out);
void interp_eval(const CoefficientField& coeffs, const DeparturePoints& pts, float* out);

// Convenience wrapper that prefilters internally for the Bspline variant.
ScalarField interp_field(const ScalarField& f, const DeparturePoints& pts, InterpVariant variant);

}  // namespace veloreg
