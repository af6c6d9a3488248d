#pragma once

#include "core/diffops.hpp"
#include "core/interp.hpp"

namespace veloreg {

struct TimeGrid {
  int nt = 4;

  double dt() const { return 1.0 / nt; }
  void validate() const {
    if (nt < 1) fail(Errc::invalid_argument, "time grid needs at least one step");
  }
};

// All nt+1 time slices of a transported quantity; slot 0 is the initial
// condition, bit-exact.
struct TrajectoryStore {
  std::vector<ScalarField> slices;

  const ScalarField& initial() const { return slices.front(); }
  const ScalarField& final() const { return slices.back(); }
  int nt() const { return static_cast<int>(slices.size()) - 1; }
};

// Second-order Runge-Kutta backtrace of the characteristics of the stationary
// velocity v over one step:
//   y* = x - direction*dt*v(x)
//   y  = x - direction*(dt/2)*(v(x) + v(y*))
// with v(y*) evaluated through the configured interpolation variant
// (3 interpolation sweeps). direction +1 serves the state equation,
// -1 the reversed-time solves.
DeparturePoints trace_characteristics(const VectorField& v, double dt, int direction,
                                      InterpVariant variant);

// One trace yielding both views of the same step: the wrapped departure
// points and the unwrapped displacement y(x) - x (used to accumulate
// deformation maps across the periodic seam).
struct TraceStep {
  DeparturePoints points;
  VectorField displacement;
};
TraceStep trace_step(const VectorField& v, double dt, int direction, InterpVariant variant);

// Displacement-only view of the trace.
VectorField trace_displacement(const VectorField& v, double dt, int direction, InterpVariant variant);

// State equation dm/dt + v.grad(m) = 0, m(0) = m0. The departure points are
// computed once (stationary v) and reused across the nt steps; pass `dep` to
// reuse an existing trace.
TrajectoryStore solve_state(const VectorField& v, const ScalarField& m0, const TimeGrid& tg,
                            InterpVariant variant, const DeparturePoints* dep = nullptr);

// Adjoint/continuity equation -dl/dt - div(l v) = 0 solved in reversed time
// from the final condition. Each step advects along the reversed-time trace
// and applies the integrating factor exp(dt * mean of div v at the arrival
// and departure ends of the characteristic).
TrajectoryStore solve_adjoint(const VectorField& v, const ScalarField& lambda_final,
                              const TimeGrid& tg, InterpVariant variant, DerivBackend backend,
                              const DeparturePoints* dep_rev = nullptr);

// Incremental state equation dmt/dt + v.grad(mt) = -vt.grad(m), mt(0) = 0,
// with the source integrated by the trapezoid rule along each characteristic.
TrajectoryStore solve_inc_state(const VectorField& v, const VectorField& vt,
                                const TrajectoryStore& m_traj, const TimeGrid& tg,
                                InterpVariant variant, DerivBackend backend,
                                const DeparturePoints* dep = nullptr);

// Incremental adjoint: the same continuity operator as solve_adjoint applied
// to lt.
TrajectoryStore solve_inc_adjoint(const VectorField& v, const ScalarField& lt_final,
                                  const TimeGrid& tg, InterpVariant variant, DerivBackend backend,
                                  const DeparturePoints* dep_rev = nullptr);

}  // namespace veloreg
