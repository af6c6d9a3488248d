#pragma once

#include <functional>
#include <string>

#include "core/counters.hpp"
#include "core/metrics.hpp"
#include "core/transport.hpp"

namespace veloreg {

struct ContinuationConfig {
  double beta0 = 1e-1;       // first continuation stage
  double factor = 10.0;      // geometric reduction per stage
  double stage_gtol = 2.5e-1;  // loose tolerance for the intermediate stages
  bool enabled = true;
};

struct SolverConfig {
  RegularizationConfig reg;  // target beta 5e-4, gamma 1e-4
  TimeGrid timegrid;         // nt = 4
  double gtol = 5e-2;        // relative reduced-gradient tolerance
  int max_newton = 50;
  int max_pcg = 500;
  double armijo_c = 1e-4;
  int max_linesearch = 10;
  double forcing_max = 0.5;  // superlinear forcing: eta_k = min(forcing_max, sqrt(gk/g0))
  ContinuationConfig continuation;
  InterpVariant interp = InterpVariant::Bspline;
  DerivBackend deriv = DerivBackend::Fd8;

  void validate() const;
};

// Cached solver state at the current velocity iterate: the forward state
// trajectory plus both traced departure-point sets. Keeping these here is
// what makes the per-call operation counts match the complexity model
// (the Hessian matvec never re-traces characteristics).
struct IteratePoint {
  double objective = 0.0;
  TrajectoryStore m_traj;
  DeparturePoints fwd_points;
  DeparturePoints bwd_points;  // filled by evaluate_gradient
  bool has_bwd = false;
};

// J(v) = 1/2 ||m(.,1) - m1||^2 + beta/2 <A v, v>, solving the state equation
// and returning the trajectory for reuse.
IteratePoint evaluate_objective(const VectorField& v, const ScalarField& m0, const ScalarField& m1,
                                const SolverConfig& cfg);

// Reduced gradient g = beta*A*v + sum_j w_j lambda(t_j) grad m(t_j) with
// trapezoidal weights w_j over the nt+1 slices. Consumes the state trajectory
// of `point` and caches the reversed-time trace there.
VectorField evaluate_gradient(const VectorField& v, const ScalarField& m1, const SolverConfig& cfg,
                              IteratePoint& point);

// Gauss-Newton Hessian application: solve the incremental state equation for
// mt, set lt(1) = -mt(1), solve the incremental adjoint, and return
// beta*A*vt + sum_j w_j lt(t_j) grad m(t_j).
VectorField hessian_matvec(const VectorField& vt, const VectorField& v, const SolverConfig& cfg,
                           const IteratePoint& point);

struct PcgResult {
  VectorField x;
  int iterations = 0;  // number of Hessian applications
  bool negative_curvature = false;
  double rel_residual = 0.0;
};

// Preconditioned CG for H dv = -g with the spectral preconditioner
// (1/beta) A^{-1}. Stops at relative residual eta or max_pcg iterations.
// Negative curvature returns the current iterate (the preconditioned
// gradient direction when detected on the first iteration).
PcgResult pcg_solve(const std::function<VectorField(const VectorField&)>& matvec,
                    const VectorField& g, double eta, const SolverConfig& cfg);

struct LineSearchResult {
  bool accepted = false;
  double alpha = 0.0;
  IteratePoint point;  // evaluation at v + alpha*dv when accepted
};

// Backtracking Armijo search over alpha in {1, 1/2, 1/4, ...}. Throws when
// <g, dv> is not a descent direction.
LineSearchResult armijo_linesearch(const VectorField& v, const VectorField& dv, const VectorField& g,
                                   double j0, const ScalarField& m0, const ScalarField& m1,
                                   const SolverConfig& cfg);

enum class SolveStatus { Converged, IterationLimit, LineSearchFailed };

const char* to_string(SolveStatus s);

struct NewtonIterationEntry {
  int stage = 0;
  double beta = 0.0;
  double objective = 0.0;
  double grad_rel = 0.0;
  int pcg_iterations = 0;
  double step_length = 0.0;
  OperatorCounters counters;  // cumulative snapshot at the end of the iteration
};

struct RegistrationReport {
  SolveStatus status = SolveStatus::Converged;
  double mismatch_rel = 0.0;
  double grad_rel = 0.0;
  double objective = 0.0;
  int newton_iterations = 0;
  int hessian_matvecs = 0;
  std::vector<NewtonIterationEntry> log;
  OperatorCounters counters;
  KernelTimers timers;
  double total_seconds = 0.0;
  DetFStats detf;
  bool has_detf = false;
  SolverConfig config;

  std::string to_json() const;
};

struct GaussNewtonResult {
  VectorField velocity;
  ScalarField m_final;
  RegistrationReport report;
};

// Outer solver: beta continuation from continuation.beta0 down to reg.beta,
// warm-started, each stage running Newton iterations to the stage tolerance
// (gtol on the final stage). Gradient norms are measured relative to the
// gradient at v = 0, which is independent of beta.
GaussNewtonResult gauss_newton_solve(const ScalarField& m0, const ScalarField& m1,
                                     const SolverConfig& cfg);

struct RegistrationResult {
  VectorField velocity;
  ScalarField warped;
  RegistrationReport report;
};

// End-to-end pipeline: transports the template toward the reference and
// appends deformation-map statistics to the report.
RegistrationResult register_images(const ScalarField& reference, const ScalarField& templ,
                                   const SolverConfig& cfg);

}  // namespace veloreg
