#include <doctest.h>

#include <cmath>

#include "core/bench.hpp"
#include "core/optim.hpp"
#include "core/synth.hpp"

using namespace veloreg;

namespace {

SolverConfig small_config() {
  SolverConfig cfg;
  cfg.interp = InterpVariant::Bspline;
  cfg.deriv = DerivBackend::Fd8;
  return cfg;
}

struct Problem {
  ScalarField m0;  // template
  ScalarField m1;  // reference
};

Problem synth_problem(const Grid& g, std::uint64_t seed, double amplitude) {
  SynthOptions so;
  so.grid = g;
  so.seed = seed;
  so.amplitude = amplitude;
  SynthOutput sy = make_synthetic(so);
  return {std::move(sy.templ), std::move(sy.reference)};
}

VectorField random_field(const Grid& g, std::uint64_t seed) {
  Rng rng(seed);
  VectorField u(g);
  for (int c = 0; c < 3; ++c) {
    for (auto& x : u[c].values) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  return u;
}

}  // namespace

TEST_CASE("objective is zero for identical images at zero velocity") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(1);
  const ScalarField m = make_blobs(g, rng);
  const VectorField v(g);
  // nodal kernel: identity transport up to coordinate quantization
  SolverConfig cfg = small_config();
  cfg.interp = InterpVariant::Lagrange;
  const IteratePoint pt = evaluate_objective(v, m, m, cfg);
  CHECK(pt.objective <= 1e-9);
}

TEST_CASE("objective reduces to half the squared distance at zero velocity") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(2);
  const ScalarField m0 = make_blobs(g, rng);
  const ScalarField m1 = make_field(g, [](double x1, double, double) { return 0.5 * std::sin(x1); });
  const VectorField v(g);
  SolverConfig cfg = small_config();
  cfg.interp = InterpVariant::Lagrange;
  const IteratePoint pt = evaluate_objective(v, m0, m1, cfg);
  const ScalarField diff = subtract(m0, m1);
  // the state solve moves m0 through the identity map; only kernel rounding
  // separates the two values
  CHECK(pt.objective ==
        doctest::Approx(0.5 * inner_product(diff, diff)).epsilon(1e-4));
}

TEST_CASE("table-1 counter contract for objective, gradient, and matvec") {
  const Grid g = make_grid({16, 16, 16});
  const Problem prob = synth_problem(g, 3, 0.3);
  Rng rng(4);
  const VectorField v = make_bandlimited_velocity(g, rng, 0.2, 2);
  const VectorField vt = make_bandlimited_velocity(g, rng, 1.0, 2);

  for (int nt : {1, 2, 4, 8}) {
    SolverConfig cfg = small_config();
    cfg.timegrid.nt = nt;
    const std::uint64_t d = 3;
    const std::uint64_t unt = static_cast<std::uint64_t>(nt);

    counters_reset();
    IteratePoint pt = evaluate_objective(v, prob.m0, prob.m1, cfg);
    OperatorCounters c = counters();
    CHECK(c.first_order() == 0);
    CHECK(c.fft_other == d);
    CHECK(c.interp == d + unt);

    counters_reset();
    const VectorField grad = evaluate_gradient(v, prob.m1, cfg, pt);
    c = counters();
    CHECK(c.first_order() == d * (unt + 2));
    CHECK(c.fft_other == d);
    CHECK(c.interp == d + unt + 1);

    counters_reset();
    hessian_matvec(vt, v, cfg, pt);
    c = counters();
    CHECK(c.first_order() == d * (2 * unt + 3));
    CHECK(c.fft_other == d);
    CHECK(c.interp == d + (d + 2) * unt + 1);

    // spectral backend counts the same totals in the fft bucket
    cfg.deriv = DerivBackend::Spectral;
    counters_reset();
    IteratePoint pt2 = evaluate_objective(v, prob.m0, prob.m1, cfg);
    evaluate_gradient(v, prob.m1, cfg, pt2);
    c = counters();
    CHECK(c.fd_first_order == 0);
    CHECK(c.fft_first_order == d * (unt + 2));
    (void)grad;
  }
}

TEST_CASE("gradient vanishes at a perfect match") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(5);
  const ScalarField m = make_blobs(g, rng);
  const VectorField v(g);
  SolverConfig cfg = small_config();
  cfg.interp = InterpVariant::Lagrange;
  IteratePoint pt = evaluate_objective(v, m, m, cfg);
  const VectorField grad = evaluate_gradient(v, m, cfg, pt);
  CHECK(norm2(grad) <= 1e-4);  // coordinate-quantization noise only
}

TEST_CASE("gradient matches central finite differences of the objective") {
  const Grid g = make_grid({32, 32, 32});
  const Problem prob = synth_problem(g, 11, 0.3);
  SolverConfig cfg = small_config();

  Rng rng(5);
  const VectorField v = make_bandlimited_velocity(g, rng, 0.2, 2);
  IteratePoint pt = evaluate_objective(v, prob.m0, prob.m1, cfg);
  const VectorField grad = evaluate_gradient(v, prob.m1, cfg, pt);

  for (int trial = 0; trial < 3; ++trial) {
    const VectorField w = make_bandlimited_velocity(g, rng, 1.0, 2);
    const double gw = inner_product(grad, w);
    const double eps = 1e-3;
    VectorField vp = v, vm = v;
    axpy(static_cast<float>(eps), w, vp);
    axpy(static_cast<float>(-eps), w, vm);
    const double jp = evaluate_objective(vp, prob.m0, prob.m1, cfg).objective;
    const double jm = evaluate_objective(vm, prob.m0, prob.m1, cfg).objective;
    const double fd = (jp - jm) / (2 * eps);
    CHECK(std::fabs(gw - fd) <= 1e-2 * std::fabs(fd));
  }
}

TEST_CASE("gauss-newton hessian is symmetric at the zero-velocity base point") {
  const Grid g = make_grid({16, 16, 16});
  const Problem prob = synth_problem(g, 12, 0.3);
  SolverConfig cfg = small_config();
  const VectorField v(g);
  IteratePoint pt = evaluate_objective(v, prob.m0, prob.m1, cfg);
  evaluate_gradient(v, prob.m1, cfg, pt);

  const VectorField u = random_field(g, 21);
  const VectorField w = random_field(g, 22);
  const VectorField hu = hessian_matvec(u, v, cfg, pt);
  const VectorField hw = hessian_matvec(w, v, cfg, pt);
  const double lhs = inner_product(hu, w);
  const double rhs = inner_product(u, hw);
  CHECK(std::fabs(lhs - rhs) / (norm2(hu) * norm2(w)) <= 1e-4);
}

TEST_CASE("hessian matvec of zero is zero and mismatched points are rejected") {
  const Grid g = make_grid({16, 16, 16});
  const Problem prob = synth_problem(g, 13, 0.3);
  SolverConfig cfg = small_config();
  const VectorField v(g);
  IteratePoint pt = evaluate_objective(v, prob.m0, prob.m1, cfg);

  SUBCASE("missing reversed trace") {
    CHECK_THROWS_AS(hessian_matvec(v, v, cfg, pt), Error);
  }
  SUBCASE("zero input maps to zero") {
    evaluate_gradient(v, prob.m1, cfg, pt);
    const VectorField hv = hessian_matvec(VectorField(g), v, cfg, pt);
    CHECK(norm2(hv) == 0.0);
  }
}

TEST_CASE("pcg on the pure regularization operator converges immediately") {
  const Grid g = make_grid({16, 16, 16});
  SolverConfig cfg = small_config();
  cfg.reg.beta = 0.01;
  Rng rng(31);
  const VectorField g_vec = make_bandlimited_velocity(g, rng, 1.0, 3);

  auto matvec = [&](const VectorField& x) {
    VectorField ax = apply_regularization(x, cfg.reg);
    scale(ax, static_cast<float>(cfg.reg.beta));
    return ax;
  };
  const PcgResult res = pcg_solve(matvec, g_vec, 1e-5, cfg);
  CHECK(res.iterations <= 2);
  // residual check: H x + g ~ 0
  VectorField r = matvec(res.x);
  axpy(1.0f, g_vec, r);
  CHECK(norm2(r) / norm2(g_vec) <= 1e-4);
}

TEST_CASE("pcg trivial and property cases") {
  const Grid g = make_grid({16, 16, 16});
  SolverConfig cfg = small_config();

  SUBCASE("zero right-hand side returns zero in zero iterations") {
    auto matvec = [&](const VectorField& x) { return x; };
    const PcgResult res = pcg_solve(matvec, VectorField(g), 0.5, cfg);
    CHECK(res.iterations == 0);
    CHECK(norm2(res.x) == 0.0);
  }
  SUBCASE("error decreases monotonically in the operator norm") {
    // SPD operator: beta*A plus a pointwise mass term.
    const Problem prob = synth_problem(g, 14, 0.3);
    cfg.reg.beta = 1e-2;
    const VectorField v0(g);
    IteratePoint pt = evaluate_objective(v0, prob.m0, prob.m1, cfg);
    evaluate_gradient(v0, prob.m1, cfg, pt);
    auto matvec = [&](const VectorField& x) { return hessian_matvec(x, v0, cfg, pt); };
    const VectorField b = random_field(g, 9);

    // tight solve as reference
    cfg.max_pcg = 400;
    const PcgResult ref = pcg_solve(matvec, b, 1e-10, cfg);
    double prev = std::numeric_limits<double>::infinity();
    for (int iters : {1, 2, 4, 8, 16}) {
      SolverConfig limited = cfg;
      limited.max_pcg = iters;
      const PcgResult res = pcg_solve(matvec, b, 1e-12, limited);
      VectorField e = res.x;
      axpy(-1.0f, ref.x, e);
      const double err_h = std::sqrt(std::max(0.0, inner_product(matvec(e), e)));
      CHECK(err_h <= prev * (1.0 + 1e-6));
      prev = err_h;
    }
  }
}

TEST_CASE("armijo accepts the full newton step on the pure-regularization objective") {
  // J(v) = beta/2 <Av, v> via m0 == m1 (image term identically zero at any
  // velocity that keeps the match; use m0 = m1 = const so transport is
  // neutral). The Newton step from v to the minimizer is exact.
  const Grid g = make_grid({16, 16, 16});
  const ScalarField m = make_field(g, [](double, double, double) { return 0.5; });
  SolverConfig cfg = small_config();
  cfg.reg.beta = 0.5;
  cfg.continuation.enabled = false;

  Rng rng(17);
  const VectorField v = make_bandlimited_velocity(g, rng, 0.5, 2);
  IteratePoint pt = evaluate_objective(v, m, m, cfg);
  const VectorField grad = evaluate_gradient(v, m, cfg, pt);
  // exact Newton direction: dv = -v (H = beta*A, g = beta*A*v)
  VectorField dv = v;
  scale(dv, -1.0f);
  const LineSearchResult ls = armijo_linesearch(v, dv, grad, pt.objective, m, m, cfg);
  CHECK(ls.accepted);
  CHECK(ls.alpha == 1.0);
}

TEST_CASE("armijo rejects ascent directions") {
  const Grid g = make_grid({16, 16, 16});
  const Problem prob = synth_problem(g, 15, 0.3);
  SolverConfig cfg = small_config();
  const VectorField v(g);
  IteratePoint pt = evaluate_objective(v, prob.m0, prob.m1, cfg);
  const VectorField grad = evaluate_gradient(v, prob.m1, cfg, pt);
  CHECK_THROWS_AS(armijo_linesearch(v, grad, grad, pt.objective, prob.m0, prob.m1, cfg), Error);
}

TEST_CASE("identical images converge immediately with zero velocity") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(19);
  const ScalarField m = make_blobs(g, rng);
  const GaussNewtonResult res = gauss_newton_solve(m, m, small_config());
  CHECK(res.report.status == SolveStatus::Converged);
  CHECK(res.report.newton_iterations == 0);
  CHECK(norm2(res.velocity) == 0.0);
  CHECK(res.report.mismatch_rel == 0.0);
}

TEST_CASE("small synthetic registration converges") {
  const Grid g = make_grid({24, 24, 24});
  const Problem prob = synth_problem(g, 23, 0.25);
  SolverConfig cfg = small_config();
  const GaussNewtonResult res = gauss_newton_solve(prob.m0, prob.m1, cfg);
  CHECK(res.report.status == SolveStatus::Converged);
  CHECK(res.report.grad_rel <= cfg.gtol);
  CHECK(res.report.mismatch_rel <= 0.2);
  CHECK(res.report.newton_iterations <= cfg.max_newton);
  CHECK(res.report.hessian_matvecs > 0);

  SUBCASE("objective decreases monotonically along the log") {
    double prev = std::numeric_limits<double>::infinity();
    int stage = -1;
    for (const auto& e : res.report.log) {
      if (e.stage != stage) {
        stage = e.stage;  // objective jumps when beta changes
        prev = std::numeric_limits<double>::infinity();
      }
      CHECK(e.objective <= prev * (1.0 + 1e-7));
      prev = e.objective;
    }
  }
  SUBCASE("report serializes to json") {
    const std::string j = res.report.to_json();
    CHECK(j.find("\"status\"") != std::string::npos);
    CHECK(j.find("\"mismatch_rel\"") != std::string::npos);
    CHECK(j.find("\"counters\"") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  SolverConfig cfg = small_config();
  cfg.gtol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.reg.beta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.continuation.beta0 = 1e-6;  // below target
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.max_newton = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
