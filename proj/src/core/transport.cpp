#include "core/transport.hpp"

#include <cmath>

namespace veloreg {

namespace {

// Both stages of the RK2 backtrace; returns unwrapped displacements so that
// callers can either wrap into departure points or keep the displacement.
std::array<std::vector<double>, 3> rk2_displacement(const VectorField& v, double dt, int direction,
                                                    InterpVariant variant) {
  if (direction != 1 && direction != -1) {
    fail(Errc::invalid_argument, "trace direction must be +1 or -1");
  }
  const Grid& g = v.grid();
  const std::size_t n = static_cast<std::size_t>(g.size());
  const double s = static_cast<double>(direction) * dt;

  // Stage 1: y* = x - s*v(x), with v read at the nodes.
  std::vector<double> y1(n), y2(n), y3(n);
  const auto [n1, n2, n3] = g.dims;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      std::size_t m = static_cast<std::size_t>(g.index(i1, i2, 0));
      const double c1 = g.coord(0, i1);
      const double c2 = g.coord(1, i2);
      for (int i3 = 0; i3 < n3; ++i3, ++m) {
        y1[m] = c1 - s * static_cast<double>(v[0].values[m]);
        y2[m] = c2 - s * static_cast<double>(v[1].values[m]);
        y3[m] = g.coord(2, i3) - s * static_cast<double>(v[2].values[m]);
      }
    }
  }
  const DeparturePoints mid = make_departure_points(g, y1, y2, y3);

  // Stage 2: midpoint velocity through the configured interpolation.
  VectorField vmid(g);
  for (int c = 0; c < 3; ++c) {
    vmid[c] = interp_field(v[c], mid, variant);
  }

  std::array<std::vector<double>, 3> disp;
  for (auto& d : disp) d.resize(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const std::size_t m = static_cast<std::size_t>(i);
    for (int c = 0; c < 3; ++c) {
      disp[static_cast<std::size_t>(c)][m] =
          -0.5 * s * (static_cast<double>(v[c].values[m]) + static_cast<double>(vmid[c].values[m]));
    }
  }
  return disp;
}

}  // namespace

TraceStep trace_step(const VectorField& v, double dt, int direction, InterpVariant variant) {
  const Grid& g = v.grid();
  const auto disp = rk2_displacement(v, dt, direction, variant);
  const std::int64_t n = g.size();

  TraceStep out;
  out.displacement = VectorField(g);
  for (int c = 0; c < 3; ++c) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      out.displacement[c].values[static_cast<std::size_t>(i)] =
          static_cast<float>(disp[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]);
    }
  }

  std::array<std::vector<double>, 3> coords = disp;
  const auto [n1, n2, n3] = g.dims;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      std::size_t m = static_cast<std::size_t>(g.index(i1, i2, 0));
      const double c1 = g.coord(0, i1);
      const double c2 = g.coord(1, i2);
      for (int i3 = 0; i3 < n3; ++i3, ++m) {
        coords[0][m] += c1;
        coords[1][m] += c2;
        coords[2][m] += g.coord(2, i3);
      }
    }
  }
  out.points = make_departure_points(g, coords[0], coords[1], coords[2]);
  return out;
}

DeparturePoints trace_characteristics(const VectorField& v, double dt, int direction,
                                      InterpVariant variant) {
  const Grid& g = v.grid();
  auto disp = rk2_displacement(v, dt, direction, variant);
  const auto [n1, n2, n3] = g.dims;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      std::size_t m = static_cast<std::size_t>(g.index(i1, i2, 0));
      const double c1 = g.coord(0, i1);
      const double c2 = g.coord(1, i2);
      for (int i3 = 0; i3 < n3; ++i3, ++m) {
        disp[0][m] += c1;
        disp[1][m] += c2;
        disp[2][m] += g.coord(2, i3);
      }
    }
  }
  return make_departure_points(g, disp[0], disp[1], disp[2]);
}

VectorField trace_displacement(const VectorField& v, double dt, int direction, InterpVariant variant) {
  const Grid& g = v.grid();
  const auto disp = rk2_displacement(v, dt, direction, variant);
  VectorField out(g);
  const std::int64_t n = g.size();
  for (int c = 0; c < 3; ++c) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      out[c].values[static_cast<std::size_t>(i)] =
          static_cast<float>(disp[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

TrajectoryStore solve_state(const VectorField& v, const ScalarField& m0, const TimeGrid& tg,
                            InterpVariant variant, const DeparturePoints* dep) {
  tg.validate();
  require_same_grid(v.grid(), m0.grid, "solve_state");
  DeparturePoints local;
  if (!dep) {
    local = trace_characteristics(v, tg.dt(), +1, variant);
    dep = &local;
  }
  TrajectoryStore traj;
  traj.slices.reserve(static_cast<std::size_t>(tg.nt) + 1);
  traj.slices.push_back(m0);
  for (int j = 0; j < tg.nt; ++j) {
    traj.slices.push_back(interp_field(traj.slices.back(), *dep, variant));
  }
  return traj;
}

namespace {

// exp(dt * mean of div v along the characteristic), shared by the adjoint and
// incremental adjoint continuity solves. Costs d first-order applications and
// one interpolation sweep.
ScalarField continuity_factor(const VectorField& v, const DeparturePoints& dep_rev, double dt,
                              InterpVariant variant, DerivBackend backend) {
  const ScalarField divv = divergence(v, backend);
  const ScalarField divv_dep = interp_field(divv, dep_rev, variant);
  ScalarField factor(v.grid());
  const std::int64_t n = factor.grid.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::size_t m = static_cast<std::size_t>(i);
    const double mean = 0.5 * (static_cast<double>(divv.values[m]) + static_cast<double>(divv_dep.values[m]));
    factor.values[m] = static_cast<float>(std::exp(dt * mean));
  }
  return factor;
}

TrajectoryStore continuity_solve(const VectorField& v, const ScalarField& final_slice,
                                 const TimeGrid& tg, InterpVariant variant, DerivBackend backend,
                                 const DeparturePoints* dep_rev) {
  tg.validate();
  require_same_grid(v.grid(), final_slice.grid, "continuity solve");
  DeparturePoints local;
  if (!dep_rev) {
    local = trace_characteristics(v, tg.dt(), -1, variant);
    dep_rev = &local;
  }
  const ScalarField factor = continuity_factor(v, *dep_rev, tg.dt(), variant, backend);

  TrajectoryStore traj;
  traj.slices.assign(static_cast<std::size_t>(tg.nt) + 1, ScalarField(final_slice.grid));
  traj.slices[static_cast<std::size_t>(tg.nt)] = final_slice;
  const std::int64_t n = final_slice.grid.size();
  for (int j = tg.nt; j > 0; --j) {
    ScalarField adv = interp_field(traj.slices[static_cast<std::size_t>(j)], *dep_rev, variant);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const std::size_t m = static_cast<std::size_t>(i);
      adv.values[m] *= factor.values[m];
    }
    traj.slices[static_cast<std::size_t>(j - 1)] = std::move(adv);
  }
  return traj;
}

}  // namespace

TrajectoryStore solve_adjoint(const VectorField& v, const ScalarField& lambda_final,
                              const TimeGrid& tg, InterpVariant variant, DerivBackend backend,
                              const DeparturePoints* dep_rev) {
  return continuity_solve(v, lambda_final, tg, variant, backend, dep_rev);
}

TrajectoryStore solve_inc_adjoint(const VectorField& v, const ScalarField& lt_final,
                                  const TimeGrid& tg, InterpVariant variant, DerivBackend backend,
                                  const DeparturePoints* dep_rev) {
  return continuity_solve(v, lt_final, tg, variant, backend, dep_rev);
}

TrajectoryStore solve_inc_state(const VectorField& v, const VectorField& vt,
                                const TrajectoryStore& m_traj, const TimeGrid& tg,
                                InterpVariant variant, DerivBackend backend,
                                const DeparturePoints* dep) {
  tg.validate();
  const Grid& g = v.grid();
  require_same_grid(g, vt.grid(), "solve_inc_state");
  if (m_traj.nt() != tg.nt) {
    fail(Errc::invalid_argument, "solve_inc_state: trajectory has a different number of time steps");
  }
  require_same_grid(g, m_traj.initial().grid, "solve_inc_state");

  DeparturePoints local;
  if (!dep) {
    local = trace_characteristics(v, tg.dt(), +1, variant);
    dep = &local;
  }

  // vt at the departure points, once: the points are step-invariant.
  VectorField vt_dep(g);
  for (int c = 0; c < 3; ++c) vt_dep[c] = interp_field(vt[c], *dep, variant);

  const double half_dt = 0.5 * tg.dt();
  const std::int64_t n = g.size();

  TrajectoryStore traj;
  traj.slices.reserve(static_cast<std::size_t>(tg.nt) + 1);
  traj.slices.emplace_back(g);  // mt(0) = 0

  VectorField gm = gradient(m_traj.slices[0], backend);
  for (int j = 0; j < tg.nt; ++j) {
    VectorField gm_dep(g);
    for (int c = 0; c < 3; ++c) gm_dep[c] = interp_field(gm[c], *dep, variant);
    VectorField gm_next = gradient(m_traj.slices[static_cast<std::size_t>(j) + 1], backend);

    ScalarField next = interp_field(traj.slices.back(), *dep, variant);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const std::size_t m = static_cast<std::size_t>(i);
      double s_dep = 0.0, s_arr = 0.0;
      for (int c = 0; c < 3; ++c) {
        s_dep += static_cast<double>(vt_dep[c].values[m]) * static_cast<double>(gm_dep[c].values[m]);
        s_arr += static_cast<double>(vt[c].values[m]) * static_cast<double>(gm_next[c].values[m]);
      }
      next.values[m] = static_cast<float>(static_cast<double>(next.values[m]) - half_dt * (s_dep + s_arr));
    }
    traj.slices.push_back(std::move(next));
    gm = std::move(gm_next);
  }
  return traj;
}

}  // namespace veloreg
