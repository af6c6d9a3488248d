#include "core/metrics.hpp"

#include <cmath>
#include <set>

namespace veloreg {

DeformationMap compute_deformation_map(const VectorField& v, const TimeGrid& tg, InterpVariant variant) {
  tg.validate();
  const Grid& g = v.grid();
  const TraceStep step = trace_step(v, tg.dt(), +1, variant);

  // u_{j+1}(x) = u_j(y(x)) + (y(x) - x): composing the per-step departure
  // maps while carrying only displacements.
  VectorField u(g);
  const std::int64_t n = g.size();
  for (int j = 0; j < tg.nt; ++j) {
    VectorField u_next(g);
    for (int c = 0; c < 3; ++c) {
      u_next[c] = interp_field(u[c], step.points, variant);
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < n; ++i) {
        const std::size_t m = static_cast<std::size_t>(i);
        u_next[c].values[m] += step.displacement[c].values[m];
      }
    }
    u = std::move(u_next);
  }
  return DeformationMap{std::move(u)};
}

namespace {

DeparturePoints map_points(const DeformationMap& map) {
  const Grid& g = map.displacement.grid();
  const std::size_t n = static_cast<std::size_t>(g.size());
  std::vector<double> y1(n), y2(n), y3(n);
  const auto [n1, n2, n3] = g.dims;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      std::size_t m = static_cast<std::size_t>(g.index(i1, i2, 0));
      const double c1 = g.coord(0, i1);
      const double c2 = g.coord(1, i2);
      for (int i3 = 0; i3 < n3; ++i3, ++m) {
        y1[m] = c1 + static_cast<double>(map.displacement[0].values[m]);
        y2[m] = c2 + static_cast<double>(map.displacement[1].values[m]);
        y3[m] = g.coord(2, i3) + static_cast<double>(map.displacement[2].values[m]);
      }
    }
  }
  return make_departure_points(g, y1, y2, y3);
}

}  // namespace

ScalarField warp_image(const ScalarField& image, const DeformationMap& map, InterpVariant variant) {
  require_same_grid(image.grid, map.displacement.grid(), "warp_image");
  return interp_field(image, map_points(map), variant);
}

LabelMap warp_labels(const LabelMap& labels, const DeformationMap& map) {
  require_same_grid(labels.grid, map.displacement.grid(), "warp_labels");
  const DeparturePoints pts = map_points(map);
  const Grid& g = labels.grid;
  LabelMap out(g);
  const std::int64_t n = g.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::size_t m = static_cast<std::size_t>(i);
    int idx[3];
    const float coords[3] = {pts.x1[m], pts.x2[m], pts.x3[m]};
    for (int a = 0; a < 3; ++a) {
      const int na = g.dims[a];
      int j = static_cast<int>(std::lround(static_cast<double>(coords[a]) / g.spacing[a]));
      if (j >= na) j -= na;
      if (j < 0) j += na;
      idx[a] = j;
    }
    out.labels[m] = labels.labels[static_cast<std::size_t>(g.index(idx[0], idx[1], idx[2]))];
  }
  return out;
}

std::pair<ScalarField, DetFStats> det_deformation_gradient(const DeformationMap& map,
                                                           DerivBackend backend) {
  const Grid& g = map.displacement.grid();
  // Rows of grad u: du_a/dx_b for a fixed a.
  std::array<VectorField, 3> du = {gradient(map.displacement[0], backend),
                                   gradient(map.displacement[1], backend),
                                   gradient(map.displacement[2], backend)};
  ScalarField det(g);
  const std::int64_t n = g.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::size_t m = static_cast<std::size_t>(i);
    double f[3][3];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        f[a][b] = (a == b ? 1.0 : 0.0) + static_cast<double>(du[static_cast<std::size_t>(a)][b].values[m]);
      }
    }
    const double d = f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1]) -
                     f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0]) +
                     f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0]);
    det.values[m] = static_cast<float>(d);
  }

  DetFStats stats;
  stats.min = det.values[0];
  stats.max = det.values[0];
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = det.values[static_cast<std::size_t>(i)];
    stats.min = std::min(stats.min, v);
    stats.max = std::max(stats.max, v);
  }
  stats.mean = mean(det);
  return {std::move(det), stats};
}

double relative_mismatch(const ScalarField& m_final, const ScalarField& m1, const ScalarField& m0) {
  require_same_grid(m_final.grid, m1.grid, "relative_mismatch");
  require_same_grid(m1.grid, m0.grid, "relative_mismatch");
  const double den = norm2(subtract(m1, m0));
  if (den == 0.0) {
    fail(Errc::invalid_argument, "relative_mismatch: reference and template are identical");
  }
  return norm2(subtract(m_final, m1)) / den;
}

double dice(const LabelMap& a, const LabelMap& b, const std::vector<std::uint16_t>& labels) {
  require_same_grid(a.grid, b.grid, "dice");
  std::set<std::uint16_t> selected(labels.begin(), labels.end());
  const bool all_nonzero = selected.empty();
  auto member = [&](std::uint16_t l) {
    return all_nonzero ? l != 0 : selected.count(l) != 0;
  };
  std::int64_t in_a = 0, in_b = 0, in_both = 0;
  const std::int64_t n = a.grid.size();
#pragma omp parallel for reduction(+ : in_a, in_b, in_both) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const bool ma = member(a.labels[static_cast<std::size_t>(i)]);
    const bool mb = member(b.labels[static_cast<std::size_t>(i)]);
    in_a += ma;
    in_b += mb;
    in_both += ma && mb;
  }
  if (in_a + in_b == 0) fail(Errc::invalid_argument, "dice: empty union of supports");
  return 2.0 * static_cast<double>(in_both) / static_cast<double>(in_a + in_b);
}

}  // namespace veloreg
