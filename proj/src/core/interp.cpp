#include "core/interp.hpp"

#include <cmath>

#include "core/counters.hpp"

namespace veloreg {

const char* to_string(InterpVariant v) {
  switch (v) {
    case InterpVariant::Linear: return "linear";
    case InterpVariant::Lagrange: return "lagrange";
    case InterpVariant::Bspline: return "bspline";
  }
  return "?";
}

namespace {

float wrap_coord(double x) {
  x -= kTwoPi * std::floor(x / kTwoPi);
  float f = static_cast<float>(x);
  // Guard the float rounding edge at 2pi.
  const float two_pi_f = static_cast<float>(kTwoPi);
  if (f >= two_pi_f) f -= two_pi_f;
  if (f < 0.0f) f += two_pi_f;
  return f;
}

}  // namespace

DeparturePoints make_departure_points(const Grid& g, const std::vector<double>& x1,
                                      const std::vector<double>& x2, const std::vector<double>& x3) {
  const std::size_t n = static_cast<std::size_t>(g.size());
  if (x1.size() != n || x2.size() != n || x3.size() != n) {
    fail(Errc::invalid_argument, "departure points: coordinate count does not match grid");
  }
  DeparturePoints p;
  p.grid = g;
  p.x1.resize(n);
  p.x2.resize(n);
  p.x3.resize(n);
  const std::int64_t sn = g.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    if (!std::isfinite(x1[u]) || !std::isfinite(x2[u]) || !std::isfinite(x3[u])) {
      continue;  // reported below; keep the loop branch-light
    }
    p.x1[u] = wrap_coord(x1[u]);
    p.x2[u] = wrap_coord(x2[u]);
    p.x3[u] = wrap_coord(x3[u]);
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (!std::isfinite(x1[u]) || !std::isfinite(x2[u]) || !std::isfinite(x3[u])) {
      fail(Errc::invalid_argument, "departure points: non-finite coordinate");
    }
  }
  return p;
}

DeparturePoints identity_points(const Grid& g) {
  DeparturePoints p;
  p.grid = g;
  const std::size_t n = static_cast<std::size_t>(g.size());
  p.x1.resize(n);
  p.x2.resize(n);
  p.x3.resize(n);
  const auto [n1, n2, n3] = g.dims;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      std::size_t m = static_cast<std::size_t>(g.index(i1, i2, 0));
      const float c1 = static_cast<float>(g.coord(0, i1));
      const float c2 = static_cast<float>(g.coord(1, i2));
      for (int i3 = 0; i3 < n3; ++i3, ++m) {
        p.x1[m] = c1;
        p.x2[m] = c2;
        p.x3[m] = static_cast<float>(g.coord(2, i3));
      }
    }
  }
  return p;
}

const std::array<double, 15>& bspline_prefilter_taps() {
  static const std::array<double, 15> taps = [] {
    const double z1 = std::sqrt(3.0) - 2.0;
    std::array<double, 15> t{};
    double dc = 0.0;
    for (int n = -7; n <= 7; ++n) {
      t[static_cast<std::size_t>(n + 7)] = std::sqrt(3.0) * std::pow(z1, std::abs(n));
      dc += t[static_cast<std::size_t>(n + 7)];
    }
    for (double& v : t) v /= dc;
    return t;
  }();
  return taps;
}

CoefficientField prefilter_bspline(const ScalarField& f) {
  ScopedTimer timer(kernel_timers().prefilter_s);
  const Grid& g = f.grid;
  const auto& taps = bspline_prefilter_taps();

  ScalarField cur = f;
  ScalarField next(g);
  for (int axis = 0; axis < 3; ++axis) {
    const int n = g.dims[axis];
    std::int64_t stride = 1;
    for (int a = axis + 1; a < 3; ++a) stride *= g.dims[a];
    const std::int64_t nlines = g.size() / n;
    const std::int64_t n3 = g.dims[2];
    const std::int64_t plane = static_cast<std::int64_t>(g.dims[1]) * g.dims[2];
    const float* in = cur.values.data();
    float* out = next.values.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t line = 0; line < nlines; ++line) {
      std::int64_t base;
      if (axis == 0) {
        base = line;
      } else if (axis == 1) {
        base = (line / n3) * plane + (line % n3);
      } else {
        base = line * n3;
      }
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int o = -7; o <= 7; ++o) {
          int j = i + o;
          if (j < 0) j += n;
          if (j >= n) j -= n;
          acc += taps[static_cast<std::size_t>(o + 7)] * static_cast<double>(in[base + j * stride]);
        }
        out[base + i * stride] = static_cast<float>(acc);
      }
    }
    std::swap(cur, next);
  }
  return CoefficientField{std::move(cur)};
}

namespace {

struct AxisSetup {
  int idx[4];
  double w[4];
};

enum class Kernel { Linear, Lagrange, Bspline };

template <Kernel K>
inline int support();
template <>
inline int support<Kernel::Linear>() { return 2; }
template <>
inline int support<Kernel::Lagrange>() { return 4; }
template <>
inline int support<Kernel::Bspline>() { return 4; }

template <Kernel K>
inline void axis_setup(float x, double inv_h, int n, AxisSetup& s) {
  double xg = static_cast<double>(x) * inv_h;
  if (xg >= n) xg -= n;
  if (xg < 0.0) xg += n;
  int i0 = static_cast<int>(xg);
  if (i0 >= n) i0 -= n;
  const double u = xg - i0;

  if constexpr (K == Kernel::Linear) {
    s.idx[0] = i0;
    s.idx[1] = i0 + 1 >= n ? 0 : i0 + 1;
    s.w[0] = 1.0 - u;
    s.w[1] = u;
  } else {
    s.idx[0] = i0 - 1 < 0 ? n - 1 : i0 - 1;
    s.idx[1] = i0;
    s.idx[2] = i0 + 1 >= n ? i0 + 1 - n : i0 + 1;
    s.idx[3] = i0 + 2 >= n ? i0 + 2 - n : i0 + 2;
    if constexpr (K == Kernel::Lagrange) {
      s.w[0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
      s.w[1] = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
      s.w[2] = -(u + 1.0) * u * (u - 2.0) / 2.0;
      s.w[3] = (u + 1.0) * u * (u - 1.0) / 6.0;
    } else {
      const double u2 = u * u;
      const double u3 = u2 * u;
      s.w[0] = (1.0 - 3.0 * u + 3.0 * u2 - u3) / 6.0;
      s.w[1] = (4.0 - 6.0 * u2 + 3.0 * u3) / 6.0;
      s.w[2] = (1.0 + 3.0 * u + 3.0 * u2 - 3.0 * u3) / 6.0;
      s.w[3] = u3 / 6.0;
    }
  }
}

template <Kernel K>
void eval_points(const float* vals, const Grid& g, const DeparturePoints& pts, float* out) {
  const auto [n1, n2, n3] = g.dims;
  const double ih1 = 1.0 / g.spacing[0];
  const double ih2 = 1.0 / g.spacing[1];
  const double ih3 = 1.0 / g.spacing[2];
  const std::int64_t n = g.size();
  constexpr int D = K == Kernel::Linear ? 2 : 4;

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    const std::size_t u = static_cast<std::size_t>(p);
    AxisSetup a1, a2, a3;
    axis_setup<K>(pts.x1[u], ih1, n1, a1);
    axis_setup<K>(pts.x2[u], ih2, n2, a2);
    axis_setup<K>(pts.x3[u], ih3, n3, a3);
    double acc = 0.0;
    for (int i = 0; i < D; ++i) {
      const std::int64_t o1 = static_cast<std::int64_t>(a1.idx[i]) * n2;
      for (int j = 0; j < D; ++j) {
        const std::int64_t o12 = (o1 + a2.idx[j]) * n3;
        const double wij = a1.w[i] * a2.w[j];
        double row = 0.0;
        for (int k = 0; k < D; ++k) {
          row += a3.w[k] * static_cast<double>(vals[o12 + a3.idx[k]]);
        }
        acc += wij * row;
      }
    }
    out[u] = static_cast<float>(acc);
  }
}

}  // namespace

void interp_eval(const ScalarField& f, const DeparturePoints& pts, InterpVariant variant, float* out) {
  require_same_grid(f.grid, pts.grid, "interp_eval");
  if (variant == InterpVariant::Bspline) {
    fail(Errc::invalid_argument, "Bspline evaluation requires a prefiltered CoefficientField");
  }
  ScopedTimer timer(kernel_timers().interp_s);
  if (variant == InterpVariant::Linear) {
    eval_points<Kernel::Linear>(f.values.data(), f.grid, pts, out);
  } else {
    eval_points<Kernel::Lagrange>(f.values.data(), f.grid, pts, out);
  }
  counters().interp += 1;
}

void interp_eval(const CoefficientField& coeffs, const DeparturePoints& pts, float* out) {
  require_same_grid(coeffs.c.grid, pts.grid, "interp_eval");
  ScopedTimer timer(kernel_timers().interp_s);
  eval_points<Kernel::Bspline>(coeffs.c.values.data(), coeffs.c.grid, pts, out);
  counters().interp += 1;
}

ScalarField interp_field(const ScalarField& f, const DeparturePoints& pts, InterpVariant variant) {
  ScalarField out(f.grid);
  if (variant == InterpVariant::Bspline) {
    const CoefficientField coeffs = prefilter_bspline(f);
    interp_eval(coeffs, pts, out.values.data());
  } else {
    interp_eval(f, pts, variant, out.values.data());
  }
  return out;
}

}  // namespace veloreg
