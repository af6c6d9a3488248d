#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/error.hpp"

namespace veloreg {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Periodic domain (0,2pi)^3 sampled on N1 x N2 x N3 equispaced nodes.
// Node values are stored lexicographically with the x3 index fastest:
// linear index = (i1*N2 + i2)*N3 + i3. All index arithmetic wraps.
struct Grid {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{0.0, 0.0, 0.0};

  std::int64_t size() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }
  std::int64_t index(int i1, int i2, int i3) const {
    return (static_cast<std::int64_t>(i1) * dims[1] + i2) * dims[2] + i3;
  }
  int wrap(int axis, int i) const {
    const int n = dims[axis];
    i %= n;
    return i < 0 ? i + n : i;
  }
  double coord(int axis, int i) const { return spacing[axis] * i; }

  bool operator==(const Grid& other) const { return dims == other.dims; }
  bool operator!=(const Grid& other) const { return !(*this == other); }
};

// Spacing is h_i = 2pi/N_i. Dims must be even and at least 16 so that the
// 9-point difference stencil fits and real transforms have even length.
Grid make_grid(const std::array<int, 3>& dims);

struct ScalarField {
  Grid grid;
  std::vector<float> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, float fill = 0.0f)
      : grid(g), values(static_cast<std::size_t>(g.size()), fill) {}

  float& at(int i1, int i2, int i3) { return values[static_cast<std::size_t>(grid.index(i1, i2, i3))]; }
  float at(int i1, int i2, int i3) const { return values[static_cast<std::size_t>(grid.index(i1, i2, i3))]; }

  // Throws if any value is non-finite.
  void validate(const char* what) const;
};

struct VectorField {
  std::array<ScalarField, 3> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g)
      : comp{ScalarField(g), ScalarField(g), ScalarField(g)} {}

  const Grid& grid() const { return comp[0].grid; }
  ScalarField& operator[](int a) { return comp[a]; }
  const ScalarField& operator[](int a) const { return comp[a]; }
};

struct LabelMap {
  Grid grid;
  std::vector<std::uint16_t> labels;

  LabelMap() = default;
  explicit LabelMap(const Grid& g, std::uint16_t fill = 0)
      : grid(g), labels(static_cast<std::size_t>(g.size()), fill) {}
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

// Discrete L2 inner product h1*h2*h3 * sum(a_i * b_i). Accumulation happens in
// fixed-size chunks of double-precision partial sums combined in index order,
// so the result is bitwise reproducible for a given input regardless of the
// number of threads.
double inner_product(const ScalarField& a, const ScalarField& b);
double norm2(const ScalarField& a);
double inner_product(const VectorField& a, const VectorField& b);
double norm2(const VectorField& a);

double max_abs(const ScalarField& a);
double max_abs(const VectorField& a);
double mean(const ScalarField& a);

// Elementwise helpers used by the optimizer. All deterministic.
void axpy(float alpha, const ScalarField& x, ScalarField& y);  // y += alpha*x
void axpy(float alpha, const VectorField& x, VectorField& y);
void scale(ScalarField& x, float alpha);
void scale(VectorField& x, float alpha);
ScalarField subtract(const ScalarField& a, const ScalarField& b);  // a - b

template <typename Fn>
ScalarField make_field(const Grid& g, Fn&& fn) {
  ScalarField f(g);
  const auto [n1, n2, n3] = g.dims;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      const double x1 = g.coord(0, i1);
      const double x2 = g.coord(1, i2);
      float* row = f.values.data() + g.index(i1, i2, 0);
      for (int i3 = 0; i3 < n3; ++i3) {
        row[i3] = static_cast<float>(fn(x1, x2, g.coord(2, i3)));
      }
    }
  }
  return f;
}

}  // namespace veloreg
