#include "core/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace veloreg {

namespace {
constexpr std::int64_t kChunk = 4096;
}

Grid make_grid(const std::array<int, 3>& dims) {
  Grid g;
  for (int a = 0; a < 3; ++a) {
    const int n = dims[a];
    if (n < 16) {
      fail(Errc::invalid_argument,
           "grid dim " + std::to_string(a + 1) + " = " + std::to_string(n) + " is below the minimum of 16");
    }
    if (n % 2 != 0) {
      fail(Errc::invalid_argument,
           "grid dim " + std::to_string(a + 1) + " = " + std::to_string(n) + " must be even");
    }
    g.dims[a] = n;
    g.spacing[a] = kTwoPi / n;
  }
  return g;
}

void ScalarField::validate(const char* what) const {
  const std::int64_t n = grid.size();
  for (std::int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[static_cast<std::size_t>(i)])) {
      fail(Errc::invalid_argument, std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) fail(Errc::grid_mismatch, std::string(what) + ": fields live on different grids");
}

namespace {

double chunked_dot(const float* a, const float* b, std::int64_t n) {
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double inner_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "inner_product");
  const double w = a.grid.spacing[0] * a.grid.spacing[1] * a.grid.spacing[2];
  return w * chunked_dot(a.values.data(), b.values.data(), a.grid.size());
}

double norm2(const ScalarField& a) { return std::sqrt(inner_product(a, a)); }

double inner_product(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += inner_product(a[c], b[c]);
  return s;
}

double norm2(const VectorField& a) { return std::sqrt(inner_product(a, a)); }

double max_abs(const ScalarField& a) {
  const std::int64_t n = a.grid.size();
  double m = 0.0;
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = std::fabs(static_cast<double>(a.values[static_cast<std::size_t>(i)]));
    if (v > m) m = v;
  }
  return m;
}

double max_abs(const VectorField& a) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c) m = std::max(m, max_abs(a[c]));
  return m;
}

double mean(const ScalarField& a) {
  const std::int64_t n = a.grid.size();
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += static_cast<double>(a.values[static_cast<std::size_t>(i)]);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(n);
}

void axpy(float alpha, const ScalarField& x, ScalarField& y) {
  require_same_grid(x.grid, y.grid, "axpy");
  const std::int64_t n = x.grid.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    y.values[static_cast<std::size_t>(i)] += alpha * x.values[static_cast<std::size_t>(i)];
  }
}

void axpy(float alpha, const VectorField& x, VectorField& y) {
  for (int c = 0; c < 3; ++c) axpy(alpha, x[c], y[c]);
}

void scale(ScalarField& x, float alpha) {
  const std::int64_t n = x.grid.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) x.values[static_cast<std::size_t>(i)] *= alpha;
}

void scale(VectorField& x, float alpha) {
  for (int c = 0; c < 3; ++c) scale(x[c], alpha);
}

ScalarField subtract(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "subtract");
  ScalarField out(a.grid);
  const std::int64_t n = a.grid.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out.values[static_cast<std::size_t>(i)] =
        a.values[static_cast<std::size_t>(i)] - b.values[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace veloreg
