#include <doctest.h>

#include <cmath>

#include "core/metrics.hpp"
#include "core/synth.hpp"

using namespace veloreg;

TEST_CASE("zero velocity gives the identity map with unit jacobian") {
  const Grid g = make_grid({16, 16, 16});
  const VectorField v(g);
  const DeformationMap map = compute_deformation_map(v, TimeGrid{4}, InterpVariant::Bspline);
  CHECK(max_abs(map.displacement) == 0.0);
  const auto [det, stats] = det_deformation_gradient(map, DerivBackend::Fd8);
  for (float d : det.values) CHECK(d == 1.0f);
  CHECK(stats.min == 1.0);
  CHECK(stats.max == 1.0);
  CHECK(stats.mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant velocity maps to a pure translation") {
  const Grid g = make_grid({32, 32, 32});
  const double c = 0.8;
  VectorField v(g);
  v[0] = make_field(g, [c](double, double, double) { return c; });
  const DeformationMap map = compute_deformation_map(v, TimeGrid{4}, InterpVariant::Bspline);
  // pullback map: y = x - c along axis 1
  double worst = 0.0;
  for (float u : map.displacement[0].values) worst = std::max(worst, std::fabs(u + c));
  CHECK(worst <= 1e-5);
  CHECK(max_abs(map.displacement[1]) <= 1e-6);
  CHECK(max_abs(map.displacement[2]) <= 1e-6);

  // warping with the map matches the analytic translation
  const ScalarField m0 = make_field(g, [](double x1, double, double) { return std::sin(x1); });
  const ScalarField warped = warp_image(m0, map, InterpVariant::Bspline);
  const ScalarField exact = make_field(g, [c](double x1, double, double) { return std::sin(x1 - c); });
  CHECK(norm2(subtract(warped, exact)) / norm2(exact) <= 1e-4);
}

TEST_CASE("warp through the map agrees with the state solve") {
  const Grid g = make_grid({64, 64, 64});
  Rng rng(33);
  const ScalarField m0 = make_blobs(g, rng);
  const VectorField v = make_bandlimited_velocity(g, rng, 0.4, 2);
  const TimeGrid tg{4};
  const InterpVariant variant = InterpVariant::Bspline;

  const ScalarField via_state = solve_state(v, m0, tg, variant).final();
  const DeformationMap map = compute_deformation_map(v, tg, variant);
  const ScalarField via_map = warp_image(m0, map, variant);
  CHECK(norm2(subtract(via_map, via_state)) / norm2(via_state) <= 1e-3);
}

TEST_CASE("analytic jacobian of a sinusoidal displacement") {
  const Grid g = make_grid({64, 64, 64});
  DeformationMap map{VectorField(g)};
  map.displacement[0] = make_field(g, [](double x1, double, double) { return 0.1 * std::sin(x1); });
  const auto [det, stats] = det_deformation_gradient(map, DerivBackend::Fd8);
  const ScalarField exact = make_field(g, [](double x1, double, double) { return 1.0 + 0.1 * std::cos(x1); });
  double worst = 0.0;
  for (std::size_t i = 0; i < det.values.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(det.values[i]) - exact.values[i]));
  }
  CHECK(worst <= 1e-4);
  CHECK(stats.max == doctest::Approx(1.1).epsilon(1e-4));
  CHECK(stats.min == doctest::Approx(0.9).epsilon(1e-4));
  CHECK(stats.min <= stats.mean);
  CHECK(stats.mean <= stats.max);
}

TEST_CASE("relative mismatch endpoints and scale covariance") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(44);
  const ScalarField m0 = make_blobs(g, rng);
  const ScalarField m1 = make_blobs(g, rng);

  CHECK(relative_mismatch(m1, m1, m0) == 0.0);
  CHECK(relative_mismatch(m0, m1, m0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(relative_mismatch(m0, m1, m1), Error);

  ScalarField f = make_blobs(g, rng);
  const double base = relative_mismatch(f, m1, m0);
  ScalarField fs = f, m1s = m1, m0s = m0;
  const float s = 3.5f;
  scale(fs, s);
  scale(m1s, s);
  scale(m0s, s);
  CHECK(relative_mismatch(fs, m1s, m0s) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("dice coefficient") {
  const Grid g = make_grid({16, 16, 16});
  LabelMap a(g), b(g);

  SUBCASE("identical nonempty maps give 1") {
    for (std::size_t i = 0; i < 100; ++i) a.labels[i] = 1;
    b = a;
    CHECK(dice(a, b) == 1.0);
  }
  SUBCASE("disjoint supports give 0") {
    for (std::size_t i = 0; i < 100; ++i) a.labels[i] = 1;
    for (std::size_t i = 200; i < 300; ++i) b.labels[i] = 1;
    CHECK(dice(a, b) == 0.0);
  }
  SUBCASE("half-overlapping equal boxes give 1/2") {
    for (std::size_t i = 0; i < 200; ++i) a.labels[i] = 2;
    for (std::size_t i = 100; i < 300; ++i) b.labels[i] = 2;
    CHECK(dice(a, b) == 0.5);
  }
  SUBCASE("label selection restricts the union") {
    for (std::size_t i = 0; i < 100; ++i) a.labels[i] = 1;
    for (std::size_t i = 0; i < 100; ++i) b.labels[i] = 2;
    CHECK(dice(a, b, {1}) == 0.0);
    CHECK(dice(a, b) == 1.0);  // union of nonzero labels: same support
    b = a;
    CHECK(dice(a, b, {1}) == 1.0);
  }
  SUBCASE("symmetry") {
    Rng rng(55);
    for (auto& l : a.labels) l = static_cast<std::uint16_t>(rng.uniform_int(0, 2));
    for (auto& l : b.labels) l = static_cast<std::uint16_t>(rng.uniform_int(0, 2));
    CHECK(dice(a, b) == dice(b, a));
  }
  SUBCASE("empty union is an error") {
    CHECK_THROWS_AS(dice(a, b), Error);
  }
}

TEST_CASE("label warp keeps ids intact through nearest-neighbor moves") {
  const Grid g = make_grid({16, 16, 16});
  LabelMap labels(g);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    labels.labels[i] = static_cast<std::uint16_t>(i % 5 == 0 ? 7 : (i % 3 == 0 ? 2 : 0));
  }
  VectorField v(g);
  v[1] = make_field(g, [](double, double, double) { return 0.37; });
  const DeformationMap map = compute_deformation_map(v, TimeGrid{4}, InterpVariant::Bspline);
  const LabelMap warped = warp_labels(labels, map);
  // only existing ids may appear
  for (std::uint16_t l : warped.labels) CHECK((l == 0 || l == 2 || l == 7));
  // zero velocity keeps the map untouched
  const DeformationMap id_map{VectorField(g)};
  const LabelMap same = warp_labels(labels, id_map);
  CHECK(same.labels == labels.labels);
}

TEST_CASE("synthetic labels cover two regions") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(7);
  const ScalarField ref = make_blobs(g, rng);
  const LabelMap labels = make_threshold_labels(ref);
  int count1 = 0, count2 = 0;
  for (std::uint16_t l : labels.labels) {
    count1 += l == 1;
    count2 += l == 2;
  }
  CHECK(count1 > 0);
  CHECK(count2 > 0);
}
