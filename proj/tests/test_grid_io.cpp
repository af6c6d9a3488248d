#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/rng.hpp"
#include "core/volume_io.hpp"

using namespace veloreg;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "veloreg_grid_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("make_grid spacing and validation") {
  const Grid g = make_grid({64, 64, 64});
  CHECK(g.spacing[0] == doctest::Approx(kTwoPi / 64).epsilon(1e-15));
  CHECK(g.size() == 64 * 64 * 64);

  const Grid aniso = make_grid({64, 128, 256});
  CHECK(aniso.spacing[0] == doctest::Approx(kTwoPi / 64));
  CHECK(aniso.spacing[1] == doctest::Approx(kTwoPi / 128));
  CHECK(aniso.spacing[2] == doctest::Approx(kTwoPi / 256));

  CHECK_THROWS_AS(make_grid({10, 64, 64}), Error);
  CHECK_THROWS_AS(make_grid({17, 64, 64}), Error);
  CHECK_THROWS_AS(make_grid({64, 64, 0}), Error);
}

TEST_CASE("index wrap is periodic") {
  const Grid g = make_grid({16, 32, 64});
  CHECK(g.wrap(0, -1) == 15);
  CHECK(g.wrap(0, 16) == 0);
  CHECK(g.wrap(1, 33) == 1);
  CHECK(g.wrap(2, -65) == 63);
  ScalarField f = make_field(g, [](double x1, double x2, double x3) { return std::sin(x1 + 2 * x2 - x3); });
  for (int i = 0; i < 16; ++i) {
    CHECK(f.at(g.wrap(0, i + 16), 3, 5) == f.at(i, 3, 5));
  }
}

TEST_CASE("inner product of constants gives the domain volume") {
  const Grid g = make_grid({64, 64, 64});
  const ScalarField ones = make_field(g, [](double, double, double) { return 1.0; });
  const double v = inner_product(ones, ones);
  CHECK(v == doctest::Approx(kTwoPi * kTwoPi * kTwoPi).epsilon(1e-6));
}

TEST_CASE("sin and cos are orthogonal") {
  const Grid g = make_grid({32, 32, 32});
  const ScalarField a = make_field(g, [](double, double, double x3) { return std::sin(x3); });
  const ScalarField b = make_field(g, [](double, double, double x3) { return std::cos(x3); });
  const double ip = inner_product(a, b);
  CHECK(std::fabs(ip) <= 1e-6 * norm2(a) * norm2(b));
}

TEST_CASE("norm2 squares back to the inner product") {
  const Grid g = make_grid({16, 16, 16});
  Rng rng(123);
  ScalarField a(g);
  for (auto& x : a.values) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  const double n = norm2(a);
  CHECK(n * n == doctest::Approx(inner_product(a, a)).epsilon(1e-12));
}

TEST_CASE("reductions are bitwise reproducible") {
  const Grid g = make_grid({32, 32, 32});
  Rng rng(99);
  ScalarField a(g), b(g);
  for (auto& x : a.values) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto& x : b.values) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  const double first = inner_product(a, b);
  for (int rep = 0; rep < 5; ++rep) {
    CHECK(inner_product(a, b) == first);
  }
}

TEST_CASE("grid mismatch is rejected") {
  const ScalarField a(make_grid({16, 16, 16}));
  const ScalarField b(make_grid({16, 16, 32}));
  CHECK_THROWS_AS(inner_product(a, b), Error);
}

TEST_CASE("volume round trip is bit exact") {
  const auto dir = temp_dir();
  const Grid g = make_grid({16, 18, 20});
  Rng rng(7);
  ScalarField f(g);
  for (auto& x : f.values) x = static_cast<float>(rng.uniform(-2.0, 2.0));
  const std::string base = (dir / "roundtrip").string();
  write_volume(f, base);
  const ScalarField back = read_scalar_volume(base);
  REQUIRE(back.values.size() == f.values.size());
  CHECK(std::memcmp(back.values.data(), f.values.data(), f.values.size() * sizeof(float)) == 0);
  CHECK(back.grid == g);
}

TEST_CASE("label map round trip keeps ids") {
  const auto dir = temp_dir();
  const Grid g = make_grid({16, 16, 16});
  LabelMap m(g);
  for (std::size_t i = 0; i < m.labels.size(); ++i) m.labels[i] = static_cast<std::uint16_t>(i % 7);
  const std::string base = (dir / "labels").string();
  write_volume(m, base);
  const LabelMap back = read_label_volume(base);
  CHECK(back.labels == m.labels);
}

TEST_CASE("io error paths") {
  const auto dir = temp_dir();
  const Grid g = make_grid({16, 16, 16});
  ScalarField f(g);
  const std::string base = (dir / "bad").string();
  write_volume(f, base);

  SUBCASE("truncated payload") {
    std::filesystem::resize_file(base + ".raw", 100);
    CHECK_THROWS_AS(read_volume(base), Error);
  }
  SUBCASE("dtype mismatch with payload size") {
    std::ofstream hdr(base + ".json");
    hdr << R"({"dims":[16,16,16],"dtype":"u16","order":"x3-fastest","domain":"2pi"})";
    hdr.close();
    CHECK_THROWS_AS(read_volume(base), Error);
  }
  SUBCASE("unknown dtype") {
    std::ofstream hdr(base + ".json");
    hdr << R"({"dims":[16,16,16],"dtype":"f64","order":"x3-fastest","domain":"2pi"})";
    hdr.close();
    CHECK_THROWS_AS(read_volume(base), Error);
  }
  SUBCASE("missing sidecar") {
    std::filesystem::remove(base + ".json");
    CHECK_THROWS_AS(read_volume(base), Error);
  }
}

TEST_CASE("non-finite values are rejected") {
  const Grid g = make_grid({16, 16, 16});
  ScalarField f(g);
  f.values[10] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(f.validate("test"), Error);
}
