#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <veloreg/veloreg.h>

namespace {

struct FieldGuard {
  veloreg_field* f = nullptr;
  ~FieldGuard() { veloreg_field_free(f); }
};

std::string temp_base(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "veloreg_capi_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strcmp(veloreg_status_string(VELOREG_OK), "ok") == 0);
  CHECK(std::strlen(veloreg_status_string(VELOREG_ERR_GRID_MISMATCH)) > 0);
  CHECK(std::strlen(veloreg_version()) > 0);
}

TEST_CASE("field lifecycle, io, and error reporting") {
  const int32_t dims[3] = {16, 16, 16};
  FieldGuard f;
  REQUIRE(veloreg_field_create(dims, "f32", &f.f) == VELOREG_OK);

  int32_t got[3] = {0, 0, 0};
  CHECK(veloreg_field_dims(f.f, got) == VELOREG_OK);
  CHECK(got[0] == 16);
  CHECK(std::strcmp(veloreg_field_dtype(f.f), "f32") == 0);

  const size_t n = 16 * 16 * 16;
  std::vector<float> data(n);
  for (size_t i = 0; i < n; ++i) data[i] = static_cast<float>(std::sin(0.01 * static_cast<double>(i)));
  CHECK(veloreg_field_set_f32(f.f, data.data(), n) == VELOREG_OK);

  const std::string base = temp_base("vol");
  CHECK(veloreg_field_write(f.f, base.c_str()) == VELOREG_OK);

  FieldGuard back;
  REQUIRE(veloreg_field_read(base.c_str(), &back.f) == VELOREG_OK);
  std::vector<float> out(n);
  CHECK(veloreg_field_get_f32(back.f, out.data(), n) == VELOREG_OK);
  CHECK(std::memcmp(out.data(), data.data(), n * sizeof(float)) == 0);

  SUBCASE("bad dims are rejected with a message") {
    const int32_t bad[3] = {10, 16, 16};
    veloreg_field* g = nullptr;
    CHECK(veloreg_field_create(bad, "f32", &g) == VELOREG_ERR_INVALID_ARG);
    CHECK(std::strlen(veloreg_last_error()) > 0);
    CHECK(g == nullptr);
  }
  SUBCASE("wrong count is rejected") {
    CHECK(veloreg_field_get_f32(f.f, out.data(), n - 1) == VELOREG_ERR_INVALID_ARG);
  }
  SUBCASE("u16 accessors demand a label field") {
    std::vector<uint16_t> lab(n);
    CHECK(veloreg_field_get_u16(f.f, lab.data(), n) == VELOREG_ERR_INVALID_ARG);
  }
  SUBCASE("reading a missing volume fails with io status") {
    veloreg_field* g = nullptr;
    CHECK(veloreg_field_read(temp_base("missing").c_str(), &g) == VELOREG_ERR_IO);
  }
}

TEST_CASE("synth, warp, metrics, and registration through the c api") {
  veloreg_synth_opts so;
  veloreg_synth_opts_init(&so);
  so.dims[0] = so.dims[1] = so.dims[2] = 16;
  so.seed = 42;
  so.amplitude = 0.2;
  so.with_labels = 1;

  FieldGuard ref, v1, v2, v3, tpl, labels;
  REQUIRE(veloreg_synth(&so, &ref.f, &v1.f, &v2.f, &v3.f, &tpl.f, &labels.f) == VELOREG_OK);
  CHECK(std::strcmp(veloreg_field_dtype(labels.f), "u16") == 0);

  SUBCASE("synth is deterministic under a fixed seed") {
    FieldGuard ref2;
    REQUIRE(veloreg_synth(&so, &ref2.f, nullptr, nullptr, nullptr, nullptr, nullptr) == VELOREG_OK);
    const size_t n = 16 * 16 * 16;
    std::vector<float> a(n), b(n);
    CHECK(veloreg_field_get_f32(ref.f, a.data(), n) == VELOREG_OK);
    CHECK(veloreg_field_get_f32(ref2.f, b.data(), n) == VELOREG_OK);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(float)) == 0);
  }

  SUBCASE("warp round trip returns near the original") {
    veloreg_warp_opts wo;
    veloreg_warp_opts_init(&wo);
    FieldGuard fwd, back;
    REQUIRE(veloreg_warp(ref.f, v1.f, v2.f, v3.f, &wo, &fwd.f) == VELOREG_OK);
    wo.direction = -1;
    REQUIRE(veloreg_warp(fwd.f, v1.f, v2.f, v3.f, &wo, &back.f) == VELOREG_OK);

    const size_t n = 16 * 16 * 16;
    std::vector<float> a(n), b(n);
    veloreg_field_get_f32(ref.f, a.data(), n);
    veloreg_field_get_f32(back.f, b.data(), n);
    double err2 = 0.0, ref2n = 0.0;
    for (size_t i = 0; i < n; ++i) {
      err2 += (a[i] - b[i]) * (a[i] - b[i]);
      ref2n += a[i] * a[i];
    }
    CHECK(std::sqrt(err2 / ref2n) < 0.1);
  }

  SUBCASE("warp validates grids") {
    const int32_t dims[3] = {32, 16, 16};
    FieldGuard other;
    REQUIRE(veloreg_field_create(dims, "f32", &other.f) == VELOREG_OK);
    veloreg_warp_opts wo;
    veloreg_warp_opts_init(&wo);
    veloreg_field* out = nullptr;
    CHECK(veloreg_warp(other.f, v1.f, v2.f, v3.f, &wo, &out) == VELOREG_ERR_GRID_MISMATCH);
  }

  SUBCASE("labels warp by nearest neighbor and dice sees the overlap") {
    veloreg_warp_opts wo;
    veloreg_warp_opts_init(&wo);
    FieldGuard moved;
    REQUIRE(veloreg_warp(labels.f, v1.f, v2.f, v3.f, &wo, &moved.f) == VELOREG_OK);
    CHECK(std::strcmp(veloreg_field_dtype(moved.f), "u16") == 0);
    double d = 0.0;
    CHECK(veloreg_metric_dice(labels.f, labels.f, nullptr, 0, &d) == VELOREG_OK);
    CHECK(d == 1.0);
  }

  SUBCASE("detf of the synthetic velocity is positive") {
    double stats[3] = {0, 0, 0};
    REQUIRE(veloreg_metric_detf(v1.f, v2.f, v3.f, 4, VELOREG_INTERP_BSPLINE, VELOREG_DERIV_FD8,
                                nullptr, stats) == VELOREG_OK);
    CHECK(stats[0] > 0.0);
    CHECK(stats[0] <= stats[1]);
    CHECK(stats[1] <= stats[2]);
  }

  SUBCASE("registration recovers the match") {
    veloreg_reg_opts ro;
    veloreg_reg_opts_init(&ro);
    CHECK(ro.beta == 5e-4);
    CHECK(ro.gamma == 1e-4);
    CHECK(ro.nt == 4);
    CHECK(ro.gtol == 5e-2);
    CHECK(ro.max_newton == 50);
    CHECK(ro.max_pcg == 500);

    veloreg_registration* reg = nullptr;
    REQUIRE(veloreg_register(ref.f, tpl.f, &ro, &reg) == VELOREG_OK);
    CHECK(veloreg_registration_converged(reg) == 1);
    const char* report = veloreg_registration_report(reg);
    CHECK(std::string(report).find("\"mismatch_rel\"") != std::string::npos);
    CHECK(std::string(report).find("\"det_f\"") != std::string::npos);

    FieldGuard warped, w1;
    CHECK(veloreg_registration_warped(reg, &warped.f) == VELOREG_OK);
    CHECK(veloreg_registration_velocity(reg, 0, &w1.f) == VELOREG_OK);
    veloreg_field* bad = nullptr;
    CHECK(veloreg_registration_velocity(reg, 3, &bad) == VELOREG_ERR_INVALID_ARG);

    double mism = 0.0;
    CHECK(veloreg_metric_mismatch(warped.f, ref.f, tpl.f, &mism) == VELOREG_OK);
    CHECK(mism < 0.5);
    veloreg_registration_free(reg);
  }

  SUBCASE("registration rejects mismatched grids") {
    const int32_t dims[3] = {32, 16, 16};
    FieldGuard other;
    REQUIRE(veloreg_field_create(dims, "f32", &other.f) == VELOREG_OK);
    veloreg_reg_opts ro;
    veloreg_reg_opts_init(&ro);
    veloreg_registration* reg = nullptr;
    CHECK(veloreg_register(ref.f, other.f, &ro, &reg) == VELOREG_ERR_GRID_MISMATCH);
  }
}

TEST_CASE("bench entry points") {
  veloreg_bench_row row;
  REQUIRE(veloreg_bench_interp(16, VELOREG_INTERP_LINEAR, 42, 0.5, 1, &row) == VELOREG_OK);
  CHECK(row.n == 16);
  CHECK(row.rel_err > 0.0);

  int32_t mem_bound = 0;
  REQUIRE(veloreg_bench_throughput("lagrange", 16, 1, 42, 14000.0, 900.0, &row, &mem_bound) ==
          VELOREG_OK);
  CHECK(mem_bound == 1);
  CHECK(row.intensity == doctest::Approx(11.05));

  REQUIRE(veloreg_bench_advect(16, VELOREG_INTERP_BSPLINE, 4, 42, &row) == VELOREG_OK);
  CHECK(row.rel_err >= 0.0);

  double omega[32], err[32];
  int32_t count = 0;
  REQUIRE(veloreg_bench_deriv_sweep(16, VELOREG_DERIV_FD8, omega, err, 32, &count) == VELOREG_OK);
  CHECK(count == 8);
  CHECK(omega[0] == 1.0);
  CHECK(err[0] < 1e-4);

  CHECK(veloreg_bench_throughput("nope", 16, 1, 42, 0, 0, &row, nullptr) == VELOREG_ERR_INVALID_ARG);
}

extern "C" int veloreg_header_compiles_as_c(void);

TEST_CASE("header compiles as C") {
  // the real check happens at build time in test_capi_header.c
  CHECK(veloreg_header_compiles_as_c() == 4);
}
