#include "veloreg/veloreg.h"

#include <cstdio>
#include <cstring>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "core/bench.hpp"
#include "core/optim.hpp"
#include "core/synth.hpp"
#include "core/volume_io.hpp"

using namespace veloreg;

namespace {

thread_local std::string t_last_error;

veloreg_status to_status(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return VELOREG_ERR_INVALID_ARG;
    case Errc::grid_mismatch: return VELOREG_ERR_GRID_MISMATCH;
    case Errc::io: return VELOREG_ERR_IO;
    case Errc::bad_format: return VELOREG_ERR_BAD_FORMAT;
    case Errc::not_converged: return VELOREG_ERR_NOT_CONVERGED;
    case Errc::internal: return VELOREG_ERR_INTERNAL;
  }
  return VELOREG_ERR_INTERNAL;
}

template <typename Fn>
veloreg_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return VELOREG_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return VELOREG_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return VELOREG_ERR_INTERNAL;
  }
}

veloreg_status invalid(const char* msg) {
  t_last_error = msg;
  return VELOREG_ERR_INVALID_ARG;
}

InterpVariant to_variant(int32_t v) {
  switch (v) {
    case VELOREG_INTERP_LINEAR: return InterpVariant::Linear;
    case VELOREG_INTERP_LAGRANGE: return InterpVariant::Lagrange;
    case VELOREG_INTERP_BSPLINE: return InterpVariant::Bspline;
  }
  fail(Errc::invalid_argument, "unknown interpolation variant id " + std::to_string(v));
}

DerivBackend to_backend(int32_t b) {
  switch (b) {
    case VELOREG_DERIV_FD8: return DerivBackend::Fd8;
    case VELOREG_DERIV_SPECTRAL: return DerivBackend::Spectral;
  }
  fail(Errc::invalid_argument, "unknown derivative backend id " + std::to_string(b));
}

SolverConfig to_config(const veloreg_reg_opts& o) {
  SolverConfig cfg;
  cfg.reg.beta = o.beta;
  cfg.reg.gamma = o.gamma;
  cfg.timegrid.nt = o.nt;
  cfg.gtol = o.gtol;
  cfg.max_newton = o.max_newton;
  cfg.max_pcg = o.max_pcg;
  cfg.armijo_c = o.armijo_c;
  cfg.max_linesearch = o.max_linesearch;
  cfg.continuation.beta0 = o.beta0;
  cfg.continuation.factor = o.continuation_factor;
  cfg.continuation.stage_gtol = o.stage_gtol;
  cfg.continuation.enabled = o.continuation != 0;
  cfg.interp = to_variant(o.interp);
  cfg.deriv = to_backend(o.deriv);
  return cfg;
}

}  // namespace

struct veloreg_field {
  Volume volume;

  const Grid& grid() const {
    return std::holds_alternative<ScalarField>(volume) ? std::get<ScalarField>(volume).grid
                                                       : std::get<LabelMap>(volume).grid;
  }
  bool is_f32() const { return std::holds_alternative<ScalarField>(volume); }
  const ScalarField& f32() const {
    if (!is_f32()) fail(Errc::invalid_argument, "expected an f32 field");
    return std::get<ScalarField>(volume);
  }
  const LabelMap& u16() const {
    if (is_f32()) fail(Errc::invalid_argument, "expected a u16 label field");
    return std::get<LabelMap>(volume);
  }
};

struct veloreg_registration {
  RegistrationResult result;
  std::string report_json;
};

extern "C" {

const char* veloreg_version(void) { return "1.0.0"; }

const char* veloreg_status_string(veloreg_status status) {
  switch (status) {
    case VELOREG_OK: return "ok";
    case VELOREG_ERR_INVALID_ARG: return "invalid argument";
    case VELOREG_ERR_GRID_MISMATCH: return "grid mismatch";
    case VELOREG_ERR_IO: return "i/o error";
    case VELOREG_ERR_BAD_FORMAT: return "bad format";
    case VELOREG_ERR_NOT_CONVERGED: return "not converged";
    case VELOREG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* veloreg_last_error(void) { return t_last_error.c_str(); }

void veloreg_set_threads(int32_t threads) {
#ifdef _OPENMP
  if (threads > 0) {
    omp_set_num_threads(threads);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
#else
  (void)threads;
#endif
}

veloreg_status veloreg_field_create(const int32_t dims[3], const char* dtype, veloreg_field** out) {
  if (!dims || !dtype || !out) return invalid("veloreg_field_create: null argument");
  return guarded([&] {
    const Grid g = make_grid({dims[0], dims[1], dims[2]});
    auto* f = new veloreg_field;
    if (std::strcmp(dtype, "f32") == 0) {
      f->volume = ScalarField(g);
    } else if (std::strcmp(dtype, "u16") == 0) {
      f->volume = LabelMap(g);
    } else {
      delete f;
      fail(Errc::invalid_argument, std::string("unknown dtype '") + dtype + "'");
    }
    *out = f;
  });
}

veloreg_status veloreg_field_read(const char* path, veloreg_field** out) {
  if (!path || !out) return invalid("veloreg_field_read: null argument");
  return guarded([&] {
    auto* f = new veloreg_field;
    try {
      f->volume = read_volume(path);
    } catch (...) {
      delete f;
      throw;
    }
    *out = f;
  });
}

veloreg_status veloreg_field_write(const veloreg_field* field, const char* path) {
  if (!field || !path) return invalid("veloreg_field_write: null argument");
  return guarded([&] {
    if (field->is_f32()) {
      write_volume(std::get<ScalarField>(field->volume), path);
    } else {
      write_volume(std::get<LabelMap>(field->volume), path);
    }
  });
}

void veloreg_field_free(veloreg_field* field) { delete field; }

veloreg_status veloreg_field_dims(const veloreg_field* field, int32_t dims[3]) {
  if (!field || !dims) return invalid("veloreg_field_dims: null argument");
  const Grid& g = field->grid();
  for (int a = 0; a < 3; ++a) dims[a] = g.dims[static_cast<std::size_t>(a)];
  return VELOREG_OK;
}

const char* veloreg_field_dtype(const veloreg_field* field) {
  if (!field) return "";
  return field->is_f32() ? "f32" : "u16";
}

veloreg_status veloreg_field_get_f32(const veloreg_field* field, float* dst, size_t count) {
  if (!field || !dst) return invalid("veloreg_field_get_f32: null argument");
  return guarded([&] {
    const ScalarField& f = field->f32();
    if (count != f.values.size()) fail(Errc::invalid_argument, "element count mismatch");
    std::memcpy(dst, f.values.data(), count * sizeof(float));
  });
}

veloreg_status veloreg_field_set_f32(veloreg_field* field, const float* src, size_t count) {
  if (!field || !src) return invalid("veloreg_field_set_f32: null argument");
  return guarded([&] {
    if (!field->is_f32()) fail(Errc::invalid_argument, "expected an f32 field");
    auto& f = std::get<ScalarField>(field->volume);
    if (count != f.values.size()) fail(Errc::invalid_argument, "element count mismatch");
    std::memcpy(f.values.data(), src, count * sizeof(float));
    f.validate("veloreg_field_set_f32");
  });
}

veloreg_status veloreg_field_get_u16(const veloreg_field* field, uint16_t* dst, size_t count) {
  if (!field || !dst) return invalid("veloreg_field_get_u16: null argument");
  return guarded([&] {
    const LabelMap& m = field->u16();
    if (count != m.labels.size()) fail(Errc::invalid_argument, "element count mismatch");
    std::memcpy(dst, m.labels.data(), count * sizeof(uint16_t));
  });
}

veloreg_status veloreg_field_set_u16(veloreg_field* field, const uint16_t* src, size_t count) {
  if (!field || !src) return invalid("veloreg_field_set_u16: null argument");
  return guarded([&] {
    if (field->is_f32()) fail(Errc::invalid_argument, "expected a u16 label field");
    auto& m = std::get<LabelMap>(field->volume);
    if (count != m.labels.size()) fail(Errc::invalid_argument, "element count mismatch");
    std::memcpy(m.labels.data(), src, count * sizeof(uint16_t));
  });
}

void veloreg_reg_opts_init(veloreg_reg_opts* opts) {
  if (!opts) return;
  SolverConfig d;
  opts->beta = d.reg.beta;
  opts->gamma = d.reg.gamma;
  opts->nt = d.timegrid.nt;
  opts->gtol = d.gtol;
  opts->max_newton = d.max_newton;
  opts->max_pcg = d.max_pcg;
  opts->armijo_c = d.armijo_c;
  opts->max_linesearch = d.max_linesearch;
  opts->beta0 = d.continuation.beta0;
  opts->continuation_factor = d.continuation.factor;
  opts->stage_gtol = d.continuation.stage_gtol;
  opts->continuation = d.continuation.enabled ? 1 : 0;
  opts->interp = VELOREG_INTERP_BSPLINE;
  opts->deriv = VELOREG_DERIV_FD8;
}

veloreg_status veloreg_register(const veloreg_field* reference, const veloreg_field* templ,
                                const veloreg_reg_opts* opts, veloreg_registration** out) {
  if (!reference || !templ || !opts || !out) return invalid("veloreg_register: null argument");
  return guarded([&] {
    auto* reg = new veloreg_registration;
    try {
      reg->result = register_images(reference->f32(), templ->f32(), to_config(*opts));
      reg->report_json = reg->result.report.to_json();
    } catch (...) {
      delete reg;
      throw;
    }
    *out = reg;
  });
}

veloreg_status veloreg_registration_velocity(const veloreg_registration* reg, int32_t axis,
                                             veloreg_field** out) {
  if (!reg || !out) return invalid("veloreg_registration_velocity: null argument");
  if (axis < 0 || axis > 2) return invalid("veloreg_registration_velocity: axis must be 0..2");
  return guarded([&] {
    auto* f = new veloreg_field;
    f->volume = reg->result.velocity[axis];
    *out = f;
  });
}

veloreg_status veloreg_registration_warped(const veloreg_registration* reg, veloreg_field** out) {
  if (!reg || !out) return invalid("veloreg_registration_warped: null argument");
  return guarded([&] {
    auto* f = new veloreg_field;
    f->volume = reg->result.warped;
    *out = f;
  });
}

const char* veloreg_registration_report(const veloreg_registration* reg) {
  return reg ? reg->report_json.c_str() : "";
}

int32_t veloreg_registration_converged(const veloreg_registration* reg) {
  return reg && reg->result.report.status == SolveStatus::Converged ? 1 : 0;
}

void veloreg_registration_free(veloreg_registration* reg) { delete reg; }

void veloreg_warp_opts_init(veloreg_warp_opts* opts) {
  if (!opts) return;
  opts->nt = 4;
  opts->interp = VELOREG_INTERP_BSPLINE;
  opts->direction = 1;
}

veloreg_status veloreg_warp(const veloreg_field* image, const veloreg_field* v1,
                            const veloreg_field* v2, const veloreg_field* v3,
                            const veloreg_warp_opts* opts, veloreg_field** out) {
  if (!image || !v1 || !v2 || !v3 || !opts || !out) return invalid("veloreg_warp: null argument");
  if (opts->direction != 1 && opts->direction != -1) {
    return invalid("veloreg_warp: direction must be +1 or -1");
  }
  return guarded([&] {
    VectorField v(v1->f32().grid);
    v[0] = v1->f32();
    v[1] = v2->f32();
    v[2] = v3->f32();
    require_same_grid(v[0].grid, v[1].grid, "veloreg_warp");
    require_same_grid(v[0].grid, v[2].grid, "veloreg_warp");
    require_same_grid(v[0].grid, image->grid(), "veloreg_warp");
    if (opts->direction < 0) scale(v, -1.0f);
    const TimeGrid tg{opts->nt};
    const InterpVariant variant = to_variant(opts->interp);

    auto* f = new veloreg_field;
    try {
      if (image->is_f32()) {
        f->volume = solve_state(v, image->f32(), tg, variant).final();
      } else {
        const DeformationMap map = compute_deformation_map(v, tg, variant);
        f->volume = warp_labels(image->u16(), map);
      }
    } catch (...) {
      delete f;
      throw;
    }
    *out = f;
  });
}

void veloreg_synth_opts_init(veloreg_synth_opts* opts) {
  if (!opts) return;
  opts->dims[0] = opts->dims[1] = opts->dims[2] = 64;
  opts->scase = VELOREG_SYNTH_BLOBS;
  opts->seed = 42;
  opts->amplitude = 0.3;
  opts->with_labels = 0;
  opts->nt = 4;
  opts->interp = VELOREG_INTERP_BSPLINE;
}

veloreg_status veloreg_synth(const veloreg_synth_opts* opts, veloreg_field** reference,
                             veloreg_field** v1, veloreg_field** v2, veloreg_field** v3,
                             veloreg_field** templ, veloreg_field** labels) {
  if (!opts) return invalid("veloreg_synth: null options");
  return guarded([&] {
    SynthOptions so;
    so.grid = make_grid({opts->dims[0], opts->dims[1], opts->dims[2]});
    so.scase = opts->scase == VELOREG_SYNTH_SINSQ ? SynthCase::SinSq : SynthCase::Blobs;
    so.seed = opts->seed;
    so.amplitude = opts->amplitude;
    so.with_labels = opts->with_labels != 0 || labels != nullptr;
    so.timegrid.nt = opts->nt;
    so.variant = to_variant(opts->interp);
    SynthOutput sy = make_synthetic(so);

    auto emit_scalar = [](veloreg_field** slot, ScalarField&& field) {
      if (!slot) return;
      auto* f = new veloreg_field;
      f->volume = std::move(field);
      *slot = f;
    };
    emit_scalar(reference, std::move(sy.reference));
    emit_scalar(v1, std::move(sy.velocity[0]));
    emit_scalar(v2, std::move(sy.velocity[1]));
    emit_scalar(v3, std::move(sy.velocity[2]));
    emit_scalar(templ, std::move(sy.templ));
    if (labels) {
      auto* f = new veloreg_field;
      f->volume = std::move(*sy.labels);
      *labels = f;
    }
  });
}

veloreg_status veloreg_metric_mismatch(const veloreg_field* m_final, const veloreg_field* reference,
                                       const veloreg_field* templ, double* out) {
  if (!m_final || !reference || !templ || !out) return invalid("veloreg_metric_mismatch: null argument");
  return guarded([&] { *out = relative_mismatch(m_final->f32(), reference->f32(), templ->f32()); });
}

veloreg_status veloreg_metric_dice(const veloreg_field* a, const veloreg_field* b,
                                   const uint16_t* labels, int32_t nlabels, double* out) {
  if (!a || !b || !out) return invalid("veloreg_metric_dice: null argument");
  if (nlabels > 0 && !labels) return invalid("veloreg_metric_dice: labels pointer is null");
  return guarded([&] {
    std::vector<std::uint16_t> set;
    for (int32_t i = 0; i < nlabels; ++i) set.push_back(labels[i]);
    *out = dice(a->u16(), b->u16(), set);
  });
}

veloreg_status veloreg_metric_detf(const veloreg_field* v1, const veloreg_field* v2,
                                   const veloreg_field* v3, int32_t nt, int32_t interp, int32_t deriv,
                                   veloreg_field** det_out, double stats[3]) {
  if (!v1 || !v2 || !v3 || !stats) return invalid("veloreg_metric_detf: null argument");
  return guarded([&] {
    VectorField v(v1->f32().grid);
    v[0] = v1->f32();
    v[1] = v2->f32();
    v[2] = v3->f32();
    require_same_grid(v[0].grid, v[1].grid, "veloreg_metric_detf");
    require_same_grid(v[0].grid, v[2].grid, "veloreg_metric_detf");
    const DeformationMap map = compute_deformation_map(v, TimeGrid{nt}, to_variant(interp));
    auto [det, st] = det_deformation_gradient(map, to_backend(deriv));
    stats[0] = st.min;
    stats[1] = st.mean;
    stats[2] = st.max;
    if (det_out) {
      auto* f = new veloreg_field;
      f->volume = std::move(det);
      *det_out = f;
    }
  });
}

namespace {

void fill_row(const BenchRow& row, veloreg_bench_row* out) {
  std::snprintf(out->kernel, sizeof(out->kernel), "%s", row.kernel.c_str());
  out->n = row.n;
  out->time_s = row.time_s;
  out->bytes = row.bytes;
  out->eff_bw = row.eff_bw;
  out->rel_err = row.rel_err;
  out->intensity = row.intensity;
}

}  // namespace

veloreg_status veloreg_bench_interp(int32_t n, int32_t variant, uint64_t seed, double pert_frac,
                                    int32_t reps, veloreg_bench_row* out) {
  if (!out) return invalid("veloreg_bench_interp: null output");
  return guarded([&] {
    fill_row(interp_accuracy_bench(n, to_variant(variant), seed, pert_frac, reps), out);
  });
}

veloreg_status veloreg_bench_advect(int32_t n, int32_t variant, int32_t nt, uint64_t seed,
                                    veloreg_bench_row* out) {
  if (!out) return invalid("veloreg_bench_advect: null output");
  return guarded([&] { fill_row(advect_roundtrip_bench(n, to_variant(variant), nt, seed), out); });
}

veloreg_status veloreg_bench_throughput(const char* kernel, int32_t n, int32_t reps, uint64_t seed,
                                        double peak_gflops, double peak_bandwidth_gbs,
                                        veloreg_bench_row* out, int32_t* memory_bound_out) {
  if (!kernel || !out) return invalid("veloreg_bench_throughput: null argument");
  return guarded([&] {
    fill_row(throughput_bench(kernel, n, reps, seed), out);
    if (memory_bound_out) {
      DeviceModel device;
      if (peak_gflops > 0.0) device.peak_gflops = peak_gflops;
      if (peak_bandwidth_gbs > 0.0) device.peak_bandwidth_gbs = peak_bandwidth_gbs;
      *memory_bound_out = memory_bound(analytic_intensity(kernel), device) ? 1 : 0;
    }
  });
}

veloreg_status veloreg_bench_deriv_sweep(int32_t n, int32_t backend, double* omega, double* rel_err,
                                         int32_t capacity, int32_t* count) {
  if (!count) return invalid("veloreg_bench_deriv_sweep: null count");
  if (capacity > 0 && (!omega || !rel_err)) return invalid("veloreg_bench_deriv_sweep: null arrays");
  return guarded([&] {
    const auto rows = derivative_accuracy_sweep(n, to_backend(backend));
    *count = static_cast<int32_t>(rows.size());
    const int32_t m = std::min<int32_t>(capacity, *count);
    for (int32_t i = 0; i < m; ++i) {
      omega[i] = rows[static_cast<std::size_t>(i)].first;
      rel_err[i] = rows[static_cast<std::size_t>(i)].second;
    }
  });
}

}  // extern "C"
