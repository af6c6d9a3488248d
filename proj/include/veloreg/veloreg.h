/* veloreg - stationary-velocity diffeomorphic image registration.
 *
 * C interface to the shared library. All objects are opaque handles created
 * and destroyed through these functions; every fallible call returns a
 * veloreg_status and leaves a human-readable message in veloreg_last_error()
 * (thread-local) on failure.
 *
 * Volumes live on a periodic (0,2pi)^3 grid with even dims >= 16 and are
 * stored as "<base>.raw" (little-endian payload) plus "<base>.json" sidecar.
 */
#ifndef VELOREG_H
#define VELOREG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VELOREG_API __declspec(dllexport)
#else
#define VELOREG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t veloreg_status;

enum {
  VELOREG_OK = 0,
  VELOREG_ERR_INVALID_ARG = 1,
  VELOREG_ERR_GRID_MISMATCH = 2,
  VELOREG_ERR_IO = 3,
  VELOREG_ERR_BAD_FORMAT = 4,
  VELOREG_ERR_NOT_CONVERGED = 5,
  VELOREG_ERR_INTERNAL = 6
};

enum {
  VELOREG_INTERP_LINEAR = 0,
  VELOREG_INTERP_LAGRANGE = 1,
  VELOREG_INTERP_BSPLINE = 2
};

enum {
  VELOREG_DERIV_FD8 = 0,
  VELOREG_DERIV_SPECTRAL = 1
};

enum {
  VELOREG_SYNTH_BLOBS = 0,
  VELOREG_SYNTH_SINSQ = 1
};

VELOREG_API const char* veloreg_version(void);
VELOREG_API const char* veloreg_status_string(veloreg_status status);

/* Message for the most recent failure on this thread; empty string if none. */
VELOREG_API const char* veloreg_last_error(void);

/* Caps internal data parallelism; 0 restores the default. */
VELOREG_API void veloreg_set_threads(int32_t threads);

/* ------------------------------------------------------------------ */
/* Volumes                                                            */
/* ------------------------------------------------------------------ */

typedef struct veloreg_field veloreg_field;

/* dtype is "f32" or "u16". New fields are zero-filled. */
VELOREG_API veloreg_status veloreg_field_create(const int32_t dims[3], const char* dtype,
                                                veloreg_field** out);
VELOREG_API veloreg_status veloreg_field_read(const char* path, veloreg_field** out);
VELOREG_API veloreg_status veloreg_field_write(const veloreg_field* field, const char* path);
VELOREG_API void veloreg_field_free(veloreg_field* field);

VELOREG_API veloreg_status veloreg_field_dims(const veloreg_field* field, int32_t dims[3]);
VELOREG_API const char* veloreg_field_dtype(const veloreg_field* field);

/* count must equal dims[0]*dims[1]*dims[2]. */
VELOREG_API veloreg_status veloreg_field_get_f32(const veloreg_field* field, float* dst, size_t count);
VELOREG_API veloreg_status veloreg_field_set_f32(veloreg_field* field, const float* src, size_t count);
VELOREG_API veloreg_status veloreg_field_get_u16(const veloreg_field* field, uint16_t* dst, size_t count);
VELOREG_API veloreg_status veloreg_field_set_u16(veloreg_field* field, const uint16_t* src, size_t count);

/* ------------------------------------------------------------------ */
/* Registration                                                       */
/* ------------------------------------------------------------------ */

typedef struct veloreg_reg_opts {
  double beta;          /* target regularization weight (default 5e-4) */
  double gamma;         /* divergence penalty (default 1e-4) */
  int32_t nt;           /* semi-Lagrangian time steps (default 4) */
  double gtol;          /* relative reduced-gradient tolerance (default 5e-2) */
  int32_t max_newton;   /* default 50 */
  int32_t max_pcg;      /* default 500 */
  double armijo_c;      /* default 1e-4 */
  int32_t max_linesearch; /* default 10 */
  double beta0;         /* continuation start (default 1e-1) */
  double continuation_factor; /* default 10 */
  double stage_gtol;    /* continuation stage tolerance (default 2.5e-1) */
  int32_t continuation; /* nonzero enables beta continuation (default 1) */
  int32_t interp;       /* VELOREG_INTERP_* (default bspline) */
  int32_t deriv;        /* VELOREG_DERIV_* (default fd8) */
} veloreg_reg_opts;

VELOREG_API void veloreg_reg_opts_init(veloreg_reg_opts* opts);

typedef struct veloreg_registration veloreg_registration;

/* Registers `templ` onto `reference` (both f32, same grid). The solver
 * returns VELOREG_OK even when it stops on an iteration cap; inspect
 * veloreg_registration_converged. */
VELOREG_API veloreg_status veloreg_register(const veloreg_field* reference,
                                            const veloreg_field* templ,
                                            const veloreg_reg_opts* opts,
                                            veloreg_registration** out);

/* axis is 0..2; returns a fresh field handle owned by the caller. */
VELOREG_API veloreg_status veloreg_registration_velocity(const veloreg_registration* reg, int32_t axis,
                                                         veloreg_field** out);
VELOREG_API veloreg_status veloreg_registration_warped(const veloreg_registration* reg,
                                                       veloreg_field** out);
/* JSON report; the string is owned by the registration handle. */
VELOREG_API const char* veloreg_registration_report(const veloreg_registration* reg);
VELOREG_API int32_t veloreg_registration_converged(const veloreg_registration* reg);
VELOREG_API void veloreg_registration_free(veloreg_registration* reg);

/* ------------------------------------------------------------------ */
/* Transport                                                          */
/* ------------------------------------------------------------------ */

typedef struct veloreg_warp_opts {
  int32_t nt;        /* default 4 */
  int32_t interp;    /* default bspline; ignored for u16 images (nearest) */
  int32_t direction; /* +1 forward (default), -1 negates the velocity */
} veloreg_warp_opts;

VELOREG_API void veloreg_warp_opts_init(veloreg_warp_opts* opts);

/* Transports `image` along the velocity (v1,v2,v3). An f32 image is advected
 * with the configured interpolation; a u16 label image moves by
 * nearest-neighbor lookup. */
VELOREG_API veloreg_status veloreg_warp(const veloreg_field* image, const veloreg_field* v1,
                                        const veloreg_field* v2, const veloreg_field* v3,
                                        const veloreg_warp_opts* opts, veloreg_field** out);

/* ------------------------------------------------------------------ */
/* Synthetic data                                                     */
/* ------------------------------------------------------------------ */

typedef struct veloreg_synth_opts {
  int32_t dims[3];
  int32_t scase;     /* VELOREG_SYNTH_* (default blobs) */
  uint64_t seed;     /* default 42 */
  double amplitude;  /* peak ground-truth velocity (default 0.3) */
  int32_t with_labels;
  int32_t nt;        /* forward-warp steps for the template (default 4) */
  int32_t interp;    /* default bspline */
} veloreg_synth_opts;

VELOREG_API void veloreg_synth_opts_init(veloreg_synth_opts* opts);

/* Any output pointer may be NULL to skip it. labels requires with_labels. */
VELOREG_API veloreg_status veloreg_synth(const veloreg_synth_opts* opts, veloreg_field** reference,
                                         veloreg_field** v1, veloreg_field** v2, veloreg_field** v3,
                                         veloreg_field** templ, veloreg_field** labels);

/* ------------------------------------------------------------------ */
/* Metrics                                                            */
/* ------------------------------------------------------------------ */

VELOREG_API veloreg_status veloreg_metric_mismatch(const veloreg_field* m_final,
                                                   const veloreg_field* reference,
                                                   const veloreg_field* templ, double* out);

/* labels may be NULL with nlabels 0: the union of all nonzero labels. */
VELOREG_API veloreg_status veloreg_metric_dice(const veloreg_field* a, const veloreg_field* b,
                                               const uint16_t* labels, int32_t nlabels, double* out);

/* Determinant of the deformation gradient of the map generated by
 * (v1,v2,v3). stats receives {min, mean, max}; det_out (optional) receives
 * the per-node determinant field. */
VELOREG_API veloreg_status veloreg_metric_detf(const veloreg_field* v1, const veloreg_field* v2,
                                               const veloreg_field* v3, int32_t nt, int32_t interp,
                                               int32_t deriv, veloreg_field** det_out,
                                               double stats[3]);

/* ------------------------------------------------------------------ */
/* Benchmarks                                                         */
/* ------------------------------------------------------------------ */

typedef struct veloreg_bench_row {
  char kernel[32];
  int32_t n;
  double time_s;
  double bytes;   /* modeled bytes moved */
  double eff_bw;  /* bytes / time_s */
  double rel_err;
  double intensity; /* analytic FLOPS/MOPS */
} veloreg_bench_row;

VELOREG_API veloreg_status veloreg_bench_interp(int32_t n, int32_t variant, uint64_t seed,
                                                double pert_frac, int32_t reps,
                                                veloreg_bench_row* out);

VELOREG_API veloreg_status veloreg_bench_advect(int32_t n, int32_t variant, int32_t nt, uint64_t seed,
                                                veloreg_bench_row* out);

/* kernel: prefilter | linear | lagrange | bspline | fd8-partial |
 * copy-baseline. memory_bound_out (optional) is the roofline verdict for the
 * given device peaks. */
VELOREG_API veloreg_status veloreg_bench_throughput(const char* kernel, int32_t n, int32_t reps,
                                                    uint64_t seed, double peak_gflops,
                                                    double peak_bandwidth_gbs, veloreg_bench_row* out,
                                                    int32_t* memory_bound_out);

/* backend: VELOREG_DERIV_*. Writes up to `capacity` (omega, rel_err) pairs,
 * sets *count to the number available (n/2). */
VELOREG_API veloreg_status veloreg_bench_deriv_sweep(int32_t n, int32_t backend, double* omega,
                                                     double* rel_err, int32_t capacity,
                                                     int32_t* count);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VELOREG_H */
