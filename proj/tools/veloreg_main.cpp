// veloreg command-line front end. Talks to the solver exclusively through the
// shared library's C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <veloreg/veloreg.h>

namespace {

using nlohmann::json;

class CliError : public std::runtime_error {
 public:
  explicit CliError(const std::string& what) : std::runtime_error(what) {}
};

void check(veloreg_status status, const std::string& what) {
  if (status != VELOREG_OK) {
    throw CliError(what + ": " + veloreg_status_string(status) + " (" + veloreg_last_error() + ")");
  }
}

struct FieldPtr {
  veloreg_field* f = nullptr;
  FieldPtr() = default;
  explicit FieldPtr(veloreg_field* p) : f(p) {}
  FieldPtr(const FieldPtr&) = delete;
  FieldPtr& operator=(const FieldPtr&) = delete;
  FieldPtr(FieldPtr&& o) noexcept : f(o.f) { o.f = nullptr; }
  FieldPtr& operator=(FieldPtr&& o) noexcept {
    std::swap(f, o.f);
    return o;
  }
  ~FieldPtr() { veloreg_field_free(f); }
  veloreg_field* get() const { return f; }
  veloreg_field** slot() { return &f; }
};

FieldPtr read_field(const std::string& path) {
  FieldPtr p;
  check(veloreg_field_read(path.c_str(), p.slot()), "reading " + path);
  return p;
}

void write_field(const FieldPtr& f, const std::string& path) {
  check(veloreg_field_write(f.get(), path.c_str()), "writing " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw CliError("cannot open " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw CliError("write failed: " + path);
}

void write_report(const std::string& path, const json& j) { write_text(path, j.dump(2)); }

int interp_id(const std::string& name) {
  if (name == "linear") return VELOREG_INTERP_LINEAR;
  if (name == "lagrange") return VELOREG_INTERP_LAGRANGE;
  if (name == "bspline") return VELOREG_INTERP_BSPLINE;
  throw CliError("unknown interpolation variant '" + name + "'");
}

int deriv_id(const std::string& name) {
  if (name == "fd8") return VELOREG_DERIV_FD8;
  if (name == "fft" || name == "spectral") return VELOREG_DERIV_SPECTRAL;
  throw CliError("unknown derivative backend '" + name + "'");
}

json row_json(const veloreg_bench_row& r) {
  return json{{"kernel", r.kernel}, {"N", r.n},           {"time_s", r.time_s},
              {"bytes", r.bytes},   {"eff_bw", r.eff_bw}, {"rel_err", r.rel_err},
              {"intensity", r.intensity}};
}

std::string row_csv(const veloreg_bench_row& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.6e,%.6e,%.6e,%.6e,%.6g", r.kernel, r.n, r.time_s, r.bytes,
                r.eff_bw, r.rel_err, r.intensity);
  return buf;
}

constexpr const char* kCsvHeader = "kernel,N,time_s,bytes,eff_bw,rel_err,intensity";

void apply_threads(int threads) {
  if (threads > 0) {
    veloreg_set_threads(threads);
    return;
  }
  if (const char* env = std::getenv("VELOREG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) veloreg_set_threads(n);
  }
}

// ---------------------------------------------------------------------------
// register
// ---------------------------------------------------------------------------

struct RegisterArgs {
  std::string ref, tpl, out;
  veloreg_reg_opts opts{};
  std::string interp = "bspline";
  std::string deriv = "fd8";
  bool no_continuation = false;
  int threads = 0;
};

int run_register(const RegisterArgs& a) {
  apply_threads(a.threads);
  std::filesystem::create_directories(a.out);

  const FieldPtr ref = read_field(a.ref);
  const FieldPtr tpl = read_field(a.tpl);

  veloreg_reg_opts opts = a.opts;
  opts.interp = interp_id(a.interp);
  opts.deriv = deriv_id(a.deriv);
  if (a.no_continuation) opts.continuation = 0;

  veloreg_registration* reg = nullptr;
  check(veloreg_register(ref.get(), tpl.get(), &opts, &reg), "registration");
  std::unique_ptr<veloreg_registration, void (*)(veloreg_registration*)> guard(
      reg, veloreg_registration_free);

  const std::filesystem::path out(a.out);
  for (int axis = 0; axis < 3; ++axis) {
    FieldPtr v;
    check(veloreg_registration_velocity(reg, axis, v.slot()), "extracting velocity");
    write_field(v, (out / ("velocity" + std::to_string(axis + 1))).string());
  }
  FieldPtr warped;
  check(veloreg_registration_warped(reg, warped.slot()), "extracting warped image");
  write_field(warped, (out / "warped").string());
  write_text((out / "report.json").string(), veloreg_registration_report(reg));

  const json report = json::parse(veloreg_registration_report(reg));
  std::cout << "status: " << report.at("status").get<std::string>()
            << "  mismatch: " << report.at("mismatch_rel").get<double>()
            << "  grad_rel: " << report.at("grad_rel").get<double>()
            << "  iters: " << report.at("newton_iterations").get<int>()
            << "  matvecs: " << report.at("hessian_matvecs").get<int>() << "\n";
  return veloreg_registration_converged(reg) ? 0 : 2;
}

// ---------------------------------------------------------------------------
// warp
// ---------------------------------------------------------------------------

struct WarpArgs {
  std::string image, v1, v2, v3, out;
  std::string direction = "forward";
  std::string interp = "bspline";
  int nt = 4;
  bool labels = false;
  int threads = 0;
};

int run_warp(const WarpArgs& a) {
  apply_threads(a.threads);
  const FieldPtr image = read_field(a.image);
  if (a.labels && std::string(veloreg_field_dtype(image.get())) != "u16") {
    throw CliError("--labels expects a u16 label volume");
  }
  const FieldPtr v1 = read_field(a.v1);
  const FieldPtr v2 = read_field(a.v2);
  const FieldPtr v3 = read_field(a.v3);

  veloreg_warp_opts opts;
  veloreg_warp_opts_init(&opts);
  opts.nt = a.nt;
  opts.interp = interp_id(a.interp);
  if (a.direction == "forward") {
    opts.direction = 1;
  } else if (a.direction == "backward") {
    opts.direction = -1;
  } else {
    throw CliError("--direction must be forward or backward");
  }

  FieldPtr out;
  check(veloreg_warp(image.get(), v1.get(), v2.get(), v3.get(), &opts, out.slot()), "warp");
  write_field(out, a.out);

  json report{{"command", "warp"},
              {"image", a.image},
              {"velocity", {a.v1, a.v2, a.v3}},
              {"direction", a.direction},
              {"nt", a.nt},
              {"interp", a.interp},
              {"labels", std::string(veloreg_field_dtype(image.get())) == "u16"},
              {"output", a.out}};
  write_report(std::filesystem::path(a.out).replace_extension().string() + ".report.json", report);
  return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  int size = 64;
  std::string scase = "blobs";
  std::uint64_t seed = 42;
  double amplitude = 0.3;
  bool labels = false;
  int nt = 4;
  std::string interp = "bspline";
  std::string out;
  int threads = 0;
};

int run_synth(const SynthArgs& a) {
  apply_threads(a.threads);
  std::filesystem::create_directories(a.out);

  veloreg_synth_opts opts;
  veloreg_synth_opts_init(&opts);
  opts.dims[0] = opts.dims[1] = opts.dims[2] = a.size;
  if (a.scase == "blobs") {
    opts.scase = VELOREG_SYNTH_BLOBS;
  } else if (a.scase == "sinsq") {
    opts.scase = VELOREG_SYNTH_SINSQ;
  } else {
    throw CliError("--case must be blobs or sinsq");
  }
  opts.seed = a.seed;
  opts.amplitude = a.amplitude;
  opts.with_labels = a.labels ? 1 : 0;
  opts.nt = a.nt;
  opts.interp = interp_id(a.interp);

  FieldPtr reference, v1, v2, v3, templ, labels;
  check(veloreg_synth(&opts, reference.slot(), v1.slot(), v2.slot(), v3.slot(), templ.slot(),
                      a.labels ? labels.slot() : nullptr),
        "synth");

  const std::filesystem::path out(a.out);
  write_field(reference, (out / "reference").string());
  write_field(v1, (out / "velocity1").string());
  write_field(v2, (out / "velocity2").string());
  write_field(v3, (out / "velocity3").string());
  write_field(templ, (out / "template").string());
  if (a.labels) write_field(labels, (out / "labels").string());

  json report{{"command", "synth"}, {"size", a.size},          {"case", a.scase},
              {"seed", a.seed},     {"amplitude", a.amplitude}, {"nt", a.nt},
              {"interp", a.interp}, {"labels", a.labels},
              {"outputs", {"reference", "velocity1", "velocity2", "velocity3", "template"}}};
  write_report((out / "report.json").string(), report);
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  int size = 64;
  std::string variant = "bspline";
  std::string backend = "fd8";
  std::string kernel = "all";
  std::uint64_t seed = 42;
  double pert = 0.5;
  int reps = 100;
  int nt = 4;
  double peak_gflops = 14000.0;
  double peak_bw = 900.0;
  std::string out;
  int threads = 0;
};

int run_bench_rows(const BenchArgs& a, const std::string& mode) {
  apply_threads(a.threads);
  std::filesystem::create_directories(a.out);
  const std::filesystem::path out(a.out);

  std::vector<veloreg_bench_row> rows;
  json extra;

  if (mode == "interp") {
    veloreg_bench_row row;
    check(veloreg_bench_interp(a.size, interp_id(a.variant), a.seed, a.pert, a.reps, &row), "bench");
    rows.push_back(row);
  } else if (mode == "advect") {
    veloreg_bench_row row;
    check(veloreg_bench_advect(a.size, interp_id(a.variant), a.nt, a.seed, &row), "bench");
    rows.push_back(row);
  } else if (mode == "throughput") {
    std::vector<std::string> kernels;
    if (a.kernel == "all") {
      kernels = {"copy-baseline", "fd8-partial", "prefilter", "linear", "lagrange", "bspline"};
    } else {
      kernels = {a.kernel};
    }
    json bound = json::object();
    for (const auto& k : kernels) {
      veloreg_bench_row row;
      int32_t memory_bound = 0;
      check(veloreg_bench_throughput(k.c_str(), a.size, a.reps, a.seed, a.peak_gflops, a.peak_bw,
                                     &row, &memory_bound),
            "bench " + k);
      rows.push_back(row);
      bound[k] = memory_bound ? "memory" : "compute";
    }
    extra["device"] = {{"peak_gflops", a.peak_gflops},
                       {"peak_bandwidth_gbs", a.peak_bw},
                       {"intensity", a.peak_gflops / a.peak_bw}};
    extra["bound_by"] = bound;
  } else {  // deriv sweep
    std::vector<double> omega(static_cast<std::size_t>(a.size) / 2);
    std::vector<double> err(omega.size());
    int32_t count = 0;
    check(veloreg_bench_deriv_sweep(a.size, deriv_id(a.backend), omega.data(), err.data(),
                                    static_cast<int32_t>(omega.size()), &count),
          "bench deriv");
    std::string csv = "omega,rel_err\n";
    json jrows = json::array();
    for (int32_t i = 0; i < count; ++i) {
      const std::size_t u = static_cast<std::size_t>(i);
      char line[80];
      std::snprintf(line, sizeof(line), "%d,%.6e\n", static_cast<int>(omega[u]), err[u]);
      csv += line;
      jrows.push_back({{"omega", static_cast<int>(omega[u])}, {"rel_err", err[u]}});
    }
    write_text((out / "sweep.csv").string(), csv);
    json report{{"command", "bench deriv"},
                {"size", a.size},
                {"backend", a.backend},
                {"rows", std::move(jrows)}};
    write_report((out / "report.json").string(), report);
    std::cout << csv;
    return 0;
  }

  std::string csv = std::string(kCsvHeader) + "\n";
  json jrows = json::array();
  for (const auto& r : rows) {
    csv += row_csv(r) + "\n";
    jrows.push_back(row_json(r));
  }
  write_text((out / "bench.csv").string(), csv);
  json report{{"command", "bench " + mode}, {"seed", a.seed}, {"rows", std::move(jrows)}};
  for (auto& [key, value] : extra.items()) report[key] = value;
  write_report((out / "report.json").string(), report);
  std::cout << csv;
  return 0;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

int run_metrics_dice(const std::string& a_path, const std::string& b_path,
                     const std::vector<int>& labels, const std::string& out_path) {
  const FieldPtr a = read_field(a_path);
  const FieldPtr b = read_field(b_path);
  std::vector<uint16_t> set(labels.begin(), labels.end());
  double value = 0.0;
  check(veloreg_metric_dice(a.get(), b.get(), set.empty() ? nullptr : set.data(),
                            static_cast<int32_t>(set.size()), &value),
        "dice");
  json report{{"command", "metrics dice"}, {"a", a_path}, {"b", b_path}, {"labels", labels},
              {"dice", value}};
  if (!out_path.empty()) write_report(out_path, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_metrics_mismatch(const std::string& final_path, const std::string& ref_path,
                         const std::string& tpl_path, const std::string& out_path) {
  const FieldPtr f = read_field(final_path);
  const FieldPtr r = read_field(ref_path);
  const FieldPtr t = read_field(tpl_path);
  double value = 0.0;
  check(veloreg_metric_mismatch(f.get(), r.get(), t.get(), &value), "mismatch");
  json report{{"command", "metrics mismatch"},
              {"final", final_path},
              {"reference", ref_path},
              {"template", tpl_path},
              {"mismatch_rel", value}};
  if (!out_path.empty()) write_report(out_path, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_metrics_detf(const std::string& v1p, const std::string& v2p, const std::string& v3p, int nt,
                     const std::string& interp, const std::string& deriv,
                     const std::string& out_path, const std::string& det_path) {
  const FieldPtr v1 = read_field(v1p);
  const FieldPtr v2 = read_field(v2p);
  const FieldPtr v3 = read_field(v3p);
  double stats[3] = {0, 0, 0};
  FieldPtr det;
  check(veloreg_metric_detf(v1.get(), v2.get(), v3.get(), nt, interp_id(interp), deriv_id(deriv),
                            det_path.empty() ? nullptr : det.slot(), stats),
        "detf");
  if (!det_path.empty()) write_field(det, det_path);
  json report{{"command", "metrics detf"},
              {"velocity", {v1p, v2p, v3p}},
              {"nt", nt},
              {"interp", interp},
              {"deriv", deriv},
              {"det_f", {{"min", stats[0]}, {"mean", stats[1]}, {"max", stats[2]}}}};
  if (!out_path.empty()) write_report(out_path, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary-velocity diffeomorphic image registration"};
  app.require_subcommand(1);

  // register ---------------------------------------------------------------
  RegisterArgs reg;
  veloreg_reg_opts_init(&reg.opts);
  auto* cmd_register = app.add_subcommand("register", "Register a template onto a reference image");
  cmd_register->add_option("--ref", reg.ref, "Reference volume (<base>.raw/.json)")->required();
  cmd_register->add_option("--tpl", reg.tpl, "Template volume")->required();
  cmd_register->add_option("--out", reg.out, "Output directory")->required();
  cmd_register->add_option("--beta", reg.opts.beta, "Target regularization weight");
  cmd_register->add_option("--gamma", reg.opts.gamma, "Divergence penalty weight");
  cmd_register->add_option("--nt", reg.opts.nt, "Semi-Lagrangian time steps");
  cmd_register->add_option("--gtol", reg.opts.gtol, "Relative gradient tolerance");
  cmd_register->add_option("--max-newton", reg.opts.max_newton, "Newton iteration cap");
  cmd_register->add_option("--max-pcg", reg.opts.max_pcg, "PCG iteration cap");
  cmd_register->add_option("--beta0", reg.opts.beta0, "Continuation start");
  cmd_register->add_option("--stage-gtol", reg.opts.stage_gtol, "Continuation stage tolerance");
  cmd_register->add_flag("--no-continuation", reg.no_continuation, "Solve at the target beta only");
  cmd_register->add_option("--interp", reg.interp, "linear | lagrange | bspline");
  cmd_register->add_option("--deriv", reg.deriv, "fd8 | fft");
  cmd_register->add_option("--threads", reg.threads, "Thread cap (VELOREG_THREADS as fallback)");

  // warp ---------------------------------------------------------------
  WarpArgs warp;
  auto* cmd_warp = app.add_subcommand("warp", "Transport an image along a velocity field");
  cmd_warp->add_option("--image", warp.image, "Input volume (f32 image or u16 labels)")->required();
  cmd_warp->add_option("--v1", warp.v1)->required();
  cmd_warp->add_option("--v2", warp.v2)->required();
  cmd_warp->add_option("--v3", warp.v3)->required();
  cmd_warp->add_option("--out", warp.out, "Output volume base path")->required();
  cmd_warp->add_option("--direction", warp.direction, "forward | backward");
  cmd_warp->add_option("--interp", warp.interp, "linear | lagrange | bspline");
  cmd_warp->add_option("--nt", warp.nt, "Time steps");
  cmd_warp->add_flag("--labels", warp.labels, "Require u16 input (nearest-neighbor semantics)");
  cmd_warp->add_option("--threads", warp.threads);

  // synth ---------------------------------------------------------------
  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic registration problem");
  cmd_synth->add_option("--size", synth.size, "Cubic grid size")->required();
  cmd_synth->add_option("--case", synth.scase, "blobs | sinsq");
  cmd_synth->add_option("--seed", synth.seed, "RNG seed");
  cmd_synth->add_option("--amplitude", synth.amplitude, "Peak ground-truth velocity");
  cmd_synth->add_flag("--labels", synth.labels, "Also emit a two-label map");
  cmd_synth->add_option("--nt", synth.nt, "Forward-warp time steps");
  cmd_synth->add_option("--interp", synth.interp, "Warp interpolation variant");
  cmd_synth->add_option("--out", synth.out, "Output directory")->required();
  cmd_synth->add_option("--threads", synth.threads);

  // bench ---------------------------------------------------------------
  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "Accuracy and throughput benchmarks");
  cmd_bench->require_subcommand(1);
  auto* bench_interp = cmd_bench->add_subcommand("interp", "Scattered-interpolation accuracy/time");
  auto* bench_deriv = cmd_bench->add_subcommand("deriv", "First-derivative accuracy sweep");
  auto* bench_advect = cmd_bench->add_subcommand("advect", "Forward-backward advection round trip");
  auto* bench_thru = cmd_bench->add_subcommand("throughput", "Kernel wall time and bandwidth model");
  for (auto* sub : {bench_interp, bench_deriv, bench_advect, bench_thru}) {
    sub->add_option("--size", bench.size, "Cubic grid size");
    sub->add_option("--seed", bench.seed, "Perturbation seed");
    sub->add_option("--out", bench.out, "Output directory")->required();
    sub->add_option("--threads", bench.threads);
  }
  bench_interp->add_option("--variant", bench.variant, "linear | lagrange | bspline");
  bench_interp->add_option("--pert", bench.pert, "Perturbation magnitude as a fraction of h");
  bench_interp->add_option("--reps", bench.reps, "Timing repetitions");
  bench_deriv->add_option("--backend", bench.backend, "fd8 | fft");
  bench_advect->add_option("--variant", bench.variant, "linear | lagrange | bspline");
  bench_advect->add_option("--nt", bench.nt, "Time steps");
  bench_thru->add_option("--kernel", bench.kernel,
                         "prefilter | linear | lagrange | bspline | fd8-partial | copy-baseline | all");
  bench_thru->add_option("--reps", bench.reps, "Timing repetitions");
  bench_thru->add_option("--peak-gflops", bench.peak_gflops, "Device peak GFLOP/s (model input)");
  bench_thru->add_option("--peak-bw", bench.peak_bw, "Device peak bandwidth GB/s (model input)");

  // metrics ---------------------------------------------------------------
  auto* cmd_metrics = app.add_subcommand("metrics", "Registration quality metrics");
  cmd_metrics->require_subcommand(1);
  std::string m_a, m_b, m_final, m_ref, m_tpl, m_v1, m_v2, m_v3, m_out, m_det;
  std::vector<int> m_labels;
  int m_nt = 4;
  std::string m_interp = "bspline", m_deriv = "fd8";
  auto* metrics_dice = cmd_metrics->add_subcommand("dice", "Label overlap");
  metrics_dice->add_option("--a", m_a)->required();
  metrics_dice->add_option("--b", m_b)->required();
  metrics_dice->add_option("--labels", m_labels, "Label ids (default: union of nonzero)");
  metrics_dice->add_option("--out", m_out, "Report path");
  auto* metrics_mismatch = cmd_metrics->add_subcommand("mismatch", "Relative image mismatch");
  metrics_mismatch->add_option("--final", m_final)->required();
  metrics_mismatch->add_option("--ref", m_ref)->required();
  metrics_mismatch->add_option("--tpl", m_tpl)->required();
  metrics_mismatch->add_option("--out", m_out, "Report path");
  auto* metrics_detf = cmd_metrics->add_subcommand("detf", "Deformation-gradient determinant");
  metrics_detf->add_option("--v1", m_v1)->required();
  metrics_detf->add_option("--v2", m_v2)->required();
  metrics_detf->add_option("--v3", m_v3)->required();
  metrics_detf->add_option("--nt", m_nt);
  metrics_detf->add_option("--interp", m_interp);
  metrics_detf->add_option("--deriv", m_deriv);
  metrics_detf->add_option("--out", m_out, "Report path");
  metrics_detf->add_option("--det-out", m_det, "Per-node determinant volume");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_register) return run_register(reg);
    if (*cmd_warp) return run_warp(warp);
    if (*cmd_synth) return run_synth(synth);
    if (*cmd_bench) {
      if (*bench_interp) return run_bench_rows(bench, "interp");
      if (*bench_deriv) return run_bench_rows(bench, "deriv");
      if (*bench_advect) return run_bench_rows(bench, "advect");
      return run_bench_rows(bench, "throughput");
    }
    if (*cmd_metrics) {
      if (*metrics_dice) return run_metrics_dice(m_a, m_b, m_labels, m_out);
      if (*metrics_mismatch) return run_metrics_mismatch(m_final, m_ref, m_tpl, m_out);
      return run_metrics_detf(m_v1, m_v2, m_v3, m_nt, m_interp, m_deriv, m_out, m_det);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
