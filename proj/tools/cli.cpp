#include "duquant/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include "duquant/bundle_io.hpp"
#include "duquant/calib.hpp"
#include "duquant/error.hpp"
#include "duquant/npy.hpp"
#include "duquant/pipeline.hpp"
#include "duquant/report.hpp"
#include "duquant/verify.hpp"

namespace duquant::cli {
namespace fs = std::filesystem;
using report::json;

namespace {

struct PipelineFlags {
  int bits_w = 4;
  int bits_a = 4;
  std::size_t block_size = kDefaultBlockSize;
  std::size_t steps = kDefaultGreedySteps;
  double alpha = kDefaultAlpha;
  double clip_w = 0.8;
  double clip_a = 0.9;
  std::string perm = "zigzag";
  std::string rotation = "greedy";
  bool no_smooth = false;
  bool no_r1 = false;
  bool no_r2 = false;
  std::size_t clip_grid = 0;
};

struct Common {
  std::optional<std::uint64_t> seed;
};

void add_pipeline_flags(CLI::App* app, PipelineFlags& f) {
  app->add_option("--bits-w", f.bits_w, "Weight bit width")->check(CLI::Range(2, 8));
  app->add_option("--bits-a", f.bits_a, "Activation bit width")->check(CLI::Range(2, 8));
  app->add_option("--block-size", f.block_size, "Rotation block size (power of two)");
  app->add_option("--steps", f.steps, "Greedy rotation steps");
  app->add_option("--alpha", f.alpha, "Smoothing migration strength")->check(CLI::Range(0.0, 1.0));
  app->add_option("--clip-w", f.clip_w, "Weight clipping ratio");
  app->add_option("--clip-a", f.clip_a, "Activation clipping ratio");
  app->add_option("--perm", f.perm, "Channel permutation")->check(CLI::IsMember({"none", "zigzag", "random"}));
  app->add_option("--rotation", f.rotation, "Rotation construction")->check(CLI::IsMember({"greedy", "hadamard"}));
  app->add_flag("--no-smooth", f.no_smooth, "Disable smoothing");
  app->add_flag("--no-r1", f.no_r1, "Disable the first rotation");
  app->add_flag("--no-r2", f.no_r2, "Disable the second rotation");
  app->add_option("--clip-grid", f.clip_grid, "Search weight clipping on this many grid points per axis");
}

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  const char* env = std::getenv("DUQUANT_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') throw ValueError("DUQUANT_SEED is not an unsigned integer: " + std::string(env));
  return v;
}

PipelineConfig make_config(const PipelineFlags& f, std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.alpha = f.alpha;
  cfg.rotation = {f.block_size, f.steps, seed};
  cfg.stages = {!f.no_smooth, !f.no_r1, f.perm != "none", !f.no_r2};
  cfg.perm_mode = f.perm == "random" ? PermMode::Random : PermMode::Zigzag;
  cfg.rotation_kind = f.rotation == "hadamard" ? RotationKind::Hadamard : RotationKind::Greedy;
  cfg.act_quant = {f.bits_a, f.clip_a, Axis::Rows};
  cfg.weight_quant = {f.bits_w, f.clip_w, Axis::Cols};
  cfg.weight_clip_grid = f.clip_grid;
  return cfg;
}

void write_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed writing " + path);
}

int cmd_synth(const SynthSpec& spec, const std::string& output) {
  spec.validate();
  npy::write_matrix(output, synth_activations(spec));
  return kOk;
}

int cmd_profile(const std::vector<std::string>& inputs, const std::string& report_path, std::ostream& out) {
  std::vector<Matrix> samples;
  samples.reserve(inputs.size());
  for (const auto& p : inputs) samples.push_back(npy::read_matrix(p));
  const OutlierProfile prof = aggregate_profile(samples);
  json j = {{"profile", report::to_json(prof)}};
  json cls = json::array();
  for (const Matrix& s : samples) cls.push_back(report::to_json(classify_outliers(s)));
  j["classification"] = std::move(cls);
  write_json(j, report_path, out);
  return kOk;
}

struct Operands {
  Matrix x;
  Matrix w;
  Matrix calib;
};

Operands load_operands(const std::string& x_path, const std::string& w_path, const std::string& calib_path) {
  Operands o{npy::read_matrix(x_path), npy::read_matrix(w_path), {}};
  o.calib = calib_path.empty() ? o.x : npy::read_matrix(calib_path);
  if (o.x.cols() != o.w.rows()) {
    throw ShapeError("x has " + std::to_string(o.x.cols()) + " columns but w has " + std::to_string(o.w.rows()) +
                     " rows");
  }
  if (o.calib.cols() != o.x.cols()) throw ShapeError("calibration matrix column count differs from x");
  return o;
}

void emit_warnings(const PipelineConfig& cfg, std::ostream& err) {
  for (const auto& w : cfg.validate()) err << "warning: " << w << '\n';
}

int cmd_calibrate(const Operands& o, const PipelineConfig& cfg, const std::string& output, std::ostream& err) {
  emit_warnings(cfg, err);
  save_bundle(output, calibrate(o.calib, o.w, cfg), cfg);
  return kOk;
}

int cmd_quantize(const Operands& o, PipelineConfig cfg, const std::string& bundle_dir, const std::string& output,
                 const std::string& report_path, std::ostream& out, std::ostream& err) {
  TransformBundle b;
  if (!bundle_dir.empty()) {
    LoadedBundle lb = load_bundle(bundle_dir);
    b = std::move(lb.bundle);
    // Quantization settings come from the command line, transforms from the bundle.
    cfg.alpha = lb.config.alpha;
    cfg.rotation = lb.config.rotation;
    cfg.stages = lb.config.stages;
    cfg.perm_mode = lb.config.perm_mode;
    cfg.rotation_kind = lb.config.rotation_kind;
    emit_warnings(cfg, err);
  } else {
    emit_warnings(cfg, err);
    b = calibrate(o.calib, o.w, cfg);
  }
  const ForwardResult fr = quantized_forward(o.x, o.w, b, cfg);
  const json rep = report::to_json(fr.report, cfg);

  fs::create_directories(output);
  const fs::path dir(output);
  save_bundle(dir, b, cfg);
  const QuantizedTensor qw = quantize_weight(transform_weight(o.w, b), cfg);
  npy::write_code_matrix(dir / "weight_codes.npy", qw.rows, qw.cols, qw.codes);
  npy::write_vector(dir / "weight_deltas.npy", qw.deltas);
  npy::write_index_vector(dir / "weight_zeros.npy", qw.zeros);
  npy::write_vector(dir / "weight_offsets.npy", qw.offsets);
  write_json(rep, (dir / "report.json").string(), out);
  if (!report_path.empty()) write_json(rep, report_path, out);
  return kOk;
}

int cmd_verify(std::size_t trials, std::uint64_t seed, std::ostream& out) {
  const auto results = run_verification({trials, seed, VerifyFault::None});
  bool all = true;
  out << std::left << std::setw(46) << "check" << std::right << std::setw(8) << "cases" << std::setw(10)
      << "failures" << std::setw(14) << "worst" << std::setw(12) << "tolerance"
      << "  result\n";
  for (const auto& r : results) {
    all = all && r.passed();
    out << std::left << std::setw(46) << r.name << std::right << std::setw(8) << r.cases << std::setw(10)
        << r.failures << std::setw(14) << std::setprecision(3) << std::scientific << r.worst << std::setw(12)
        << r.tolerance << std::defaultfloat << "  " << (r.passed() ? "PASS" : "FAIL") << '\n';
  }
  out << (all ? "all checks passed" : "some checks failed") << '\n';
  return all ? kOk : kVerifyFailed;
}

int cmd_sweep(const Operands& o, const PipelineConfig& cfg, const std::string& report_path, std::ostream& out) {
  write_json(report::to_json(ablation_sweep(o.x, o.w, cfg), cfg), report_path, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smoothing, block rotation and zigzag permutation for low-bit W/A quantization"};
  app.name("duquant");
  app.require_subcommand(1);

  Common common;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", common.seed, "Seed (falls back to DUQUANT_SEED)"); };

  // synth
  SynthSpec synth;
  std::string synth_out;
  auto* s = app.add_subcommand("synth", "Write a synthetic activation matrix with outliers");
  s->add_option("--rows", synth.rows, "Tokens");
  s->add_option("--cols", synth.cols, "Channels");
  s->add_option("--base-scale", synth.base_scale, "Background standard deviation");
  s->add_option("--normal-channels", synth.normal_channels, "Normal-outlier channel indices")->delimiter(',');
  s->add_option("--normal-mag", synth.normal_magnitude, "Normal-outlier magnitude");
  s->add_option("--massive", synth.massive_count, "Number of massive entries");
  s->add_option("--massive-mag", synth.massive_magnitude, "Massive-outlier magnitude");
  s->add_option("-o,--output", synth_out, "Output .npy")->required();
  add_seed(s);

  // profile
  std::vector<std::string> profile_in;
  std::string profile_report;
  auto* p = app.add_subcommand("profile", "Per-channel outlier statistics of calibration samples");
  p->add_option("inputs", profile_in, "Activation .npy files")->required();
  p->add_option("--report,-o", profile_report, "Output JSON (default stdout)");

  // calibrate / quantize / sweep share operands and pipeline flags.
  std::string x_path, w_path, calib_path, output, report_path, bundle_dir;
  PipelineFlags flags;
  auto add_operands = [&](CLI::App* sub) {
    sub->add_option("x", x_path, "Activation .npy")->required();
    sub->add_option("w", w_path, "Weight .npy (in_features x out_features)")->required();
    sub->add_option("--calib", calib_path, "Calibration activation .npy (default: x)");
    add_pipeline_flags(sub, flags);
    add_seed(sub);
  };
  auto* c = app.add_subcommand("calibrate", "Calibrate transforms and write a bundle directory");
  add_operands(c);
  c->add_option("-o,--output", output, "Bundle directory")->required();

  auto* q = app.add_subcommand("quantize", "Calibrate, transform and quantize; write bundle, codes and report");
  add_operands(q);
  q->add_option("-o,--output", output, "Output directory")->required();
  q->add_option("--report", report_path, "Extra copy of the report JSON");
  q->add_option("--bundle", bundle_dir, "Reuse transforms from a saved bundle instead of calibrating");

  auto* sw = app.add_subcommand("sweep", "Ablation over stage masks");
  add_operands(sw);
  sw->add_option("--report,-o", report_path, "Output JSON (default stdout)");

  // verify
  std::size_t trials = 100;
  auto* v = app.add_subcommand("verify", "Seeded invariant suite");
  v->add_option("--trials", trials, "Cases per check")->check(CLI::PositiveNumber);
  add_seed(v);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) {
      synth.seed = resolve_seed(common);
      return cmd_synth(synth, synth_out);
    }
    if (p->parsed()) return cmd_profile(profile_in, profile_report, out);
    if (v->parsed()) return cmd_verify(trials, resolve_seed(common), out);

    const PipelineConfig cfg = make_config(flags, resolve_seed(common));
    const Operands ops = load_operands(x_path, w_path, calib_path);
    if (c->parsed()) return cmd_calibrate(ops, cfg, output, err);
    if (q->parsed()) return cmd_quantize(ops, cfg, bundle_dir, output, report_path, out, err);
    return cmd_sweep(ops, cfg, report_path, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace duquant::cli
