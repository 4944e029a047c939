#include "duquant/pipeline.hpp"

#include <string>

#include "duquant/error.hpp"

namespace duquant {
namespace {

enum SeedStream : std::uint64_t { kStreamR1 = 1, kStreamR2 = 2, kStreamPerm = 3 };

BlockDiagonalRotation build_rotation(const Matrix& x, const PipelineConfig& cfg, std::uint64_t stream) {
  if (cfg.rotation_kind == RotationKind::Hadamard) {
    return hadamard_block_diagonal(x.cols(), cfg.rotation.block_size);
  }
  RotationSpec spec = cfg.rotation;
  spec.seed = mix_seed(cfg.rotation.seed, stream);
  return assemble_block_diagonal(x, spec);
}

double profile_variance(const Matrix& x, const Permutation& perm, std::size_t block_size) {
  if (block_size == 0 || x.cols() % block_size != 0) return 0.0;
  return block_variance(col_absmax(x), perm, block_size);
}

}  // namespace

std::string StageFlags::mask_name() const {
  if (smooth && r1 && perm && r2) return "full";
  std::string name;
  auto add = [&](bool on, const char* tag) {
    if (!on) return;
    if (!name.empty()) name += "+";
    name += tag;
  };
  add(smooth, "S");
  add(r1, "R1");
  add(perm, "P");
  add(r2, "R2");
  return name.empty() ? "none" : name;
}

std::vector<std::string> PipelineConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValueError("alpha must be in [0, 1]");
  rotation.validate();
  act_quant.validate();
  weight_quant.validate();
  if (weight_clip_grid == 1) throw ValueError("weight clip grid needs at least 2 steps");
  std::vector<std::string> warnings;
  if (stages.perm && !stages.r2) {
    warnings.emplace_back("permutation without a second rotation leaves per-block outliers unspread");
  }
  return warnings;
}

void TransformBundle::check_consistent() const {
  if (smoothing && smoothing->scales.size() != dim) throw ShapeError("bundle: smoothing length != dim");
  if (r1 && r1->dim() != dim) throw ShapeError("bundle: r1 dimension != dim");
  if (perm && (perm->size() != dim || !perm->is_bijection())) throw ShapeError("bundle: invalid permutation");
  if (r2 && r2->dim() != dim) throw ShapeError("bundle: r2 dimension != dim");
}

TransformBundle calibrate(const Matrix& x_calib, const Matrix& w, const PipelineConfig& cfg) {
  cfg.validate();
  if (x_calib.cols() != w.rows()) {
    throw ShapeError("calibrate: activation has " + std::to_string(x_calib.cols()) +
                     " channels, weight has " + std::to_string(w.rows()) + " rows");
  }
  const std::size_t bs = cfg.rotation.block_size;
  if (x_calib.cols() == 0 || x_calib.cols() % bs != 0) {
    throw ShapeError("calibrate: " + std::to_string(x_calib.cols()) + " channels not divisible by block size " +
                     std::to_string(bs));
  }
  TransformBundle b;
  b.block_size = bs;
  b.dim = x_calib.cols();

  Matrix x = x_calib;
  if (cfg.stages.smooth) {
    b.smoothing = compute_smoothing(col_absmax(x), row_absmax(w), cfg.alpha);
    x = smooth_activation(x, *b.smoothing);
  }
  if (cfg.stages.r1) {
    b.r1 = build_rotation(x, cfg, kStreamR1);
    x = apply_block_rotation(x, *b.r1, false);
  }
  if (cfg.stages.perm) {
    if (cfg.perm_mode == PermMode::Zigzag) {
      b.perm = zigzag_permutation(col_absmax(x), bs);
    } else {
      Rng rng(mix_seed(cfg.rotation.seed, kStreamPerm));
      b.perm = random_permutation(x.cols(), rng);
    }
    x = apply_permutation(x, *b.perm, false);
  }
  if (cfg.stages.r2) {
    b.r2 = build_rotation(x, cfg, kStreamR2);
  }
  return b;
}

Matrix transform_activation(const Matrix& x, const TransformBundle& b) {
  if (b.empty()) return x;
  if (x.cols() != b.dim) throw ShapeError("transform_activation: column count != bundle dimension");
  Matrix out = x;
  if (b.smoothing) out = smooth_activation(out, *b.smoothing);
  if (b.r1) out = apply_block_rotation(out, *b.r1, false);
  if (b.perm) out = apply_permutation(out, *b.perm, false);
  if (b.r2) out = apply_block_rotation(out, *b.r2, false);
  return out;
}

Matrix transform_weight(const Matrix& w, const TransformBundle& b) {
  if (b.empty()) return w;
  if (w.rows() != b.dim) throw ShapeError("transform_weight: row count != bundle dimension");
  Matrix out = w;
  if (b.smoothing) out = smooth_weight(out, *b.smoothing);
  if (b.r1) out = apply_block_rotation_left(out, *b.r1, true);
  if (b.perm) out = permute_rows(out, *b.perm, false);
  if (b.r2) out = apply_block_rotation_left(out, *b.r2, true);
  return out;
}

QuantizedTensor quantize_weight(const Matrix& wt, const PipelineConfig& cfg) {
  if (cfg.weight_clip_grid == 0) return quantize(wt, cfg.weight_quant);
  const ClipParams clip = search_clip(wt, cfg.weight_quant.bits, cfg.weight_quant.axis, cfg.weight_clip_grid);
  return quantize(wt, cfg.weight_quant.bits, cfg.weight_quant.axis, clip);
}

ForwardResult quantized_forward(const Matrix& x, const Matrix& w, const TransformBundle& b,
                                const PipelineConfig& cfg) {
  cfg.validate();
  if (x.cols() != w.rows()) throw ShapeError("quantized_forward: x.cols != w.rows");
  if (!b.empty() && x.cols() != b.dim) throw ShapeError("quantized_forward: operands do not match bundle dimension");

  ErrorReport rep;
  const Matrix reference = matmul(x, w);
  rep.fp_reference_norm = frobenius_norm(reference);
  rep.act_max_abs_before = max_abs(x);
  rep.weight_max_abs_before = max_abs(w);

  Matrix xt = x, wt = w;
  rep.stages.push_back({"input", max_abs(xt), max_abs(wt)});
  if (b.smoothing) {
    xt = smooth_activation(xt, *b.smoothing);
    wt = smooth_weight(wt, *b.smoothing);
    rep.stages.push_back({"smooth", max_abs(xt), max_abs(wt)});
  }
  if (b.r1) {
    xt = apply_block_rotation(xt, *b.r1, false);
    wt = apply_block_rotation_left(wt, *b.r1, true);
    rep.stages.push_back({"rotate1", max_abs(xt), max_abs(wt)});
  }
  const Permutation ident = Permutation::identity(xt.cols());
  const std::size_t bs = b.block_size != 0 ? b.block_size : cfg.rotation.block_size;
  rep.block_variance_before = profile_variance(xt, ident, bs);
  rep.block_variance_after = b.perm ? profile_variance(xt, *b.perm, bs) : rep.block_variance_before;
  if (b.perm) {
    xt = apply_permutation(xt, *b.perm, false);
    wt = permute_rows(wt, *b.perm, false);
    rep.stages.push_back({"permute", max_abs(xt), max_abs(wt)});
  }
  if (b.r2) {
    xt = apply_block_rotation(xt, *b.r2, false);
    wt = apply_block_rotation_left(wt, *b.r2, true);
    rep.stages.push_back({"rotate2", max_abs(xt), max_abs(wt)});
  }
  rep.act_max_abs_after = max_abs(xt);
  rep.weight_max_abs_after = max_abs(wt);

  const Matrix xq = dequantize(quantize(xt, cfg.act_quant));
  const Matrix wq = dequantize(quantize_weight(wt, cfg));
  rep.act_quant_relative_error = relative_frobenius_error(xt, xq);
  rep.weight_quant_relative_error = relative_frobenius_error(wt, wq);

  ForwardResult out;
  out.y = matmul(xq, wq);
  rep.quant_relative_error = relative_frobenius_error(reference, out.y);
  out.report = std::move(rep);
  return out;
}

const std::vector<StageFlags>& ablation_masks() {
  static const std::vector<StageFlags> masks = {
      {true, false, false, false},
      {false, true, false, false},
      {true, true, false, false},
      {false, true, true, true},
      {true, true, true, true},
  };
  return masks;
}

std::vector<AblationEntry> ablation_sweep(const Matrix& x, const Matrix& w, const PipelineConfig& base) {
  std::vector<AblationEntry> out;
  for (const auto& mask : ablation_masks()) {
    PipelineConfig cfg = base;
    cfg.stages = mask;
    const TransformBundle b = calibrate(x, w, cfg);
    out.push_back({mask.mask_name(), mask, quantized_forward(x, w, b, cfg).report});
  }
  return out;
}

}  // namespace duquant
