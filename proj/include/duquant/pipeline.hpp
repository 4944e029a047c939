#pragma once

#include <optional>
#include <string>
#include <vector>

#include "duquant/permute.hpp"
#include "duquant/quant.hpp"
#include "duquant/rotate.hpp"
#include "duquant/smooth.hpp"
#include "duquant/tensor.hpp"

namespace duquant {

enum class PermMode { Zigzag, Random };
enum class RotationKind { Greedy, Hadamard };

struct StageFlags {
  bool smooth = true;
  bool r1 = true;
  bool perm = true;
  bool r2 = true;

  static StageFlags none() { return {false, false, false, false}; }
  // Short name used as ablation key: "S", "R1", "S+R1", "R1+P+R2", "full", ...
  std::string mask_name() const;

  friend bool operator==(const StageFlags&, const StageFlags&) = default;
};

struct PipelineConfig {
  double alpha = kDefaultAlpha;
  RotationSpec rotation;
  StageFlags stages;
  PermMode perm_mode = PermMode::Zigzag;
  RotationKind rotation_kind = RotationKind::Greedy;
  QuantConfig act_quant{4, 0.9, Axis::Rows};
  QuantConfig weight_quant{4, 0.8, Axis::Cols};
  // > 0 replaces the fixed weight clip ratio with search_clip on this grid.
  std::size_t weight_clip_grid = 0;

  // Throws ValueError on invalid settings; returns non-fatal warnings.
  std::vector<std::string> validate() const;
};

// G = Lambda^-1 R1 P R2 on activations, G^-1 on weights. Absent stages are
// the identity.
struct TransformBundle {
  std::optional<SmoothingScale> smoothing;
  std::optional<BlockDiagonalRotation> r1;
  std::optional<Permutation> perm;
  std::optional<BlockDiagonalRotation> r2;
  std::size_t block_size = 0;
  std::size_t dim = 0;

  bool empty() const noexcept { return !smoothing && !r1 && !perm && !r2; }
  // Throws ShapeError when a present stage disagrees with dim.
  void check_consistent() const;
};

// Calibrates stages in order smoothing -> r1 -> permutation -> r2, each on the
// calibration activation as transformed by the stages before it.
TransformBundle calibrate(const Matrix& x_calib, const Matrix& w, const PipelineConfig& cfg);

Matrix transform_activation(const Matrix& x, const TransformBundle& b);
Matrix transform_weight(const Matrix& w, const TransformBundle& b);

struct StageTrace {
  std::string name;
  double act_max_abs = 0.0;
  double weight_max_abs = 0.0;

  friend bool operator==(const StageTrace&, const StageTrace&) = default;
};

struct ErrorReport {
  double fp_reference_norm = 0.0;
  double quant_relative_error = 0.0;
  double act_quant_relative_error = 0.0;
  double weight_quant_relative_error = 0.0;
  double act_max_abs_before = 0.0;
  double act_max_abs_after = 0.0;
  double weight_max_abs_before = 0.0;
  double weight_max_abs_after = 0.0;
  // Block-mean variance of the activation entering the permutation stage,
  // in identity order and in permuted order.
  double block_variance_before = 0.0;
  double block_variance_after = 0.0;
  std::vector<StageTrace> stages;

  friend bool operator==(const ErrorReport&, const ErrorReport&) = default;
};

// Quantizes an already transformed weight with cfg.weight_quant, or with the
// searched clip when cfg.weight_clip_grid > 0.
QuantizedTensor quantize_weight(const Matrix& wt, const PipelineConfig& cfg);

struct ForwardResult {
  Matrix y;
  ErrorReport report;
};

// Per-token dynamic activation quantization and per-channel weight
// quantization of the transformed operands, then the dequantized product.
ForwardResult quantized_forward(const Matrix& x, const Matrix& w, const TransformBundle& b,
                                const PipelineConfig& cfg);

struct AblationEntry {
  std::string mask;
  StageFlags stages;
  ErrorReport report;
};

// Stage masks evaluated by ablation_sweep, in order.
const std::vector<StageFlags>& ablation_masks();

// Calibrates on x and runs quantized_forward for each mask of ablation_masks().
std::vector<AblationEntry> ablation_sweep(const Matrix& x, const Matrix& w, const PipelineConfig& base);

}  // namespace duquant
