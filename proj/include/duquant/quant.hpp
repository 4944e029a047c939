#pragma once

#include <cstdint>
#include <vector>

#include "duquant/tensor.hpp"

namespace duquant {

struct QuantConfig {
  int bits = 4;
  double clip_ratio = 1.0;
  Axis axis = Axis::Rows;

  // Throws ValueError unless bits in [2, 8] and clip_ratio in (0, 1].
  void validate() const;
};

// Asymmetric range shrink factors: hi = gamma * max, lo = beta * min.
struct ClipParams {
  double gamma = 1.0;
  double beta = 1.0;

  friend bool operator==(const ClipParams&, const ClipParams&) = default;
};

// Integer codes with one (delta, zero) pair per group. Groups are rows for
// Axis::Rows and columns for Axis::Cols.
//
// A group whose quantization range collapses to a point (hi == lo) is stored
// with delta == 0 and dequantizes to `offsets[g]` for every element: the
// constant itself for constant groups, the collapsed endpoint otherwise.
struct QuantizedTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;  // row-major, rows * cols
  std::vector<double> deltas;
  std::vector<std::int64_t> zeros;
  std::vector<double> offsets;
  int bits = 0;
  Axis axis = Axis::Rows;

  std::size_t group_count() const noexcept { return deltas.size(); }
  std::uint8_t code(std::size_t i, std::size_t j) const noexcept { return codes[i * cols + j]; }
};

// X -> clamp(round(X / delta) + z, 0, 2^b - 1) per group, with
// hi = clip * max, lo = clip * min, delta = (hi - lo) / (2^b - 1),
// z = -round(lo / delta). Rounding is half-to-even.
QuantizedTensor quantize(const Matrix& x, const QuantConfig& cfg);
QuantizedTensor quantize(const Matrix& x, int bits, Axis axis, const ClipParams& clip);
Matrix dequantize(const QuantizedTensor& q);

struct QuantError {
  double mse = 0.0;
  double relative_frobenius = 0.0;
  double max_abs = 0.0;
};

QuantError quant_error(const Matrix& x, const QuantConfig& cfg);
QuantError quant_error(const Matrix& x, int bits, Axis axis, const ClipParams& clip);

// Exhaustive search over a uniform grid_steps x grid_steps lattice on
// [0, 1]^2 for the (gamma, beta) pair minimizing total reconstruction MSE.
// Ties go to the larger gamma, then the larger beta.
ClipParams search_clip(const Matrix& w, int bits, Axis axis, std::size_t grid_steps);

}  // namespace duquant
