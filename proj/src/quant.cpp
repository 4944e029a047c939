#include "duquant/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "duquant/error.hpp"

namespace duquant {
namespace {

void check_bits(int bits) {
  if (bits < 2 || bits > 8) throw ValueError("bits must be in [2, 8], got " + std::to_string(bits));
}

// Strided view of one quantization group.
struct GroupLayout {
  std::size_t count;   // number of groups
  std::size_t length;  // elements per group
  std::size_t group_stride;
  std::size_t elem_stride;

  static GroupLayout of(std::size_t rows, std::size_t cols, Axis axis) {
    if (axis == Axis::Rows) return {rows, cols, cols, 1};
    return {cols, rows, 1, cols};
  }
  std::size_t index(std::size_t g, std::size_t t) const noexcept {
    return g * group_stride + t * elem_stride;
  }
};

QuantizedTensor quantize_impl(const Matrix& x, int bits, Axis axis, double hi_scale, double lo_scale) {
  check_bits(bits);
  if (!x.all_finite()) throw ValueError("quantize: input contains non-finite values");

  const auto layout = GroupLayout::of(x.rows(), x.cols(), axis);
  const double qmax = static_cast<double>((1 << bits) - 1);
  auto src = x.data();

  QuantizedTensor q;
  q.rows = x.rows();
  q.cols = x.cols();
  q.bits = bits;
  q.axis = axis;
  q.codes.assign(x.size(), 0);
  q.deltas.assign(layout.count, 0.0);
  q.zeros.assign(layout.count, 0);
  q.offsets.assign(layout.count, 0.0);

  for (std::size_t g = 0; g < layout.count; ++g) {
    double mx = -INFINITY, mn = INFINITY;
    for (std::size_t t = 0; t < layout.length; ++t) {
      const double v = src[layout.index(g, t)];
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    if (layout.length == 0) continue;
    if (mx == mn) {
      q.offsets[g] = mx;
      continue;
    }
    const double hi = hi_scale * mx;
    const double lo = lo_scale * mn;
    if (!(hi > lo)) {
      q.offsets[g] = 0.5 * (hi + lo);
      continue;
    }
    const double delta = (hi - lo) / qmax;
    const double zero = -std::nearbyint(lo / delta);
    q.deltas[g] = delta;
    q.zeros[g] = static_cast<std::int64_t>(zero);
    for (std::size_t t = 0; t < layout.length; ++t) {
      const std::size_t idx = layout.index(g, t);
      const double code = std::clamp(std::nearbyint(src[idx] / delta) + zero, 0.0, qmax);
      q.codes[idx] = static_cast<std::uint8_t>(code);
    }
  }
  return q;
}

QuantError measure(const Matrix& x, const Matrix& r) {
  QuantError e;
  auto a = x.data();
  auto b = r.data();
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
    e.max_abs = std::max(e.max_abs, std::abs(d));
  }
  e.mse = a.empty() ? 0.0 : sq / static_cast<double>(a.size());
  e.relative_frobenius = relative_frobenius_error(x, r);
  return e;
}

}  // namespace

void QuantConfig::validate() const {
  check_bits(bits);
  if (!(clip_ratio > 0.0 && clip_ratio <= 1.0)) {
    throw ValueError("clip_ratio must be in (0, 1], got " + std::to_string(clip_ratio));
  }
}

QuantizedTensor quantize(const Matrix& x, const QuantConfig& cfg) {
  cfg.validate();
  return quantize_impl(x, cfg.bits, cfg.axis, cfg.clip_ratio, cfg.clip_ratio);
}

QuantizedTensor quantize(const Matrix& x, int bits, Axis axis, const ClipParams& clip) {
  if (!(clip.gamma >= 0.0 && clip.gamma <= 1.0 && clip.beta >= 0.0 && clip.beta <= 1.0)) {
    throw ValueError("clip parameters must lie in [0, 1]");
  }
  return quantize_impl(x, bits, axis, clip.gamma, clip.beta);
}

Matrix dequantize(const QuantizedTensor& q) {
  Matrix out(q.rows, q.cols);
  const auto layout = GroupLayout::of(q.rows, q.cols, q.axis);
  auto dst = out.data();
  for (std::size_t g = 0; g < layout.count; ++g) {
    const double delta = q.deltas[g];
    if (delta == 0.0) {
      for (std::size_t t = 0; t < layout.length; ++t) dst[layout.index(g, t)] = q.offsets[g];
      continue;
    }
    const double zero = static_cast<double>(q.zeros[g]);
    for (std::size_t t = 0; t < layout.length; ++t) {
      const std::size_t idx = layout.index(g, t);
      dst[idx] = (static_cast<double>(q.codes[idx]) - zero) * delta;
    }
  }
  return out;
}

QuantError quant_error(const Matrix& x, const QuantConfig& cfg) {
  return measure(x, dequantize(quantize(x, cfg)));
}

QuantError quant_error(const Matrix& x, int bits, Axis axis, const ClipParams& clip) {
  return measure(x, dequantize(quantize(x, bits, axis, clip)));
}

ClipParams search_clip(const Matrix& w, int bits, Axis axis, std::size_t grid_steps) {
  if (grid_steps < 2) throw ValueError("search_clip: grid_steps must be >= 2");
  const double denom = static_cast<double>(grid_steps - 1);
  ClipParams best{1.0, 1.0};
  double best_mse = INFINITY;
  // Descending scan with strict improvement keeps the larger gamma, then the
  // larger beta, on ties.
  for (std::size_t gi = grid_steps; gi-- > 0;) {
    const double gamma = static_cast<double>(gi) / denom;
    for (std::size_t bi = grid_steps; bi-- > 0;) {
      const ClipParams cand{gamma, static_cast<double>(bi) / denom};
      const double mse = quant_error(w, bits, axis, cand).mse;
      if (mse < best_mse) {
        best_mse = mse;
        best = cand;
      }
    }
  }
  return best;
}

}  // namespace duquant
