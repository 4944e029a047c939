#pragma once

#include <span>
#include <utility>
#include <vector>

#include "duquant/tensor.hpp"

namespace duquant {

// Per-input-channel migration scales. Activations are divided by the scale,
// weights multiplied, so X * W is preserved.
struct SmoothingScale {
  std::vector<double> scales;
  double alpha = 0.5;
};

inline constexpr double kSmoothingEpsilon = 1e-5;
inline constexpr double kDefaultAlpha = 0.6;

// scale_j = max(x_j, eps)^alpha / max(w_j, eps)^(1 - alpha).
SmoothingScale compute_smoothing(std::span<const double> x_absmax, std::span<const double> w_absmax,
                                 double alpha);

// x[:, j] / s_j
Matrix smooth_activation(const Matrix& x, const SmoothingScale& s);
// s_j * w[j, :]
Matrix smooth_weight(const Matrix& w, const SmoothingScale& s);

std::pair<Matrix, Matrix> apply_smoothing(const Matrix& x, const Matrix& w, const SmoothingScale& s);

// Elementwise reciprocal scales; applying s then invert(s) is the identity.
SmoothingScale invert(const SmoothingScale& s);

}  // namespace duquant
