#include "duquant/smooth.hpp"

#include <algorithm>
#include <cmath>

#include "duquant/error.hpp"

namespace duquant {

SmoothingScale compute_smoothing(std::span<const double> x_absmax, std::span<const double> w_absmax,
                                 double alpha) {
  if (x_absmax.size() != w_absmax.size()) throw ShapeError("compute_smoothing: statistic lengths differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValueError("compute_smoothing: alpha must be in [0, 1]");
  SmoothingScale s;
  s.alpha = alpha;
  s.scales.resize(x_absmax.size());
  for (std::size_t j = 0; j < x_absmax.size(); ++j) {
    if (x_absmax[j] < 0.0 || w_absmax[j] < 0.0) throw ValueError("compute_smoothing: negative statistic");
    const double xm = std::max(x_absmax[j], kSmoothingEpsilon);
    const double wm = std::max(w_absmax[j], kSmoothingEpsilon);
    s.scales[j] = std::pow(xm, alpha) / std::pow(wm, 1.0 - alpha);
  }
  return s;
}

Matrix smooth_activation(const Matrix& x, const SmoothingScale& s) {
  if (x.cols() != s.scales.size()) throw ShapeError("smooth_activation: column count != scale count");
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] /= s.scales[j];
  }
  return out;
}

Matrix smooth_weight(const Matrix& w, const SmoothingScale& s) {
  if (w.rows() != s.scales.size()) throw ShapeError("smooth_weight: row count != scale count");
  Matrix out = w;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (double& v : out.row(i)) v *= s.scales[i];
  }
  return out;
}

std::pair<Matrix, Matrix> apply_smoothing(const Matrix& x, const Matrix& w, const SmoothingScale& s) {
  if (x.cols() != w.rows()) throw ShapeError("apply_smoothing: x.cols != w.rows");
  return {smooth_activation(x, s), smooth_weight(w, s)};
}

SmoothingScale invert(const SmoothingScale& s) {
  SmoothingScale inv = s;
  for (double& v : inv.scales) v = 1.0 / v;
  return inv;
}

}  // namespace duquant
