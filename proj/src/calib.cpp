#include "duquant/calib.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "duquant/error.hpp"
#include "duquant/rng.hpp"

namespace duquant {

Matrix OutlierProfile::as_matrix() const { return Matrix(1, col_absmax.size(), col_absmax); }

OutlierProfile aggregate_profile(const std::vector<Matrix>& samples) {
  if (samples.empty()) throw ValueError("aggregate_profile: no samples");
  const std::size_t c = samples.front().cols();
  OutlierProfile p;
  p.col_absmax.assign(c, 0.0);
  for (const auto& s : samples) {
    if (s.cols() != c) throw ShapeError("aggregate_profile: samples have different column counts");
    const auto m = col_absmax(s);
    for (std::size_t j = 0; j < c; ++j) p.col_absmax[j] += m[j];
  }
  for (double& v : p.col_absmax) v /= static_cast<double>(samples.size());
  p.num_samples = samples.size();
  return p;
}

void SynthSpec::validate() const {
  if (rows == 0 || cols == 0) throw ValueError("synth: rows and cols must be positive");
  if (!(base_scale > 0.0)) throw ValueError("synth: base_scale must be positive");
  for (auto c : normal_channels)
    if (c >= cols) throw ValueError("synth: normal channel " + std::to_string(c) + " out of range");
  if (!normal_channels.empty() && !(normal_magnitude > 0.0)) throw ValueError("synth: normal_magnitude must be positive");
  if (massive_count > 0 && !(massive_magnitude > 0.0)) throw ValueError("synth: massive_magnitude must be positive");
  if (massive_count > rows * cols) throw ValueError("synth: more massive entries than matrix entries");
}

std::pair<Matrix, std::vector<std::pair<std::size_t, std::size_t>>> synth_activations_with_positions(
    const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Matrix x(spec.rows, spec.cols);
  for (double& v : x.data()) v = spec.base_scale * rng.normal();

  for (auto c : spec.normal_channels) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < spec.rows; ++i) {
      const double v = (0.6 + 0.4 * rng.uniform()) * spec.normal_magnitude;
      x(i, c) = sign * v;
      peak = std::max(peak, v);
    }
    const double rescale = spec.normal_magnitude / peak;
    for (std::size_t i = 0; i < spec.rows; ++i) x(i, c) *= rescale;
  }

  std::vector<std::pair<std::size_t, std::size_t>> positions;
  std::set<std::size_t> used;
  while (positions.size() < spec.massive_count) {
    const auto flat = static_cast<std::size_t>(rng.below(spec.rows * spec.cols));
    if (!used.insert(flat).second) continue;
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const std::size_t i = flat / spec.cols, j = flat % spec.cols;
    x(i, j) = sign * spec.massive_magnitude;
    positions.emplace_back(i, j);
  }
  return {std::move(x), std::move(positions)};
}

Matrix synth_activations(const SynthSpec& spec) { return synth_activations_with_positions(spec).first; }

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

OutlierClassification classify_outliers(const Matrix& x) {
  OutlierClassification out;
  std::vector<double> mags(x.size());
  std::transform(x.data().begin(), x.data().end(), mags.begin(), [](double v) { return std::abs(v); });
  const double med = median(mags);

  std::vector<double> clean_max(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double a = std::abs(x(i, j));
      if (a > kMassiveAbsoluteThreshold && a > kMassiveMedianRatio * med) {
        out.massive_positions.emplace_back(i, j);
      } else {
        clean_max[j] = std::max(clean_max[j], a);
      }
    }
  }
  const double col_med = median(clean_max);
  for (std::size_t j = 0; j < x.cols(); ++j)
    if (clean_max[j] > kNormalMedianRatio * col_med) out.normal_channels.push_back(j);
  return out;
}

}  // namespace duquant
