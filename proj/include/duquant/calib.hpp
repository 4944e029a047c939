#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "duquant/tensor.hpp"

namespace duquant {

// Per-channel max-abs statistics averaged over calibration samples.
struct OutlierProfile {
  std::vector<double> col_absmax;
  std::size_t num_samples = 0;

  // The profile as a 1 x C matrix, for feeding stages that expect an
  // activation matrix when only statistics are available.
  Matrix as_matrix() const;
};

// Mean over samples of each sample's column max-abs. Throws ValueError for
// an empty list and ShapeError when column counts differ.
OutlierProfile aggregate_profile(const std::vector<Matrix>& samples);

struct SynthSpec {
  std::size_t rows = 256;
  std::size_t cols = 1024;
  double base_scale = 1.0;
  // Channels with large magnitude on every token.
  std::vector<std::size_t> normal_channels;
  double normal_magnitude = 20.0;
  // Individual (token, channel) entries set to +-massive_magnitude.
  std::size_t massive_count = 0;
  double massive_magnitude = 1400.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// N(0, base_scale^2) background. Each normal channel carries a fixed sign and
// magnitudes in [0.6, 1] * normal_magnitude on every row, rescaled so its
// column max-abs is exactly normal_magnitude. Massive entries are placed at
// distinct seeded positions and overwrite whatever was there.
Matrix synth_activations(const SynthSpec& spec);

// Same as synth_activations, also returning the massive positions in draw order.
std::pair<Matrix, std::vector<std::pair<std::size_t, std::size_t>>> synth_activations_with_positions(
    const SynthSpec& spec);

inline constexpr double kMassiveAbsoluteThreshold = 100.0;
inline constexpr double kMassiveMedianRatio = 1000.0;
inline constexpr double kNormalMedianRatio = 5.0;

struct OutlierClassification {
  std::vector<std::size_t> normal_channels;
  std::vector<std::pair<std::size_t, std::size_t>> massive_positions;  // (token, channel), row-major order
};

// Massive: |v| > 100 and |v| > 1000 * median(|x|). Normal: channels whose
// max-abs over non-massive entries exceeds 5x the median of that statistic.
OutlierClassification classify_outliers(const Matrix& x);

double median(std::vector<double> values);

}  // namespace duquant
