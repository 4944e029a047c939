#pragma once

// Reference implementations used only by tests. They are written for
// clarity over speed and share no code with the library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "duquant/tensor.hpp"

namespace oracle {

using duquant::Matrix;

// Dot-product formulation, j-outer, accumulated in long double.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      long double s = 0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += static_cast<long double>(a(i, l)) * b(l, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

inline double gram_residual(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.rows(); ++j) {
      long double s = 0;
      for (std::size_t l = 0; l < m.cols(); ++l) s += static_cast<long double>(m(i, l)) * m(j, l);
      worst = std::max(worst, static_cast<double>(std::abs(s - (i == j ? 1.0L : 0.0L))));
    }
  return worst;
}

// Gaussian elimination in long double with full pivoting.
inline double determinant(Matrix m) {
  const std::size_t n = m.rows();
  std::vector<long double> a(m.data().begin(), m.data().end());
  long double det = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k, pc = k;
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k; j < n; ++j)
        if (std::abs(a[i * n + j]) > std::abs(a[pr * n + pc])) pr = i, pc = j;
    if (a[pr * n + pc] == 0) return 0.0;
    if (pr != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[pr * n + j], a[k * n + j]);
      det = -det;
    }
    if (pc != k) {
      for (std::size_t i = 0; i < n; ++i) std::swap(a[i * n + pc], a[i * n + k]);
      det = -det;
    }
    det *= a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const long double f = a[i * n + k] / a[k * n + k];
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  return static_cast<double>(det);
}

// Nearest integer to t by scanning candidates; exact halves go to the even one.
inline double round_half_even_scan(double t) {
  const double base = std::floor(t) - 2.0;
  double best = base;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 4; ++k) {
    const double c = base + k;
    const double d = std::abs(t - c);
    const bool even = std::fmod(std::abs(c), 2.0) == 0.0;
    if (d < best_dist || (d == best_dist && even)) {
      best = c;
      best_dist = d;
    }
  }
  return best;
}

struct GroupResult {
  double delta = 0.0;
  std::vector<int> codes;
  std::vector<double> values;
};

// Uniform asymmetric quantization of one group, evaluated literally:
// hi = gamma * max, lo = beta * min, delta = (hi - lo) / (2^b - 1),
// z = -round(lo / delta), code = clamp(round(v / delta) + z, 0, 2^b - 1),
// value = (code - z) * delta. Constant groups keep their value; a range that
// collapses under clipping reconstructs to its midpoint.
inline GroupResult quantize_group(const std::vector<double>& v, int bits, double gamma, double beta) {
  GroupResult r;
  const int qmax = (1 << bits) - 1;
  double mx = v[0], mn = v[0];
  for (double x : v) mx = std::max(mx, x), mn = std::min(mn, x);
  if (mx == mn) {
    r.codes.assign(v.size(), 0);
    r.values.assign(v.size(), mx);
    return r;
  }
  const double hi = gamma * mx, lo = beta * mn;
  if (!(hi > lo)) {
    r.codes.assign(v.size(), 0);
    r.values.assign(v.size(), 0.5 * (hi + lo));
    return r;
  }
  r.delta = (hi - lo) / qmax;
  const double z = -round_half_even_scan(lo / r.delta);
  for (double x : v) {
    int best_code = 0;
    const double target = round_half_even_scan(x / r.delta) + z;
    // Clamp by scanning the admissible code range for the closest code to target.
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c <= qmax; ++c) {
      const double d = std::abs(target - c);
      if (d < best_dist) best_dist = d, best_code = c;
    }
    r.codes.push_back(best_code);
    r.values.push_back((best_code - z) * r.delta);
  }
  return r;
}

inline GroupResult quantize_group(const std::vector<double>& v, int bits, double clip) {
  return quantize_group(v, bits, clip, clip);
}

inline Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = nd(gen);
  return m;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("duquant_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
