#include "duquant/permute.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "duquant/error.hpp"

namespace duquant {
namespace {

void check_divisible(std::size_t n, std::size_t block_size, const char* what) {
  if (block_size == 0 || n % block_size != 0) {
    throw ShapeError(std::string(what) + ": length " + std::to_string(n) +
                     " not divisible by block size " + std::to_string(block_size));
  }
}

}  // namespace

bool Permutation::is_bijection() const {
  std::vector<bool> seen(order.size(), false);
  for (auto v : order) {
    if (v >= order.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  inv.order.resize(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) inv.order[order[p]] = p;
  return inv;
}

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  return p;
}

Permutation zigzag_permutation(std::span<const double> magnitudes, std::size_t block_size) {
  const std::size_t n = magnitudes.size();
  check_divisible(n, block_size, "zigzag_permutation");
  for (double v : magnitudes)
    if (!(v >= 0.0)) throw ValueError("zigzag_permutation: magnitudes must be non-negative");

  std::vector<std::size_t> sorted(n);
  std::iota(sorted.begin(), sorted.end(), std::size_t{0});
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](std::size_t a, std::size_t b) { return magnitudes[a] > magnitudes[b]; });

  const std::size_t k = n / block_size;
  std::vector<std::vector<std::size_t>> blocks(k);
  for (auto& b : blocks) b.reserve(block_size);
  for (std::size_t round = 0; round < block_size; ++round) {
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t target = round % 2 == 0 ? t : k - 1 - t;
      blocks[target].push_back(sorted[round * k + t]);
    }
  }
  Permutation p;
  p.order.reserve(n);
  for (const auto& b : blocks) p.order.insert(p.order.end(), b.begin(), b.end());
  return p;
}

std::vector<double> block_means(std::span<const double> magnitudes, const Permutation& perm,
                                std::size_t block_size) {
  if (perm.size() != magnitudes.size()) throw ShapeError("block_means: permutation length mismatch");
  check_divisible(magnitudes.size(), block_size, "block_means");
  const std::size_t k = magnitudes.size() / block_size;
  std::vector<double> means(k, 0.0);
  for (std::size_t b = 0; b < k; ++b) {
    double s = 0.0;
    for (std::size_t t = 0; t < block_size; ++t) s += magnitudes[perm.order[b * block_size + t]];
    means[b] = s / static_cast<double>(block_size);
  }
  return means;
}

double block_variance(std::span<const double> magnitudes, const Permutation& perm, std::size_t block_size) {
  const auto means = block_means(magnitudes, perm, block_size);
  const double k = static_cast<double>(means.size());
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / k;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return var / k;
}

double zigzag_mean_bound(std::span<const double> sorted_desc, std::size_t block_size, std::size_t num_blocks) {
  if (block_size < 2 || (block_size & (block_size - 1)) != 0) {
    throw ValueError("zigzag_mean_bound: block size must be a power of two >= 2");
  }
  if (sorted_desc.size() != block_size * num_blocks || sorted_desc.empty()) {
    throw ShapeError("zigzag_mean_bound: length must equal block_size * num_blocks");
  }
  double delta = 0.0;
  for (std::size_t i = 0; i + 1 < sorted_desc.size(); ++i) {
    if (sorted_desc[i + 1] > sorted_desc[i]) throw ValueError("zigzag_mean_bound: input not sorted descending");
    delta = std::max(delta, sorted_desc[i] - sorted_desc[i + 1]);
  }
  const double b = static_cast<double>(block_size);
  const double factor = (b * static_cast<double>(num_blocks) - 1.0) * (b / 2.0 - 1.0) / b;
  return sorted_desc[0] + factor * delta;
}

Permutation random_permutation(std::size_t n, Rng& rng) {
  if (n == 0) throw ValueError("random_permutation: length must be >= 1");
  Permutation p = Permutation::identity(n);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(p.order[i], p.order[j]);
  }
  return p;
}

Matrix apply_permutation(const Matrix& x, const Permutation& perm, bool inverse) {
  if (x.cols() != perm.size()) throw ShapeError("apply_permutation: column count != permutation length");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t p = 0; p < perm.size(); ++p) {
      if (inverse) {
        dst[perm.order[p]] = src[p];
      } else {
        dst[p] = src[perm.order[p]];
      }
    }
  }
  return out;
}

Matrix permute_rows(const Matrix& w, const Permutation& perm, bool inverse) {
  if (w.rows() != perm.size()) throw ShapeError("permute_rows: row count != permutation length");
  Matrix out(w.rows(), w.cols());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    const std::size_t from = inverse ? p : perm.order[p];
    const std::size_t to = inverse ? perm.order[p] : p;
    std::copy(w.row(from).begin(), w.row(from).end(), out.row(to).begin());
  }
  return out;
}

}  // namespace duquant
