#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "duquant/rng.hpp"
#include "duquant/tensor.hpp"

namespace duquant {

// Channel reordering. order[p] is the original channel placed at position p,
// so as a matrix P(order[p], p) = 1 and X * P gathers columns.
struct Permutation {
  std::vector<std::size_t> order;

  std::size_t size() const noexcept { return order.size(); }
  bool is_bijection() const;
  Permutation inverse() const;
  static Permutation identity(std::size_t n);

  friend bool operator==(const Permutation&, const Permutation&) = default;
};

// Sort channels by magnitude (descending, ties to the smaller index) and deal
// them to blocks in serpentine rounds: left to right on even rounds, right to
// left on odd rounds. The result lists block 0's channels, then block 1's, ...
Permutation zigzag_permutation(std::span<const double> magnitudes, std::size_t block_size);

// Population variance of the per-block means of magnitudes after permuting.
double block_variance(std::span<const double> magnitudes, const Permutation& perm, std::size_t block_size);

// Per-block means of the permuted magnitudes.
std::vector<double> block_means(std::span<const double> magnitudes, const Permutation& perm,
                                std::size_t block_size);

// O(1) + (2^n K - 1)(2^(n-1) - 1) / 2^n * delta, delta = largest adjacent gap.
// Input must be sorted descending (ValueError otherwise) with length 2^n K.
double zigzag_mean_bound(std::span<const double> sorted_desc, std::size_t block_size, std::size_t num_blocks);

// Seeded Fisher-Yates shuffle.
Permutation random_permutation(std::size_t n, Rng& rng);

// Columns: X * P (inverse: X * P^T).
Matrix apply_permutation(const Matrix& x, const Permutation& perm, bool inverse);
// Rows: P^T * W (inverse: P * W). Pairs with apply_permutation so that
// apply_permutation(x, p, false) * permute_rows(w, p, false) == x * w.
Matrix permute_rows(const Matrix& w, const Permutation& perm, bool inverse);

}  // namespace duquant
