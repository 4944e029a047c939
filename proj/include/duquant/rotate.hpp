#pragma once

#include <cstdint>
#include <vector>

#include "duquant/rng.hpp"
#include "duquant/tensor.hpp"

namespace duquant {

inline constexpr std::size_t kDefaultBlockSize = 128;
inline constexpr std::size_t kDefaultGreedySteps = 256;

struct RotationSpec {
  std::size_t block_size = kDefaultBlockSize;
  std::size_t steps = kDefaultGreedySteps;
  std::uint64_t seed = 0;

  // Throws ValueError unless block_size is a power of two >= 2 and steps >= 1.
  void validate() const;
};

struct BlockRotation {
  Matrix m;

  std::size_t size() const noexcept { return m.rows(); }
};

// BlockDiag(B, ..., B) with a single shared block B repeated num_blocks
// times. source_block records which block of the calibration input B was
// searched on (0 when not searched, e.g. Hadamard).
struct BlockDiagonalRotation {
  BlockRotation block;
  std::size_t num_blocks = 0;
  std::size_t source_block = 0;

  std::size_t block_size() const noexcept { return block.size(); }
  std::size_t dim() const noexcept { return block.size() * num_blocks; }
  // Materialized dim() x dim() matrix; for inspection and tests only.
  Matrix to_dense() const;
};

bool is_power_of_two(std::size_t n) noexcept;

// max_ij |(m m^T - I)_ij|
double orthogonality_residual(const Matrix& m);

// Haar-distributed orthogonal matrix: Householder QR of an i.i.d. standard
// Gaussian matrix with the columns of Q sign-corrected by sign(diag(R)).
Matrix random_orthogonal(std::size_t dim, Rng& rng);

// Orthogonal matrix whose first row is exactly 1/sqrt(dim) everywhere. Built
// as diag(1, V) * H, where H is the Householder reflection taking e1 to the
// uniform unit vector and V is a Haar rotation of the remaining rows.
Matrix uniform_first_row_orthogonal(std::size_t dim, Rng& rng);

// Column holding the largest |x(i, j)|; ties go to the smallest index.
std::size_t outlier_column(const Matrix& x);

// One greedy step E_d * base * diag(1, tail) * E_d where d is the outlier
// column of x_block. E_d swaps index 0 and d.
Matrix build_single_rotation(const Matrix& x_block, const Matrix& base, const Matrix& tail);
// Same, drawing base and tail from rng.
Matrix build_single_rotation(const Matrix& x_block, Rng& rng);

struct GreedySearch {
  BlockRotation rotation;
  // max|X R^1 ... R^k| for k = 0..steps; entry 0 is the unrotated input.
  std::vector<double> max_abs_trace;
  // Index into max_abs_trace of the returned prefix (0 = identity).
  std::size_t best_step = 0;
};

// Greedy outlier-targeting search. Each step re-targets the outlier column of
// the current rotated block and draws a fresh tail rotation; the returned
// prefix product minimizes max-abs over k = 0..steps (earliest on ties), so
// the result never increases max-abs.
GreedySearch greedy_rotation_traced(const Matrix& x_block, const RotationSpec& spec);
BlockRotation greedy_rotation(const Matrix& x_block, const RotationSpec& spec);

// Runs the greedy search on the block holding the global max-abs entry of x
// and shares the result across all cols / block_size blocks.
BlockDiagonalRotation assemble_block_diagonal(const Matrix& x, const RotationSpec& spec);

// Sylvester Hadamard matrix scaled by 1/sqrt(dim). Throws ValueError unless
// dim is a power of two.
Matrix hadamard(std::size_t dim);
BlockDiagonalRotation hadamard_block_diagonal(std::size_t dim, std::size_t block_size);

// x * R (or x * R^T) applied block by block on columns.
Matrix apply_block_rotation(const Matrix& x, const BlockDiagonalRotation& r, bool transpose);
// R * w (or R^T * w) applied block by block on rows.
Matrix apply_block_rotation_left(const Matrix& w, const BlockDiagonalRotation& r, bool transpose);

}  // namespace duquant
