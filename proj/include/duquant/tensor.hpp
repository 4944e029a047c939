#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace duquant {

// Quantization granularity selector. Rows groups each row (per-token for
// activations), Cols groups each column (per-output-channel for weights).
enum class Axis { Rows, Cols };

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws ShapeError when data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Throws ShapeError on ragged input.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // Column range [first, first + count) as a new matrix.
  Matrix columns(std::size_t first, std::size_t count) const;

  void swap_rows(std::size_t a, std::size_t b) noexcept;
  void swap_cols(std::size_t a, std::size_t b) noexcept;

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Max over rows of |a(i, j)| for each column j.
std::vector<double> col_absmax(const Matrix& a);
// Max over columns of |a(i, j)| for each row i.
std::vector<double> row_absmax(const Matrix& a);
double max_abs(const Matrix& a) noexcept;
double frobenius_norm(const Matrix& a) noexcept;

// Determinant by LU with partial pivoting. Throws ShapeError if not square.
double determinant(const Matrix& a);

// ||a - b||_F. Throws ShapeError on mismatch.
double frobenius_distance(const Matrix& a, const Matrix& b);
// ||reference - approx||_F / ||reference||_F; 0 when both are zero.
double relative_frobenius_error(const Matrix& reference, const Matrix& approx);

}  // namespace duquant
