#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "duquant/tensor.hpp"

// NPY v1.0 reader/writer. Matrices are always little-endian float64 in C
// order; anything else is rejected with a FormatError naming the field.
namespace duquant::npy {

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

// 1-D '<f8' arrays (smoothing scales, step sizes).
std::vector<double> read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, std::span<const double> v);

// 1-D '<i8' arrays (permutation orders, zero points).
std::vector<std::int64_t> read_index_vector(const std::filesystem::path& path);
void write_index_vector(const std::filesystem::path& path, std::span<const std::int64_t> v);

// 2-D '|u1' arrays (quantization codes).
void write_code_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                       std::span<const std::uint8_t> codes);

}  // namespace duquant::npy
