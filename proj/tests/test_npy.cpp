#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "duquant/error.hpp"
#include "duquant/npy.hpp"
#include "oracles.hpp"

using namespace duquant;
namespace fs = std::filesystem;

namespace {

// Writes a v1.0 file with the given header dict and payload bytes, padded the
// way numpy pads (spaces, trailing newline, 64-byte alignment).
void write_raw(const fs::path& p, std::string dict, const std::string& payload = {}) {
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');
  std::ofstream f(p, std::ios::binary);
  f.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(dict.size());
  f.put(static_cast<char>(len & 0xFF));
  f.put(static_cast<char>(len >> 8));
  f << dict << payload;
}

std::string doubles(std::initializer_list<double> v) {
  std::string s(v.size() * 8, '\0');
  std::size_t i = 0;
  for (double d : v) std::memcpy(s.data() + 8 * i++, &d, 8);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

class NpyTest : public ::testing::Test {
 protected:
  fs::path dir = oracle::scratch_dir("npy");
  void TearDown() override { fs::remove_all(dir); }
};

}  // namespace

TEST_F(NpyTest, RoundTripSmallMatrix) {
  const Matrix m{{1.5, 2.5}};
  npy::write_matrix(dir / "m.npy", m);
  EXPECT_EQ(npy::read_matrix(dir / "m.npy"), m);
}

TEST_F(NpyTest, RoundTripPreservesBitsOfRandomMatrix) {
  Matrix m = oracle::gaussian(17, 33, 5);
  m(0, 0) = -0.0;
  m(1, 1) = 5e-324;
  npy::write_matrix(dir / "m.npy", m);
  const Matrix back = npy::read_matrix(dir / "m.npy");
  ASSERT_EQ(back.rows(), 17u);
  EXPECT_EQ(std::memcmp(back.data().data(), m.data().data(), m.size() * 8), 0);
}

TEST_F(NpyTest, HeaderMatchesNumpyLayout) {
  npy::write_matrix(dir / "m.npy", Matrix{{1.5, 2.5}});
  const std::string bytes = slurp(dir / "m.npy");
  const std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2), }";
  ASSERT_EQ(bytes.size(), 128u + 16u);
  EXPECT_EQ(bytes.substr(0, 8), std::string("\x93NUMPY\x01\x00", 8));
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 118u);
  EXPECT_EQ(bytes.substr(10, dict.size()), dict);
  EXPECT_EQ(bytes[127], '\n');
}

TEST_F(NpyTest, ReadsHandWrittenFile) {
  write_raw(dir / "h.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }", doubles({1, 2, 3, 4}));
  EXPECT_EQ(npy::read_matrix(dir / "h.npy"), (Matrix{{1, 2}, {3, 4}}));
}

TEST_F(NpyTest, OneDimensionalShapeIsFormatErrorForMatrix) {
  write_raw(dir / "v.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }", doubles({1, 2, 3}));
  try {
    npy::read_matrix(dir / "v.npy");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.field(), "shape");
  }
  EXPECT_EQ(npy::read_vector(dir / "v.npy"), (std::vector<double>{1, 2, 3}));
}

TEST_F(NpyTest, FortranOrderIsFormatError) {
  write_raw(dir / "f.npy", "{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }", doubles({1, 2, 3, 4}));
  try {
    npy::read_matrix(dir / "f.npy");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.field(), "fortran_order");
  }
}

TEST_F(NpyTest, WrongDtypeIsFormatError) {
  write_raw(dir / "d.npy", "{'descr': '<f4', 'fortran_order': False, 'shape': (1, 2), }", std::string(8, '\0'));
  try {
    npy::read_matrix(dir / "d.npy");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.field(), "descr");
  }
}

TEST_F(NpyTest, BadMagicAndTruncatedPayload) {
  {
    std::ofstream f(dir / "junk.npy", std::ios::binary);
    f << "not a numpy file at all";
  }
  EXPECT_THROW(npy::read_matrix(dir / "junk.npy"), FormatError);
  write_raw(dir / "short.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }", doubles({1, 2}));
  EXPECT_THROW(npy::read_matrix(dir / "short.npy"), FormatError);
}

TEST_F(NpyTest, MissingFileIsIoError) {
  EXPECT_THROW(npy::read_matrix(dir / "absent.npy"), IoError);
}

TEST_F(NpyTest, IndexAndCodeArrays) {
  const std::vector<std::int64_t> idx{3, 0, -2};
  npy::write_index_vector(dir / "i.npy", idx);
  EXPECT_EQ(npy::read_index_vector(dir / "i.npy"), idx);
  EXPECT_THROW(npy::read_vector(dir / "i.npy"), FormatError);

  const std::vector<std::uint8_t> codes{0, 15, 7, 255, 1, 2};
  npy::write_code_matrix(dir / "c.npy", 2, 3, codes);
  const std::string bytes = slurp(dir / "c.npy");
  EXPECT_NE(bytes.find("'descr': '|u1'"), std::string::npos);
  EXPECT_NE(bytes.find("'shape': (2, 3)"), std::string::npos);
  EXPECT_EQ(bytes.substr(bytes.size() - 6), std::string(codes.begin(), codes.end()));
}

TEST_F(NpyTest, EmptyMatrixRoundTrip) {
  npy::write_matrix(dir / "e.npy", Matrix(0, 3));
  const Matrix e = npy::read_matrix(dir / "e.npy");
  EXPECT_EQ(e.rows(), 0u);
  EXPECT_EQ(e.cols(), 3u);
}
