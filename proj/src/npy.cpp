#include "duquant/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "duquant/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "npy I/O copies raw little-endian payloads");

namespace duquant::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;

struct Header {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
};

// Parser for the python dict literal in the header, e.g.
// {'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }
class DictParser {
 public:
  explicit DictParser(const std::string& text) : s_(text) {}

  Header parse() {
    std::map<std::string, bool> seen;
    Header h;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string("header key");
      expect(':');
      if (key == "descr") {
        h.descr = parse_string("descr");
      } else if (key == "fortran_order") {
        h.fortran_order = parse_bool();
      } else if (key == "shape") {
        h.shape = parse_shape();
      } else {
        throw FormatError(key, "unknown header key");
      }
      seen[key] = true;
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    for (const char* k : {"descr", "fortran_order", "shape"}) {
      if (!seen.count(k)) throw FormatError(k, "missing from header");
    }
    return h;
  }

 private:
  char peek() const {
    if (pos_ >= s_.size()) throw FormatError("header", "unexpected end of header dict");
    return s_[pos_];
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) throw FormatError("header", std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string(const char* field) {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') throw FormatError(field, "expected quoted string");
    const auto end = s_.find(q, pos_ + 1);
    if (end == std::string::npos) throw FormatError(field, "unterminated string");
    std::string out = s_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    return out;
  }

  bool parse_bool() {
    skip_ws();
    if (s_.compare(pos_, 4, "True") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "False") == 0) {
      pos_ += 5;
      return false;
    }
    throw FormatError("fortran_order", "expected True or False");
  }

  std::vector<std::size_t> parse_shape() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) throw FormatError("shape", "expected integer");
      std::size_t v = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        v = v * 10 + static_cast<std::size_t>(s_[pos_] - '0');
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    return dims;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

std::string format_header(const std::string& descr, const std::vector<std::size_t>& shape) {
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  // magic + version + length field, then dict padded with spaces and '\n'.
  const std::size_t prefix = kMagicLen + 2 + 2;
  std::size_t total = prefix + dict.size() + 1;
  const std::size_t padded = (total + kAlign - 1) / kAlign * kAlign;
  dict.append(padded - total, ' ');
  dict.push_back('\n');
  return dict;
}

void write_raw(const std::filesystem::path& path, const std::string& descr,
               const std::vector<std::size_t>& shape, const void* payload, std::size_t bytes) {
  const std::string dict = format_header(descr, shape);
  if (dict.size() > 0xFFFF) throw FormatError("header", "too long for v1.0");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, kMagicLen);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const auto len = static_cast<std::uint16_t>(dict.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xFF), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("write failed: " + path.string());
}

struct RawArray {
  Header header;
  std::vector<char> payload;
};

RawArray read_raw(const std::filesystem::path& path, const std::string& want_descr,
                  std::size_t item_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) throw FormatError("magic", "not an NPY file");
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  if (!in) throw FormatError("version", "truncated");
  if (version[0] != 1 || version[1] != 0) {
    throw FormatError("version", "only NPY 1.0 is supported, got " + std::to_string(version[0]) +
                                     "." + std::to_string(version[1]));
  }
  unsigned char len_bytes[2];
  in.read(reinterpret_cast<char*>(len_bytes), 2);
  if (!in) throw FormatError("header_len", "truncated");
  const std::size_t header_len = len_bytes[0] | (static_cast<std::size_t>(len_bytes[1]) << 8);
  std::string dict(header_len, '\0');
  in.read(dict.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("header", "truncated");

  RawArray raw;
  raw.header = DictParser(dict).parse();
  if (raw.header.descr != want_descr) {
    throw FormatError("descr", "unsupported dtype '" + raw.header.descr + "', expected '" + want_descr + "'");
  }
  if (raw.header.fortran_order) throw FormatError("fortran_order", "only C-order arrays are supported");

  std::size_t count = 1;
  for (auto d : raw.header.shape) count *= d;
  raw.payload.resize(count * item_size);
  in.read(raw.payload.data(), static_cast<std::streamsize>(raw.payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.payload.size()) {
    throw FormatError("data", "payload shorter than shape implies");
  }
  return raw;
}

}  // namespace

Matrix read_matrix(const std::filesystem::path& path) {
  auto raw = read_raw(path, "<f8", sizeof(double));
  if (raw.header.shape.size() != 2) {
    throw FormatError("shape", "expected 2-D array, got " + std::to_string(raw.header.shape.size()) + "-D");
  }
  std::vector<double> data(raw.payload.size() / sizeof(double));
  std::memcpy(data.data(), raw.payload.data(), raw.payload.size());
  return Matrix(raw.header.shape[0], raw.header.shape[1], std::move(data));
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_raw(path, "<f8", {m.rows(), m.cols()}, m.data().data(), m.size() * sizeof(double));
}

std::vector<double> read_vector(const std::filesystem::path& path) {
  auto raw = read_raw(path, "<f8", sizeof(double));
  if (raw.header.shape.size() != 1) throw FormatError("shape", "expected 1-D array");
  std::vector<double> v(raw.payload.size() / sizeof(double));
  std::memcpy(v.data(), raw.payload.data(), raw.payload.size());
  return v;
}

void write_vector(const std::filesystem::path& path, std::span<const double> v) {
  write_raw(path, "<f8", {v.size()}, v.data(), v.size_bytes());
}

std::vector<std::int64_t> read_index_vector(const std::filesystem::path& path) {
  auto raw = read_raw(path, "<i8", sizeof(std::int64_t));
  if (raw.header.shape.size() != 1) throw FormatError("shape", "expected 1-D array");
  std::vector<std::int64_t> v(raw.payload.size() / sizeof(std::int64_t));
  std::memcpy(v.data(), raw.payload.data(), raw.payload.size());
  return v;
}

void write_index_vector(const std::filesystem::path& path, std::span<const std::int64_t> v) {
  write_raw(path, "<i8", {v.size()}, v.data(), v.size_bytes());
}

void write_code_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                       std::span<const std::uint8_t> codes) {
  if (codes.size() != rows * cols) throw ShapeError("code matrix length mismatch");
  write_raw(path, "|u1", {rows, cols}, codes.data(), codes.size());
}

}  // namespace duquant::npy
