#include "duquant/rotate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "duquant/error.hpp"

namespace duquant {
namespace {

// out += a * M for a row segment `a` (length n) and n x n row-major M.
void accumulate_row_times(const double* a, const Matrix& m, double* out) {
  const std::size_t n = m.rows();
  const double* pm = m.data().data();
  for (std::size_t l = 0; l < n; ++l) {
    const double av = a[l];
    if (av == 0.0) continue;
    const double* mrow = pm + l * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += av * mrow[j];
  }
}

// out[j] = dot(a, M[j, :]), i.e. a * M^T.
void row_times_transpose(const double* a, const Matrix& m, double* out) {
  const std::size_t n = m.rows();
  const double* pm = m.data().data();
  for (std::size_t j = 0; j < n; ++j) {
    const double* mrow = pm + j * n;
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) s += a[l] * mrow[l];
    out[j] = s;
  }
}

void check_block_shape(std::size_t extent, const BlockDiagonalRotation& r, const char* what) {
  if (r.block_size() == 0 || extent != r.dim()) {
    throw ShapeError(std::string(what) + ": extent " + std::to_string(extent) +
                     " != rotation dimension " + std::to_string(r.dim()));
  }
}

}  // namespace

void RotationSpec::validate() const {
  if (block_size < 2 || !is_power_of_two(block_size)) {
    throw ValueError("block_size must be a power of two >= 2, got " + std::to_string(block_size));
  }
  if (steps < 1) throw ValueError("greedy steps must be >= 1");
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

double orthogonality_residual(const Matrix& m) {
  const Matrix g = matmul(m, transpose(m));
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

Matrix BlockDiagonalRotation::to_dense() const {
  const std::size_t b = block_size();
  Matrix d(dim(), dim());
  for (std::size_t k = 0; k < num_blocks; ++k)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) d(k * b + i, k * b + j) = block.m(i, j);
  return d;
}

namespace {

// Householder QR of an n x n standard normal matrix. Q = H_0 ... H_{n-2} D with
// H_k = I - 2 v_k v_k^T acting on indices k.. and D = diag(sign(R_kk)).
struct HaarFactor {
  std::size_t n = 0;
  std::vector<std::vector<double>> vs;
  std::vector<double> diag;
};

HaarFactor haar_factor(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (double& v : a.data()) v = rng.normal();

  HaarFactor f{n, std::vector<std::vector<double>>(n), std::vector<double>(n)};
  std::vector<double> w(n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) norm2 += a(i, k) * a(i, k);
    const double norm = std::sqrt(norm2);
    const double x0 = a(k, k);
    const double alpha = x0 >= 0.0 ? -norm : norm;
    f.diag[k] = alpha;
    auto& v = f.vs[k];
    v.assign(n - k, 0.0);
    for (std::size_t i = k; i < n; ++i) v[i - k] = a(i, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 == 0.0) {
      v.clear();
      continue;
    }
    const double inv = 1.0 / std::sqrt(vnorm2);
    for (double& x : v) x *= inv;

    // A[k:, k:] -= 2 v (v^T A[k:, k:])
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(k), w.end(), 0.0);
    for (std::size_t i = k; i < n; ++i) {
      const double vi = v[i - k];
      const double* arow = a.row(i).data();
      for (std::size_t j = k; j < n; ++j) w[j] += vi * arow[j];
    }
    for (std::size_t i = k; i < n; ++i) {
      const double vi2 = 2.0 * v[i - k];
      double* arow = a.row(i).data();
      for (std::size_t j = k; j < n; ++j) arow[j] -= vi2 * w[j];
    }
  }
  f.diag[n - 1] = a(n - 1, n - 1);
  return f;
}

// m[:, off:off+n] <- m[:, off:off+n] * Q without forming Q. Works on the
// transpose so each reflector is a pair of row sweeps, as in the factorization.
void apply_haar_right(Matrix& m, std::size_t off, const HaarFactor& f) {
  const std::size_t rows = m.rows();
  Matrix t(f.n, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < f.n; ++j) t(j, i) = m(i, off + j);
  std::vector<double> w(rows);
  for (std::size_t k = 0; k + 1 < f.n; ++k) {
    const auto& v = f.vs[k];
    if (v.empty()) continue;
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t l = 0; l < v.size(); ++l) {
      const double vl = v[l];
      const double* trow = t.row(k + l).data();
      for (std::size_t i = 0; i < rows; ++i) w[i] += vl * trow[i];
    }
    for (std::size_t l = 0; l < v.size(); ++l) {
      const double vl2 = 2.0 * v[l];
      double* trow = t.row(k + l).data();
      for (std::size_t i = 0; i < rows; ++i) trow[i] -= vl2 * w[i];
    }
  }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < f.n; ++j) m(i, off + j) = f.diag[j] < 0.0 ? -t(j, i) : t(j, i);
}

}  // namespace

Matrix random_orthogonal(std::size_t dim, Rng& rng) {
  if (dim == 0) throw ValueError("random_orthogonal: dim must be >= 1");
  const HaarFactor f = haar_factor(dim, rng);
  const std::size_t n = dim;
  std::vector<double> w(n);

  // Q = H_0 H_1 ... H_{n-2}, accumulated right to left.
  Matrix q = Matrix::identity(n);
  for (std::size_t k = n - 1; k-- > 0;) {
    const auto& v = f.vs[k];
    if (v.empty()) continue;
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(k), w.end(), 0.0);
    for (std::size_t i = k; i < n; ++i) {
      const double vi = v[i - k];
      const double* qrow = q.row(i).data();
      for (std::size_t j = k; j < n; ++j) w[j] += vi * qrow[j];
    }
    for (std::size_t i = k; i < n; ++i) {
      const double vi2 = 2.0 * v[i - k];
      double* qrow = q.row(i).data();
      for (std::size_t j = k; j < n; ++j) qrow[j] -= vi2 * w[j];
    }
  }

  // Q * diag(sign(R_kk)) makes the factorization unique, hence Haar.
  for (std::size_t i = 0; i < n; ++i) {
    auto r = q.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (f.diag[j] < 0.0) r[j] = -r[j];
  }
  return q;
}

Matrix uniform_first_row_orthogonal(std::size_t dim, Rng& rng) {
  if (dim == 0) throw ValueError("uniform_first_row_orthogonal: dim must be >= 1");
  const std::size_t n = dim;
  const double u = 1.0 / std::sqrt(static_cast<double>(n));
  if (n == 1) return Matrix::identity(1);

  // H = I - 2 v v^T / (v^T v), v = e1 - u * 1; H e1 = u * 1 and H = H^T.
  std::vector<double> v(n, -u);
  v[0] += 1.0;
  double vv = 0.0;
  for (double x : v) vv += x * x;
  Matrix h = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) -= 2.0 * v[i] * v[j] / vv;

  const Matrix tail = random_orthogonal(n - 1, rng);
  Matrix out(n, n);
  for (std::size_t j = 0; j < n; ++j) out(0, j) = u;
  // Rows 1.. = tail * H[1:, :]
  for (std::size_t i = 1; i < n; ++i) {
    double* orow = out.row(i).data();
    for (std::size_t l = 1; l < n; ++l) {
      const double t = tail(i - 1, l - 1);
      const double* hrow = h.row(l).data();
      for (std::size_t j = 0; j < n; ++j) orow[j] += t * hrow[j];
    }
  }
  return out;
}

std::size_t outlier_column(const Matrix& x) {
  const auto cm = col_absmax(x);
  std::size_t best = 0;
  for (std::size_t j = 1; j < cm.size(); ++j)
    if (cm[j] > cm[best]) best = j;
  return best;
}

Matrix build_single_rotation(const Matrix& x_block, const Matrix& base, const Matrix& tail) {
  const std::size_t n = base.rows();
  if (base.cols() != n || x_block.cols() != n) throw ShapeError("build_single_rotation: block dimension mismatch");
  if (tail.rows() + 1 != n || tail.cols() + 1 != n) throw ShapeError("build_single_rotation: tail must be (n-1)x(n-1)");
  const std::size_t d = outlier_column(x_block);

  // base * diag(1, tail): column 0 is kept, columns 1.. mix through tail.
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* brow = base.row(i).data();
    double* rrow = r.row(i).data();
    rrow[0] = brow[0];
    for (std::size_t l = 1; l < n; ++l) {
      const double bv = brow[l];
      if (bv == 0.0) continue;
      const double* trow = tail.row(l - 1).data();
      for (std::size_t j = 1; j < n; ++j) rrow[j] += bv * trow[j - 1];
    }
  }
  r.swap_cols(0, d);
  r.swap_rows(0, d);
  return r;
}

Matrix build_single_rotation(const Matrix& x_block, Rng& rng) {
  const std::size_t n = x_block.cols();
  if (n < 2) throw ShapeError("build_single_rotation: block dimension must be >= 2");
  const Matrix base = uniform_first_row_orthogonal(n, rng);
  const Matrix tail = random_orthogonal(n - 1, rng);
  return build_single_rotation(x_block, base, tail);
}

GreedySearch greedy_rotation_traced(const Matrix& x_block, const RotationSpec& spec) {
  spec.validate();
  const std::size_t n = spec.block_size;
  if (x_block.cols() != n) {
    throw ShapeError("greedy_rotation: block has " + std::to_string(x_block.cols()) +
                     " columns, expected " + std::to_string(n));
  }
  Rng rng(spec.seed);
  // The uniform-first-row base is drawn once per search; each step draws a
  // fresh tail.
  const Matrix base = uniform_first_row_orthogonal(n, rng);

  GreedySearch out;
  out.max_abs_trace.reserve(spec.steps + 1);
  Matrix x = x_block;
  double best = max_abs(x);
  out.rotation.m = Matrix::identity(n);
  out.max_abs_trace.push_back(best);

  // Steps taken since the last improvement; folded into the best prefix
  // product left to right only when a new minimum appears.
  std::vector<Matrix> pending;
  for (std::size_t k = 1; k <= spec.steps; ++k) {
    // Same rotation as build_single_rotation(x, base, random_orthogonal(n - 1, rng)).
    Matrix step = base;
    apply_haar_right(step, 1, haar_factor(n - 1, rng));
    const std::size_t d = outlier_column(x);
    step.swap_cols(0, d);
    step.swap_rows(0, d);
    x = matmul(x, step);
    pending.push_back(std::move(step));
    const double v = max_abs(x);
    out.max_abs_trace.push_back(v);
    if (v < best) {
      best = v;
      for (const Matrix& p : pending) out.rotation.m = matmul(out.rotation.m, p);
      pending.clear();
      out.best_step = k;
    }
  }
  return out;
}

BlockRotation greedy_rotation(const Matrix& x_block, const RotationSpec& spec) {
  return greedy_rotation_traced(x_block, spec).rotation;
}

BlockDiagonalRotation assemble_block_diagonal(const Matrix& x, const RotationSpec& spec) {
  spec.validate();
  const std::size_t b = spec.block_size;
  if (x.cols() == 0 || x.cols() % b != 0) {
    throw ShapeError("assemble_block_diagonal: " + std::to_string(x.cols()) +
                     " channels not divisible by block size " + std::to_string(b));
  }
  BlockDiagonalRotation r;
  r.num_blocks = x.cols() / b;
  r.source_block = outlier_column(x) / b;
  r.block = greedy_rotation(x.columns(r.source_block * b, b), spec);
  return r;
}

Matrix hadamard(std::size_t dim) {
  if (!is_power_of_two(dim)) throw ValueError("hadamard: dim must be a power of two, got " + std::to_string(dim));
  Matrix h(dim, dim);
  h(0, 0) = 1.0;
  for (std::size_t s = 1; s < dim; s *= 2) {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const double v = h(i, j);
        h(i, j + s) = v;
        h(i + s, j) = v;
        h(i + s, j + s) = -v;
      }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : h.data()) v *= scale;
  return h;
}

BlockDiagonalRotation hadamard_block_diagonal(std::size_t dim, std::size_t block_size) {
  if (block_size == 0 || dim % block_size != 0) throw ShapeError("hadamard_block_diagonal: dim not divisible by block size");
  return {BlockRotation{hadamard(block_size)}, dim / block_size, 0};
}

Matrix apply_block_rotation(const Matrix& x, const BlockDiagonalRotation& r, bool transpose) {
  check_block_shape(x.cols(), r, "apply_block_rotation");
  const std::size_t b = r.block_size();
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xrow = x.row(i).data();
    double* orow = out.row(i).data();
    for (std::size_t k = 0; k < r.num_blocks; ++k) {
      if (transpose) {
        row_times_transpose(xrow + k * b, r.block.m, orow + k * b);
      } else {
        accumulate_row_times(xrow + k * b, r.block.m, orow + k * b);
      }
    }
  }
  return out;
}

Matrix apply_block_rotation_left(const Matrix& w, const BlockDiagonalRotation& r, bool transpose) {
  check_block_shape(w.rows(), r, "apply_block_rotation_left");
  const std::size_t b = r.block_size();
  const std::size_t c = w.cols();
  const Matrix& m = r.block.m;
  Matrix out(w.rows(), c);
  for (std::size_t k = 0; k < r.num_blocks; ++k) {
    for (std::size_t j = 0; j < b; ++j) {
      double* orow = out.row(k * b + j).data();
      for (std::size_t l = 0; l < b; ++l) {
        // (R^T w)[j] = sum_l R[l, j] w[l];  (R w)[j] = sum_l R[j, l] w[l]
        const double coef = transpose ? m(l, j) : m(j, l);
        if (coef == 0.0) continue;
        const double* wrow = w.row(k * b + l).data();
        for (std::size_t t = 0; t < c; ++t) orow[t] += coef * wrow[t];
      }
    }
  }
  return out;
}

}  // namespace duquant
