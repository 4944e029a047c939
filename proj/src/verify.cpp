#include "duquant/verify.hpp"

#include <algorithm>
#include <cmath>

#include "duquant/calib.hpp"
#include "duquant/permute.hpp"
#include "duquant/pipeline.hpp"
#include "duquant/quant.hpp"
#include "duquant/rotate.hpp"

namespace duquant {
namespace {

constexpr std::size_t kBlockSizes[] = {4, 8, 16, 32};

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

// Gaussian block, half of the time with one dominant column.
Matrix fuzz_block(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix x = gaussian(rows, cols, rng);
  if (rng.uniform() < 0.5) {
    const auto c = static_cast<std::size_t>(rng.below(cols));
    const double mag = 10.0 + 90.0 * rng.uniform();
    for (std::size_t i = 0; i < rows; ++i) x(i, c) *= mag;
  }
  return x;
}

void record(CheckResult& r, double statistic, bool ok) {
  ++r.cases;
  if (!ok) ++r.failures;
  r.worst = std::max(r.worst, statistic);
}

CheckResult check_orthogonality(const VerifyOptions& o) {
  CheckResult r{"rotation orthogonality", 0, 0, 0.0, 1e-9};
  Rng rng(mix_seed(o.seed, 101));
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::size_t n = kBlockSizes[t % std::size(kBlockSizes)];
    const Matrix x = fuzz_block(8, n, rng);
    Matrix m = greedy_rotation(x, {n, 16, rng.next_u64()}).m;
    if (o.fault == VerifyFault::SkewRotation) m(0, 0) += 1e-3;
    const double res = orthogonality_residual(m);
    const double det_err = std::abs(std::abs(determinant(m)) - 1.0);
    record(r, std::max(res, det_err), res <= 1e-9 && det_err <= 1e-6);
  }
  return r;
}

CheckResult check_max_abs_monotone(const VerifyOptions& o) {
  CheckResult r{"greedy rotation never increases max-abs", 0, 0, 0.0, 1e-9};
  Rng rng(mix_seed(o.seed, 102));
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::size_t n = kBlockSizes[t % std::size(kBlockSizes)];
    const Matrix x = fuzz_block(8, n, rng);
    Matrix m = greedy_rotation(x, {n, 16, rng.next_u64()}).m;
    if (o.fault == VerifyFault::SkewRotation) m(0, 0) += 1e-3;
    const double excess = max_abs(matmul(x, m)) - max_abs(x);
    record(r, std::max(excess, 0.0), excess <= 1e-9);
  }
  return r;
}

CheckResult check_zigzag_bound(const VerifyOptions& o) {
  CheckResult r{"zigzag block means within bound", 0, 0, 0.0, 1e-12};
  Rng rng(mix_seed(o.seed, 103));
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::size_t bs = std::size_t{1} << (1 + rng.below(4));
    const std::size_t k = 1 + rng.below(8);
    std::vector<double> o_j(bs * k);
    for (double& v : o_j) v = std::exp(3.0 * rng.uniform());
    const Permutation p = zigzag_permutation(o_j, bs);
    std::vector<double> sorted = o_j;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double bound = zigzag_mean_bound(sorted, bs, k);
    double excess = -INFINITY;
    for (double m : block_means(o_j, p, bs)) excess = std::max(excess, m - bound);
    record(r, std::max(excess, 0.0), excess <= 1e-12);
  }
  return r;
}

CheckResult check_equivalence(const VerifyOptions& o) {
  CheckResult r{"transform preserves X*W", 0, 0, 0.0, 1e-8};
  Rng rng(mix_seed(o.seed, 104));
  for (std::size_t t = 0; t < o.trials; ++t) {
    const Matrix x = fuzz_block(16, 64, rng);
    const Matrix w = gaussian(64, 32, rng, 0.1);
    PipelineConfig cfg;
    cfg.rotation = {16, 8, rng.next_u64()};
    const auto mask = static_cast<unsigned>(t % 16);
    cfg.stages = {(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0};
    const TransformBundle b = calibrate(x, w, cfg);
    const Matrix xt = transform_activation(x, b);
    Matrix wt = transform_weight(w, b);
    if (o.fault == VerifyFault::DropWeightSmoothing && b.smoothing) {
      wt = transform_weight(w, TransformBundle{std::nullopt, b.r1, b.perm, b.r2, b.block_size, b.dim});
    }
    const double err = relative_frobenius_error(matmul(x, w), matmul(xt, wt));
    record(r, err, err <= 1e-8);
  }
  return r;
}

CheckResult check_quantizer(const VerifyOptions& o) {
  CheckResult r{"quantizer error <= delta/2, codes in range", 0, 0, 0.0, 1e-12};
  Rng rng(mix_seed(o.seed, 105));
  for (std::size_t t = 0; t < o.trials; ++t) {
    const int bits = 2 + static_cast<int>(rng.below(7));
    const Axis axis = rng.uniform() < 0.5 ? Axis::Rows : Axis::Cols;
    const Matrix x = fuzz_block(1 + rng.below(8), 1 + rng.below(8), rng);
    const QuantizedTensor q = quantize(x, {bits, 1.0, axis});
    const Matrix back = dequantize(q);
    const unsigned qmax = (1u << bits) - 1;
    double excess = -INFINITY;
    bool in_range = true;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        const std::size_t g = axis == Axis::Rows ? i : j;
        const double slack = 1e-12 * std::max(1.0, std::abs(x(i, j)));
        excess = std::max(excess, std::abs(x(i, j) - back(i, j)) - 0.5 * q.deltas[g] - slack);
        in_range = in_range && q.code(i, j) <= qmax;
      }
    }
    record(r, std::max(excess, 0.0), excess <= 0.0 && in_range);
  }
  return r;
}

CheckResult check_permutations(const VerifyOptions& o) {
  CheckResult r{"permutations are bijections", 0, 0, 0.0, 0.0};
  Rng rng(mix_seed(o.seed, 106));
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::size_t bs = std::size_t{1} << (1 + rng.below(4));
    const std::size_t n = bs * (1 + rng.below(8));
    std::vector<double> mags(n);
    for (double& v : mags) v = rng.uniform() < 0.2 ? 1.0 : rng.uniform();
    const bool ok = zigzag_permutation(mags, bs).is_bijection() && random_permutation(n, rng).is_bijection();
    record(r, ok ? 0.0 : 1.0, ok);
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
  return {
      check_orthogonality(opts), check_max_abs_monotone(opts), check_zigzag_bound(opts),
      check_equivalence(opts),   check_quantizer(opts),        check_permutations(opts),
  };
}

}  // namespace duquant
