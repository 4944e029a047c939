#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace duquant {

// Injected defects for testing the checks themselves. Not exposed on the
// command line.
enum class VerifyFault { None, SkewRotation, DropWeightSmoothing };

struct VerifyOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  VerifyFault fault = VerifyFault::None;
};

struct CheckResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  // Largest observed violation statistic (residual, excess over bound, ...).
  double worst = 0.0;
  double tolerance = 0.0;

  bool passed() const noexcept { return failures == 0; }
};

// Seeded fuzz over the library invariants: rotation orthogonality and
// determinant, greedy max-abs monotonicity, zigzag block-mean bound,
// transform equivalence, quantizer error bound and code range, permutation
// bijectivity.
std::vector<CheckResult> run_verification(const VerifyOptions& opts);

}  // namespace duquant
