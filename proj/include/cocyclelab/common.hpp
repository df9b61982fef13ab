#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocyclelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Failure modes surfaced to callers. The code is stable API, the message is
/// free-form context.
enum class ErrorCode {
  kInvalidArgument,
  kConfigError,
  kBudgetExceeded,
  kNotRecurrent,
  kSingularLattice,
  kLeafRadiusExceeded,
  kPointsTooFar,
  kIllConditioned,
  kTailNotCertified,
  kZeroExponentCheckFailed,
  kNoReturnsFound,
  kNoNeighbor,
  kNotOnLeaf,
  kNotDominated,
  kNotConverged,
  kInsufficientPairs,
  kUnsupportedDimension,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// Reduce into [0,1). Guards against floor() returning the upper endpoint for
/// values a hair below an integer.
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return (r >= 1.0) ? r - 1.0 : (r < 0.0 ? r + 1.0 : r);
}

/// Reduce into [-1/2, 1/2].
inline double wrap_half(double x) { return x - std::nearbyint(x); }

/// Operator (spectral) norm. Closed form for d=2, SVD otherwise.
double spectral_norm(const Matrix& a);

/// sigma_max / sigma_min; +inf when singular to working precision.
double condition_number(const Matrix& a);

/// Deterministic random source. The uniform doubles are derived from raw
/// mt19937_64 output so streams are reproducible independent of the standard
/// library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : eng_(seed) {}

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), unbiased.
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

/// Static-partition parallel map over [0, total). body(begin, end) must write
/// results through index-addressed storage so the output is independent of
/// scheduling. threads <= 1 runs inline.
void parallel_for(int64_t total, int threads,
                  const std::function<void(int64_t, int64_t)>& body);

/// Ordinary least squares fit y = slope * x + intercept.
struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cocyclelab
