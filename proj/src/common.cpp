#include "cocyclelab/common.hpp"

#include <Eigen/SVD>

#include <functional>
#include <thread>
#include <vector>

namespace cocyclelab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kNotRecurrent: return "NotRecurrent";
    case ErrorCode::kSingularLattice: return "SingularLattice";
    case ErrorCode::kLeafRadiusExceeded: return "LeafRadiusExceeded";
    case ErrorCode::kPointsTooFar: return "PointsTooFar";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kTailNotCertified: return "TailNotCertified";
    case ErrorCode::kZeroExponentCheckFailed: return "ZeroExponentCheckFailed";
    case ErrorCode::kNoReturnsFound: return "NoReturnsFound";
    case ErrorCode::kNoNeighbor: return "NoNeighbor";
    case ErrorCode::kNotOnLeaf: return "NotOnLeaf";
    case ErrorCode::kNotDominated: return "NotDominated";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
    case ErrorCode::kUnsupportedDimension: return "UnsupportedDimension";
  }
  return "UnknownError";
}

double spectral_norm(const Matrix& a) {
  if (a.rows() == 2 && a.cols() == 2) {
    // sigma_max^2 is the larger root of s^2 - |A|_F^2 s + det(A)^2 = 0.
    double f2 = a.squaredNorm();
    double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    double disc = f2 * f2 - 4.0 * det * det;
    if (disc < 0.0) disc = 0.0;
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
  }
  return a.jacobiSvd().singularValues()(0);
}

double condition_number(const Matrix& a) {
  if (a.rows() == 2 && a.cols() == 2) {
    double f2 = a.squaredNorm();
    double det = std::abs(a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0));
    double disc = f2 * f2 - 4.0 * det * det;
    if (disc < 0.0) disc = 0.0;
    double smax2 = 0.5 * (f2 + std::sqrt(disc));
    if (det == 0.0) return std::numeric_limits<double>::infinity();
    // sigma_min = |det| / sigma_max
    return smax2 / det;
  }
  auto sv = a.jacobiSvd().singularValues();
  double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

void parallel_for(int64_t total, int threads,
                  const std::function<void(int64_t, int64_t)>& body) {
  if (total <= 0) return;
  if (threads <= 1 || total < 2 * threads) {
    body(0, total);
    return;
  }
  int n = std::min<int64_t>(threads, total);
  std::vector<std::thread> pool;
  pool.reserve(n);
  int64_t chunk = (total + n - 1) / n;
  for (int t = 0; t < n; ++t) {
    int64_t begin = t * chunk;
    int64_t end = std::min<int64_t>(begin + chunk, total);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit fit;
  if (x.size() != y.size() || x.size() < 2) return fit;
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.count = x.size();
  return fit;
}

}  // namespace cocyclelab
