#pragma once

#include "cocyclelab/cocycle.hpp"

namespace cocyclelab {

struct LyapunovSpectrum {
  std::vector<double> exponents;      // distinct block exponents, decreasing
  std::vector<int> multiplicities;    // sums to d
  int64_t n_iters = 0;
  std::vector<double> drift;          // last-window drift per block
  bool converged = true;              // drift within tolerance (flag, not abort)

  int blocks() const { return static_cast<int>(exponents.size()); }
  double top() const { return exponents.front(); }
  double bottom() const { return exponents.back(); }
  double weighted_sum() const {
    double s = 0;
    for (size_t i = 0; i < exponents.size(); ++i) s += exponents[i] * multiplicities[i];
    return s;
  }
};

struct SpectrumOptions {
  double resolution_factor = 10.0;  // blocks closer than factor/n merge
  double drift_tolerance = 0.02;
};

/// QR-based exponent estimation: accumulate the log-diagonal of the R
/// factors, merge exponents below resolution, report the Cesaro drift over
/// the final 10% window.
LyapunovSpectrum lyapunov_spectrum(const CocycleMap& a, const BaseSystem& sys,
                                   const Point& x, int64_t n_iters,
                                   const SpectrumOptions& opts = {});

struct OseledetsFrame {
  Point x;
  std::vector<Matrix> blocks;      // orthonormal basis of E^i, d x m_i
  std::vector<double> exponents;   // one per block, decreasing
  std::vector<int> multiplicities;
  bool degenerate = false;         // single block: the frame is all of R^d
  double agreement = 1.0;  // smallest principal-angle cosine accepted in the
                           // forward/backward flag intersection
  int dimension() const {
    int d = 0;
    for (const auto& b : blocks) d += static_cast<int>(b.cols());
    return d;
  }
  Matrix assembled() const;  // [B_1 ... B_l]
};

/// E^i as the intersection of the slow-forward flag (right singular subspaces
/// of A^n) with the slow-backward flag (right singular subspaces of A^{-n}),
/// dimensions taken from the spectrum at x.
OseledetsFrame oseledets_splitting(const CocycleMap& a, const BaseSystem& sys,
                                   const Point& x, int64_t n,
                                   const SpectrumOptions& opts = {});

/// The equivariant continuation: blocks at f(x) are A(x) * blocks,
/// re-orthonormalized blockwise.
OseledetsFrame advance_frame(const CocycleMap& a, const BaseSystem& sys,
                             const OseledetsFrame& frame);

struct ZeroExponentReport {
  double max_abs_top = 0;     // max |lambda_1| over samples
  double max_abs_bottom = 0;  // max |lambda_l| over samples
  double threshold = 0;
  bool pass = false;
  std::vector<LyapunovSpectrum> per_sample;
};

/// Necessary-condition screen: top and bottom exponents over sampled points
/// must vanish within 1e-3 * max(1, sup |log||A|| |) before a transfer map
/// construction can make sense.
ZeroExponentReport zero_exponent_check(const CocycleMap& a, const BaseSystem& sys,
                                       int64_t samples, uint64_t seed,
                                       int64_t n_iters);

}  // namespace cocyclelab
