#pragma once

#include "cocyclelab/livsic.hpp"

namespace cocyclelab {

struct DominationReport {
  Point x;
  int n = 5;           // block length N
  double theta = 0.1;
  int k_max = 10;
  std::vector<double> log_products_forward;   // cumulative over k
  std::vector<double> log_products_backward;  // dual condition
  bool pass = false;
  int first_fail_k = 0;  // 0 when passing
};

/// Evaluates prod_{j<k} ||A^N(f^{jN} x)|| ||A^N(f^{jN} x)^{-1}|| <= e^{theta k N}
/// for k <= k_max, and the dual condition with f, A replaced by inverses.
DominationReport domination_check(const CocycleMap& a, const BaseSystem& sys,
                                  const Point& x, int n, double theta, int k_max);

enum class LeafDirection { kStable, kUnstable };

struct HolonomyMatrix {
  Point from, to;
  LeafDirection direction = LeafDirection::kStable;
  Matrix h;  // transports the fiber at `from` to the fiber at `to`
  int64_t n_converged = 0;  // first n at which the iterates stopped moving
  double leaf_distance = 0;
  std::vector<double> residual_history;  // successive-iterate changes
  double tail_estimate = 0;  // certified geometric bound on what was dropped
};

struct HolonomySettings {
  int domination_n = 5;
  double theta = 0.1;
  int domination_kmax = 10;
  double tol = 1e-10;
  int64_t budget = 10000;
  bool check_domination = true;
};

/// H^s_{from,to} = lim A^n(to)^{-1} A^n(from) for `to` on the local stable
/// leaf of `from`. Exact at n = m for depth-m locally constant cocycles.
HolonomyMatrix stable_holonomy(const CocycleMap& a, const BaseSystem& sys,
                               const Point& from, const Point& to,
                               const HolonomySettings& settings);

/// Backward-time mirror: H^u_{from,to} = lim A^{-n}(to)^{-1} A^{-n}(from).
HolonomyMatrix unstable_holonomy(const CocycleMap& a, const BaseSystem& sys,
                                 const Point& from, const Point& to,
                                 const HolonomySettings& settings);

struct ChainReconstruction {
  Point x, y;
  Point x1, x2, x3;  // x1 in W^u_loc(x), x2 in W^s_loc(y), x3 = [x1, x2]
  double leg_distances[4] = {0, 0, 0, 0};
  double chain_length = 0;
  double k_ratio = 0;  // chain_length / d(x,y)
  Matrix holonomies[4];
  Matrix p_reconstructed;  // holonomy transport of P(x) along the chain
  double residual = std::numeric_limits<double>::quiet_NaN();  // vs known P(y)
};

/// Transports a fiber value P(x) to y along the four-leg bracket chain
/// x -> x1 -> x3 -> x2 -> y (unstable/stable/unstable/stable). On these
/// testbeds the deterministic bracket makes the two middle legs degenerate.
ChainReconstruction chain_transport(const CocycleMap& a, const BaseSystem& sys,
                                    const Point& x, const Point& y,
                                    const Matrix& p_x,
                                    const HolonomySettings& settings);

/// Table-level wrapper: uses P from the table at both endpoints and reports
/// the reconstruction residual.
ChainReconstruction holonomy_chain(const CocycleMap& a, const BaseSystem& sys,
                                   const TransferTable& table, int64_t ix,
                                   int64_t iy, const HolonomySettings& settings);

struct HolderEstimate {
  int64_t pairs_used = 0;
  int64_t pairs_seen = 0;
  int64_t dropped_noise = 0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();  // log C_eps
  std::map<int, double> decade_envelopes;  // floor(log10 d) -> max pdiff/d^alpha
  bool degenerate = false;  // all differences at the noise floor: P constant
  std::vector<std::pair<double, double>> pairs;  // (dist, pdiff) when collected
};

struct HolderOptions {
  double max_distance = 0.025;  // pairs farther than this are skipped
  double alpha = 1.0;           // declared exponent for the envelopes
  int64_t min_pairs = 32;
  uint64_t noise_scale = 10;  // multiples of the accumulated round-off floor
  bool collect_pairs = false;
};

/// Log-log regression of ||P(x) - P(y)|| against d(x, y) over admitted table
/// pairs, plus per-decade envelope constants.
HolderEstimate holder_estimate(const BaseSystem& sys, const TransferTable& table,
                               const std::vector<char>& admitted,
                               int64_t pair_budget, const HolderOptions& opts);

/// in_G and dominated: the computable surrogate of the large-measure block on
/// which the transfer map is Hoelder. Returns one flag per table entry.
std::vector<char> admitted_block_mask(const CocycleMap& a, const BaseSystem& sys,
                                      const TransferTable& table,
                                      const HolonomySettings& settings,
                                      int threads = 1);

/// Up to `count` admitted table pairs within max_distance, deterministically
/// strided across all qualifying pairs.
std::vector<std::pair<int64_t, int64_t>> sample_admitted_pairs(
    const BaseSystem& sys, const TransferTable& table,
    const std::vector<char>& admitted, double max_distance, int64_t count);

}  // namespace cocyclelab
