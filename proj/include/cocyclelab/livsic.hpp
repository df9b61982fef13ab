#pragma once

#include "cocyclelab/lyapunov_norm.hpp"

#include <map>

namespace cocyclelab {

struct ObstructionRow {
  int64_t period = 0;
  Point point;
  std::string label;
  ScaledProduct product;  // A^n(p)
  double defect = 0;      // ||A^n(p) - Id|| in operator norm
};

struct ObstructionReport {
  std::vector<ObstructionRow> rows;  // sorted by defect, descending
  std::vector<int64_t> counts_per_period;
  double max_defect = 0;
  int64_t audited = 0;
  double tolerance = 0;
  bool pass = false;
};

/// Audits A^n(p) = Id over every p in Fix(f^n), n <= n_max. Periodic orbits
/// are iterated exactly (modular numerators on the torus, words on the
/// shift); the matrices carry only evaluation round-off.
ObstructionReport obstruction_audit(const CocycleMap& a, const BaseSystem& sys,
                                    int64_t n_max, double tolerance,
                                    int threads = 1);

/// A measure-random anchor: the probabilistic stand-in for the generic point
/// of the construction (full-measure properties hold almost surely).
Point choose_anchor(const BaseSystem& sys, uint64_t seed);

struct TransferEntry {
  int64_t n = 0;
  Point point;         // f^n(x0)
  ScaledProduct p;     // A^n(x0)
  bool in_g = false;   // C_eps <= N at this point
  double c_eps = 0;
};

struct TransferTable {
  Point anchor;
  double epsilon = 0;
  double block_bound = 0;
  int truncation = 200;
  std::vector<TransferEntry> entries;
  LyapunovSpectrum anchor_spectrum;
  int64_t in_g_count = 0;
  int64_t tail_uncertified = 0;  // points demoted because the tail failed to certify
  double bound_t = 0;       // empirical uniform bound: max ||P|| over in_G entries
  double bound_t_half = 0;  // same over the first half
};

struct TransferOptions {
  int64_t n_points = 10000;
  double epsilon = 0.05;
  double block_bound = 20.0;
  int truncation = 200;
  int64_t spectrum_iters = 20000;
  int zero_check_samples = 3;
  uint64_t seed = 1;
  bool override_zero_check = false;
};

/// P(f^n(x0)) = A^n(x0) along the forward orbit, with regular-block flags.
/// Refuses when the zero-exponent screen fails, unless overridden.
TransferTable build_transfer(const CocycleMap& a, const BaseSystem& sys,
                             const Point& x0, const TransferOptions& opts);

struct NearReturnStat {
  int64_t m = 0;  // table index of z = f^m(x0)
  int64_t n = 0;  // return time
  double h = 0;   // observed return distance
  double defect = 0;      // ||A^n(z) - Id||
  double log_defect = 0;  // log of the same, safe for huge products
  double p_diff = 0;      // ||P(f^{m+n} x0) - P(f^m x0)||
  bool shadow_checked = false;
  double inverse_growth_ratio = 0;  // max_i ||A^i(p)^{-1}|| e^{-2 eps i} along the shadow
  bool envelope_flag = false;  // defect exceeded 3x the p95 envelope
};

struct NearReturnScan {
  std::vector<NearReturnStat> stats;
  double beta = 0;
  int64_t candidate_pairs = 0;
  double slope = std::numeric_limits<double>::quiet_NaN();      // log defect vs log h
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double fitted_k = 0;       // max ||P(z)-P(y)|| / h^alpha
  double fitted_l = 0;  // run-level L in ||A^i(p)^{-1}|| <= L e^{2 eps i}
  double ctilde = 0;         // 3 x p95 of defect / h^alpha (per-entry flag level)
  std::map<int, double> decade_envelopes;  // floor(log10 h) -> max defect/h^alpha
  int64_t flagged = 0;
  int64_t shadowed = 0;
};

struct NearReturnOptions {
  double beta = 0.01;
  int64_t max_pairs = 400000;
  int64_t shadow_max_period = 24;
  double min_h = 0;  // pairs closer than this are recorded but excluded from fits
};

/// Scans in-G pairs (m, m+n) with d(f^m x0, f^{m+n} x0) < beta through a
/// spatial index (grid cells on the torus, cylinder buckets on the shift),
/// records defects, fits the K h^alpha law, and checks the inverse-product
/// growth bound along the shadowing periodic orbits where the exact solve is
/// available.
NearReturnScan near_return_scan(const CocycleMap& a, const BaseSystem& sys,
                                const TransferTable& table,
                                const NearReturnOptions& opts);

struct ExtensionResult {
  Matrix p;
  int64_t neighbor_index = -1;
  double neighbor_distance = 0;
  int64_t pushforward = 0;  // j in P(q) = A^j(f^{-j} q) P(f^{-j} q)
};

/// Continuity extension of the table: the nearest in-G entry within beta of
/// f^{-j}(q) supplies P, pushed forward j steps. Smallest workable j wins.
ExtensionResult extend_transfer(const CocycleMap& a, const BaseSystem& sys,
                                const TransferTable& table, const Point& q,
                                double beta, int64_t depth);

/// sup_n || P_true(f^n x0)^{-1} P_table(n) - C || with C fixed from the
/// anchor: measures uniqueness-up-to-constant against the ground truth.
double uniqueness_residual(const TransferTable& table,
                           const GroundTruthTransfer& truth,
                           const BaseSystem& sys);

}  // namespace cocyclelab
