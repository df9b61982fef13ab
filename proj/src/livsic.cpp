#include "cocyclelab/livsic.hpp"

#include "cocyclelab/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cocyclelab {

namespace {

NeighborIndex index_in_g(const BaseSystem& sys,
                         const std::vector<TransferEntry>& entries, double beta) {
  NeighborIndex index(sys, beta);
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].in_g) index.insert(static_cast<int64_t>(i), entries[i].point);
  index.finalize();
  return index;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1 - frac) + v[hi] * frac;
}

}  // namespace

ObstructionReport obstruction_audit(const CocycleMap& a, const BaseSystem& sys,
                                    int64_t n_max, double tolerance,
                                    int threads) {
  require(n_max >= 1, ErrorCode::kInvalidArgument, "n_max must be >= 1");
  ObstructionReport rep;
  rep.tolerance = tolerance;
  for (int64_t n = 1; n <= n_max; ++n) {
    auto orbits = sys.enumerate_periodic(n);
    rep.counts_per_period.push_back(static_cast<int64_t>(orbits.size()));
    size_t base = rep.rows.size();
    rep.rows.resize(base + orbits.size());
    parallel_for(
        static_cast<int64_t>(orbits.size()), threads,
        [&](int64_t lo, int64_t hi) {
          for (int64_t oi = lo; oi < hi; ++oi) {
            const PeriodicOrbit& orbit = orbits[static_cast<size_t>(oi)];
            ScaledProduct sp = ScaledProduct::identity(a.dimension());
            if (sys.is_torus() && orbit.denominator > 0) {
              // exact modular orbit; A only ever sees true orbit points
              std::vector<int64_t> nums = orbit.numerators;
              for (int64_t i = 0; i < n; ++i) {
                Vector c(2);
                c << static_cast<double>(nums[0]) / static_cast<double>(orbit.denominator),
                    static_cast<double>(nums[1]) / static_cast<double>(orbit.denominator);
                sp.apply_left(a.evaluate(TorusPoint(c)));
                nums = sys.iterate_numerators(nums, orbit.denominator);
              }
            } else {
              const auto& s = std::get<SymbolSequence>(orbit.base_point);
              for (int64_t i = 0; i < n; ++i) sp.apply_left(a.evaluate(s.shifted(i)));
            }
            ObstructionRow row;
            row.period = n;
            row.point = orbit.base_point;
            row.label = sys.is_torus()
                            ? point_to_string(orbit.base_point)
                            : std::get<SymbolSequence>(orbit.base_point).window_string();
            double defect = spectral_norm(
                Matrix(sp.to_matrix() - Matrix::Identity(a.dimension(), a.dimension())));
            row.defect = defect;
            row.product = std::move(sp);
            rep.rows[base + static_cast<size_t>(oi)] = std::move(row);
          }
        });
  }
  rep.audited = static_cast<int64_t>(rep.rows.size());
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const ObstructionRow& x, const ObstructionRow& y) {
                     return x.defect > y.defect;
                   });
  rep.max_defect = rep.rows.empty() ? 0.0 : rep.rows.front().defect;
  rep.pass = rep.max_defect <= tolerance;
  return rep;
}

Point choose_anchor(const BaseSystem& sys, uint64_t seed) {
  return sys.sample_measure(seed, 1)[0];
}

TransferTable build_transfer(const CocycleMap& a, const BaseSystem& sys,
                             const Point& x0, const TransferOptions& opts) {
  require(opts.n_points >= 2, ErrorCode::kInvalidArgument, "table too short");
  ZeroExponentReport screen =
      zero_exponent_check(a, sys, opts.zero_check_samples,
                          opts.seed ^ 0x9e3779b97f4a7c15ULL, opts.spectrum_iters);
  if (!screen.pass && !opts.override_zero_check)
    fail(ErrorCode::kZeroExponentCheckFailed,
         "top/bottom exponents " + std::to_string(screen.max_abs_top) + "/" +
             std::to_string(screen.max_abs_bottom) + " exceed threshold " +
             std::to_string(screen.threshold) +
             "; the construction is doomed (override to proceed)");

  TransferTable table;
  table.anchor = x0;
  table.epsilon = opts.epsilon;
  table.block_bound = opts.block_bound;
  table.truncation = opts.truncation;
  table.anchor_spectrum =
      lyapunov_spectrum(a, sys, x0, opts.spectrum_iters);

  OseledetsFrame frame = oseledets_splitting(a, sys, x0, opts.spectrum_iters);
  table.entries.resize(static_cast<size_t>(opts.n_points));
  ScaledProduct sp = ScaledProduct::identity(a.dimension());
  Point cur = x0;
  double log_t = -std::numeric_limits<double>::infinity();
  double log_t_half = log_t;
  for (int64_t n = 0; n < opts.n_points; ++n) {
    TransferEntry& e = table.entries[static_cast<size_t>(n)];
    e.n = n;
    e.point = cur;
    e.p = sp;
    try {
      LyapunovNormContext ctx =
          lyap_gram(a, sys, cur, opts.epsilon, opts.truncation, &frame);
      e.c_eps = ctx.c_eps;
      e.in_g = ctx.c_eps <= opts.block_bound;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kTailNotCertified) throw;
      e.c_eps = std::numeric_limits<double>::quiet_NaN();
      e.in_g = false;
      ++table.tail_uncertified;
    }
    if (e.in_g) {
      ++table.in_g_count;
      double ln = e.p.log_norm();
      log_t = std::max(log_t, ln);
      if (n < opts.n_points / 2) log_t_half = std::max(log_t_half, ln);
    }
    if (n + 1 < opts.n_points) {
      sp.apply_left(a.evaluate(cur));
      if (!frame.degenerate) frame = advance_frame(a, sys, frame);
      cur = sys.iterate(cur, 1);
    }
  }
  table.bound_t = std::exp(log_t);
  table.bound_t_half = std::exp(log_t_half);
  return table;
}

NearReturnScan near_return_scan(const CocycleMap& a, const BaseSystem& sys,
                                const TransferTable& table,
                                const NearReturnOptions& opts) {
  require(!table.entries.empty(), ErrorCode::kInvalidArgument, "empty table");
  NearReturnScan scan;
  scan.beta = opts.beta;
  NeighborIndex index = index_in_g(sys, table.entries, opts.beta);

  // first pass: count accepted pairs to pick a deterministic stride
  int64_t accepted = 0;
  index.for_each_pair([&](int64_t i, int64_t j) {
    if (sys.distance(table.entries[static_cast<size_t>(i)].point,
                     table.entries[static_cast<size_t>(j)].point) < opts.beta)
      ++accepted;
  });
  scan.candidate_pairs = accepted;
  if (accepted == 0)
    fail(ErrorCode::kNoReturnsFound,
         "no in-G near returns below beta = " + std::to_string(opts.beta) +
             "; enlarge beta or the table");
  int64_t stride = (accepted + opts.max_pairs - 1) / opts.max_pairs;

  double eps = table.epsilon;
  int64_t seen = 0;
  int64_t shadow_budget = 2000;
  index.for_each_pair([&](int64_t i, int64_t j) {
    const TransferEntry& em = table.entries[static_cast<size_t>(i)];
    const TransferEntry& en = table.entries[static_cast<size_t>(j)];
    double h = sys.distance(em.point, en.point);
    if (h >= opts.beta) return;
    if ((seen++ % stride) != 0) return;
    NearReturnStat st;
    st.m = i;
    st.n = j - i;
    st.h = h;
    Matrix rel = en.p.rel_to(em.p);  // A^{j-i}(f^i x0)
    Matrix dm = rel - Matrix::Identity(a.dimension(), a.dimension());
    st.defect = spectral_norm(dm);
    if (std::isfinite(st.defect) && st.defect > 0) {
      st.log_defect = std::log(st.defect);
    } else if (!std::isfinite(st.defect)) {
      st.log_defect = 709.0 + (en.p.log_scale() - em.p.log_scale());
    } else {
      st.log_defect = -std::numeric_limits<double>::infinity();
    }
    Matrix pm = em.p.to_matrix(), pn = en.p.to_matrix();
    st.p_diff = spectral_norm(Matrix(pn - pm));

    if (st.n <= opts.shadow_max_period && shadow_budget > 0) {
      double h_shadow = 2.05 * sys.closing_constant() * h;
      if (h_shadow > 0) {
        try {
          ShadowResult sh = sys.shadow(em.point, st.n, h_shadow);
          st.shadow_checked = true;
          --shadow_budget;
          ScaledProduct along = ScaledProduct::identity(a.dimension());
          OrbitEvaluator ev(a, sys, sh.periodic_point, false);
          int64_t span = std::min<int64_t>(st.n / 2, 50);
          double ratio = 0;
          for (int64_t step = 1; step <= span; ++step) {
            along.apply_left(ev.next());
            ratio = std::max(ratio, std::exp(along.log_norm_inverse() -
                                             2.0 * eps * static_cast<double>(step)));
          }
          st.inverse_growth_ratio = ratio;
          ++scan.shadowed;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::kNotRecurrent &&
              err.code() != ErrorCode::kBudgetExceeded)
            throw;
        }
      }
    }
    scan.stats.push_back(std::move(st));
  });

  // fits
  std::vector<double> xs, ys, ratios;
  double fitted_k = 0, fitted_l = 0;
  double alpha = a.holder_alpha();
  for (const auto& st : scan.stats) {
    if (st.h <= std::max(opts.min_h, 0.0) || st.h <= 0) continue;
    double envelope = st.defect / std::pow(st.h, alpha);
    if (std::isfinite(envelope)) ratios.push_back(envelope);
    if (st.defect > 1e-13 && std::isfinite(st.log_defect)) {
      xs.push_back(std::log(st.h));
      ys.push_back(st.log_defect);
      int decade = static_cast<int>(std::floor(std::log10(st.h)));
      auto it = scan.decade_envelopes.find(decade);
      if (it == scan.decade_envelopes.end())
        scan.decade_envelopes[decade] = envelope;
      else
        it->second = std::max(it->second, envelope);
    }
    if (std::isfinite(st.p_diff))
      fitted_k = std::max(fitted_k, st.p_diff / std::pow(st.h, alpha));
    if (st.shadow_checked) fitted_l = std::max(fitted_l, st.inverse_growth_ratio);
  }
  LineFit fit = fit_line(xs, ys);
  scan.slope = fit.slope;
  scan.intercept = fit.intercept;
  scan.fitted_k = fitted_k;
  scan.fitted_l = fitted_l;
  scan.ctilde = 3.0 * percentile(ratios, 0.95);
  for (auto& st : scan.stats) {
    double envelope = st.defect / std::pow(st.h, alpha);
    st.envelope_flag = std::isfinite(envelope) && envelope > scan.ctilde && scan.ctilde > 0;
    if (st.envelope_flag) ++scan.flagged;
  }
  return scan;
}

ExtensionResult extend_transfer(const CocycleMap& a, const BaseSystem& sys,
                                const TransferTable& table, const Point& q,
                                double beta, int64_t depth) {
  NeighborIndex index = index_in_g(sys, table.entries, beta);
  Point cur = q;
  for (int64_t j = 0; j <= depth; ++j) {
    if (j > 0) cur = sys.iterate(q, -j);
    int64_t best = -1;
    double best_d = beta;
    index.candidates_near(cur, [&](int64_t i) {
      double d = sys.distance(cur, table.entries[static_cast<size_t>(i)].point);
      if (d < best_d) {
        best = i;
        best_d = d;
      }
    });
    if (best >= 0) {
      ExtensionResult out;
      out.neighbor_index = best;
      out.neighbor_distance = best_d;
      out.pushforward = j;
      Matrix p = table.entries[static_cast<size_t>(best)].p.to_matrix();
      if (j > 0) p = cocycle_product(a, sys, cur, j).to_matrix() * p;
      out.p = std::move(p);
      return out;
    }
  }
  fail(ErrorCode::kNoNeighbor,
       "no in-G table point within beta of q or its preimages up to depth " +
           std::to_string(depth));
}

double uniqueness_residual(const TransferTable& table,
                           const GroundTruthTransfer& truth,
                           const BaseSystem& sys) {
  (void)sys;
  require(!table.entries.empty(), ErrorCode::kInvalidArgument, "empty table");
  Matrix c = truth.evaluate_inverse(table.anchor) * table.entries[0].p.to_matrix();
  double worst = 0;
  for (const auto& e : table.entries) {
    Matrix diff = truth.evaluate_inverse(e.point) * e.p.to_matrix() - c;
    worst = std::max(worst, spectral_norm(diff));
  }
  return worst;
}

}  // namespace cocyclelab
