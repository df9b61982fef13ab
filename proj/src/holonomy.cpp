#include "cocyclelab/holonomy.hpp"

#include "cocyclelab/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cocyclelab {

namespace {

// Leaf membership. Torus: the wrapped displacement must align with the
// stable/unstable eigendirection. Shift: agreement on the forward (resp.
// backward) ray, decided exactly through the periodic tails.
bool on_leaf(const BaseSystem& sys, const Point& from, const Point& to,
             LeafDirection dir, double* leaf_dist) {
  double d = sys.distance(from, to);
  if (leaf_dist) *leaf_dist = d;
  if (d == 0.0) return true;
  if (sys.is_torus()) {
    const auto& a = std::get<TorusPoint>(from);
    const auto& b = std::get<TorusPoint>(to);
    Vector delta(2);
    for (int i = 0; i < 2; ++i) delta(i) = wrap_half(b[i] - a[i]);
    Matrix basis(2, 2);
    basis.col(0) = sys.unstable_direction();
    basis.col(1) = sys.stable_direction();
    Vector comps = basis.partialPivLu().solve(delta);
    double off = dir == LeafDirection::kStable ? std::abs(comps(0)) : std::abs(comps(1));
    return off <= 1e-7 * delta.norm() + 1e-12;
  }
  const auto& a = std::get<SymbolSequence>(from);
  const auto& b = std::get<SymbolSequence>(to);
  int64_t bound;
  if (dir == LeafDirection::kStable) {
    int64_t edge = std::max({a.window_hi(), b.window_hi(), int64_t(0)});
    bound = edge + std::lcm(a.right_period_length(), b.right_period_length());
    for (int64_t n = 0; n <= bound; ++n)
      if (a.symbol_at(n) != b.symbol_at(n)) return false;
    return true;
  }
  int64_t edge = std::min({a.window_lo(), b.window_lo(), int64_t(0)});
  bound = -edge + std::lcm(a.left_period_length(), b.left_period_length());
  for (int64_t n = 0; n <= bound; ++n)
    if (a.symbol_at(-n) != b.symbol_at(-n)) return false;
  return true;
}

HolonomyMatrix holonomy_limit(const CocycleMap& a, const BaseSystem& sys,
                              const Point& from, const Point& to,
                              LeafDirection dir, const HolonomySettings& st) {
  double leaf_dist = 0;
  require(on_leaf(sys, from, to, dir, &leaf_dist), ErrorCode::kNotOnLeaf,
          dir == LeafDirection::kStable
              ? "points do not share a local stable leaf"
              : "points do not share a local unstable leaf");
  double tau = sys.leaf_contraction_rate();
  require(2.0 * st.theta < tau, ErrorCode::kInvalidArgument,
          "holonomy needs 2*theta < tau");
  if (st.check_domination) {
    DominationReport dom =
        domination_check(a, sys, from, st.domination_n, st.theta, st.domination_kmax);
    require(dom.pass, ErrorCode::kNotDominated,
            "domination fails at k = " + std::to_string(dom.first_fail_k));
  }

  HolonomyMatrix out;
  out.from = from;
  out.to = to;
  out.direction = dir;
  out.leaf_distance = leaf_dist;
  if (leaf_dist == 0.0) {
    // H_yy = Id exactly
    out.h = Matrix::Identity(a.dimension(), a.dimension());
    out.n_converged = 0;
    return out;
  }

  bool backward = dir == LeafDirection::kUnstable;
  OrbitEvaluator ev_from(a, sys, from, backward);

  // The to-side orbit. On the torus the leaf deviation evolves exactly
  // linearly, so the pair is iterated as (orbit of `from`, closed-form
  // deviation): iterating `to` independently would re-amplify its ~1e-16
  // transverse round-off at rate e^{tau n} and put a floor under the limit.
  struct ToSide {
    const CocycleMap& a;
    const BaseSystem& sys;
    bool torus, backward;
    OrbitEvaluator ev;          // shift path
    Point y_cur;                // torus path: from-side shadow orbit
    Vector leaf_dir;
    double t = 0, rate = 1;
    Matrix current;
    const Matrix& next() {
      if (!torus) return ev.next();
      if (!backward) {
        Vector c = std::get<TorusPoint>(y_cur).coords() + t * leaf_dir;
        current = a.evaluate(TorusPoint(c));
        y_cur = sys.iterate(y_cur, 1);
        t *= rate;
        return current;
      }
      y_cur = sys.iterate(y_cur, -1);
      t *= rate;
      Vector c = std::get<TorusPoint>(y_cur).coords() + t * leaf_dir;
      current = a.evaluate_inverse(TorusPoint(c));
      return current;
    }
  };
  ToSide to_side{a, sys, sys.is_torus(), backward,
                 OrbitEvaluator(a, sys, to, backward), from, Vector(), 0, 1,
                 Matrix()};
  if (sys.is_torus()) {
    const auto& pf = std::get<TorusPoint>(from);
    const auto& pt = std::get<TorusPoint>(to);
    Vector delta(2);
    for (int i = 0; i < 2; ++i) delta(i) = wrap_half(pt[i] - pf[i]);
    to_side.leaf_dir =
        dir == LeafDirection::kStable ? sys.stable_direction() : sys.unstable_direction();
    to_side.t = delta.dot(to_side.leaf_dir) /
                to_side.leaf_dir.squaredNorm();  // signed leaf coordinate
    to_side.rate = dir == LeafDirection::kStable
                       ? sys.stable_eigenvalue()
                       : 1.0 / sys.unstable_eigenvalue();
  }

  ScaledProduct sp_from = ScaledProduct::identity(a.dimension());
  ScaledProduct sp_to = ScaledProduct::identity(a.dimension());
  Matrix h_prev = Matrix::Identity(a.dimension(), a.dimension());
  double rho_margin = std::exp(-(tau - 2.0 * st.theta));
  auto finish = [&](const Matrix& h, int64_t n_conv, double last_diff) {
    out.h = h;
    out.n_converged = n_conv;
    double rho = rho_margin;
    size_t hist = out.residual_history.size();
    for (size_t k = hist >= 4 ? hist - 3 : 1; k < hist; ++k) {
      double prev = out.residual_history[k - 1];
      if (prev > 0 && out.residual_history[k] > 0)
        rho = std::max(rho, std::min(0.999, out.residual_history[k] / prev));
    }
    out.tail_estimate = last_diff * rho / (1.0 - rho);
    return out;
  };
  // On the torus a double-precision leaf point carries an ~1e-16 transverse
  // component that e^{tau n} re-amplifies, so the residuals reach a floor and
  // then climb back up. Stopping is therefore: tol reached three times in a
  // row (one or two small residuals can be a spurious dip where the
  // generator's derivative vanishes along the orbit), or the floor detected
  // after a substantial decay.
  int small_streak = 0;
  Matrix h_best;
  double best_diff = std::numeric_limits<double>::infinity();
  int64_t best_n = 0;
  double first_diff = 0;
  int grow_streak = 0;
  for (int64_t n = 1; n <= st.budget; ++n) {
    sp_from.apply_left(ev_from.next());
    sp_to.apply_left(to_side.next());
    Matrix h = sp_to.left_quotient(sp_from);
    double diff = spectral_norm(Matrix(h - h_prev));
    if (n == 1) first_diff = std::max(diff, 1e-300);
    out.residual_history.push_back(diff);
    if (diff <= st.tol * std::max(1.0, spectral_norm(h))) {
      if (++small_streak >= 3) return finish(h, n - 3, diff);
    } else {
      small_streak = 0;
    }
    if (diff < best_diff) {
      best_diff = diff;
      h_best = h;
      best_n = n - 1;
      grow_streak = 0;
    } else if (diff > 50.0 * best_diff) {
      ++grow_streak;
    }
    if (grow_streak >= 2 && best_diff <= 1e-4 * std::max(1e-30, first_diff)) {
      // a genuine noise floor has comparable residuals around the trough; a
      // spurious one-step dip (generator derivative vanishing along the
      // orbit) has huge neighbors and must not stop the iteration
      size_t bi = static_cast<size_t>(best_n);  // diff index of the trough
      bool plateau = true;
      if (bi >= 1 && out.residual_history[bi - 1] > 100.0 * best_diff)
        plateau = false;
      if (bi + 1 < out.residual_history.size() &&
          out.residual_history[bi + 1] > 100.0 * best_diff)
        plateau = false;
      if (plateau) return finish(h_best, best_n, best_diff);
      grow_streak = 0;  // treat as a dip, keep iterating
      best_diff = std::numeric_limits<double>::infinity();
    }
    h_prev = h;
  }
  std::ostringstream os;
  os << "holonomy not converged within budget " << st.budget << "; last residuals:";
  size_t hist = out.residual_history.size();
  for (size_t k = hist >= 5 ? hist - 5 : 0; k < hist; ++k)
    os << " " << out.residual_history[k];
  fail(ErrorCode::kNotConverged, os.str());
}

}  // namespace

DominationReport domination_check(const CocycleMap& a, const BaseSystem& sys,
                                  const Point& x, int n, double theta, int k_max) {
  require(n >= 1 && k_max >= 1, ErrorCode::kInvalidArgument,
          "domination check needs N >= 1, k_max >= 1");
  DominationReport rep;
  rep.x = x;
  rep.n = n;
  rep.theta = theta;
  rep.k_max = k_max;
  rep.pass = true;
  for (int pass = 0; pass < 2; ++pass) {
    bool backward = pass == 1;
    OrbitEvaluator ev(a, sys, x, backward);
    double acc = 0;
    auto& log_products =
        backward ? rep.log_products_backward : rep.log_products_forward;
    for (int k = 1; k <= k_max; ++k) {
      ScaledProduct block = ScaledProduct::identity(a.dimension());
      for (int i = 0; i < n; ++i) block.apply_left(ev.next());
      acc += block.log_norm() + block.log_norm_inverse();
      log_products.push_back(acc);
      if (acc > theta * static_cast<double>(k) * static_cast<double>(n) + 1e-12) {
        if (rep.pass) rep.first_fail_k = k;
        rep.pass = false;
        // keep filling the report; failure is a state, not an abort
      }
    }
  }
  return rep;
}

HolonomyMatrix stable_holonomy(const CocycleMap& a, const BaseSystem& sys,
                               const Point& from, const Point& to,
                               const HolonomySettings& settings) {
  return holonomy_limit(a, sys, from, to, LeafDirection::kStable, settings);
}

HolonomyMatrix unstable_holonomy(const CocycleMap& a, const BaseSystem& sys,
                                 const Point& from, const Point& to,
                                 const HolonomySettings& settings) {
  return holonomy_limit(a, sys, from, to, LeafDirection::kUnstable, settings);
}

ChainReconstruction chain_transport(const CocycleMap& a, const BaseSystem& sys,
                                    const Point& x, const Point& y,
                                    const Matrix& p_x,
                                    const HolonomySettings& settings) {
  double dxy = sys.distance(x, y);
  require(dxy < sys.bracket_radius() / 2.0, ErrorCode::kPointsTooFar,
          "chain endpoints must be within half the bracket radius");
  ChainReconstruction chain;
  chain.x = x;
  chain.y = y;
  chain.x1 = sys.bracket(y, x);  // W^s_loc(y) cap W^u_loc(x)
  chain.x2 = chain.x1;
  chain.x3 = sys.bracket(chain.x1, chain.x2);

  HolonomySettings inner = settings;
  chain.leg_distances[0] = sys.distance(x, chain.x1);
  chain.leg_distances[1] = sys.distance(chain.x1, chain.x3);
  chain.leg_distances[2] = sys.distance(chain.x3, chain.x2);
  chain.leg_distances[3] = sys.distance(chain.x2, y);
  chain.chain_length = chain.leg_distances[0] + chain.leg_distances[1] +
                       chain.leg_distances[2] + chain.leg_distances[3];
  chain.k_ratio = dxy > 0 ? chain.chain_length / dxy : 0.0;

  HolonomyMatrix h1 = unstable_holonomy(a, sys, x, chain.x1, inner);
  inner.check_domination = false;  // one check per chain is enough
  HolonomyMatrix h2 = stable_holonomy(a, sys, chain.x1, chain.x3, inner);
  HolonomyMatrix h3 = unstable_holonomy(a, sys, chain.x3, chain.x2, inner);
  HolonomyMatrix h4 = stable_holonomy(a, sys, chain.x2, y, inner);
  chain.holonomies[0] = h1.h;
  chain.holonomies[1] = h2.h;
  chain.holonomies[2] = h3.h;
  chain.holonomies[3] = h4.h;
  chain.p_reconstructed = h4.h * h3.h * h2.h * h1.h * p_x;
  return chain;
}

ChainReconstruction holonomy_chain(const CocycleMap& a, const BaseSystem& sys,
                                   const TransferTable& table, int64_t ix,
                                   int64_t iy, const HolonomySettings& settings) {
  require(ix >= 0 && iy >= 0 &&
              ix < static_cast<int64_t>(table.entries.size()) &&
              iy < static_cast<int64_t>(table.entries.size()),
          ErrorCode::kInvalidArgument, "table indices out of range");
  const TransferEntry& ex = table.entries[static_cast<size_t>(ix)];
  const TransferEntry& ey = table.entries[static_cast<size_t>(iy)];
  require(ex.in_g && ey.in_g, ErrorCode::kInvalidArgument,
          "chain endpoints must be admitted to the block");
  ChainReconstruction chain =
      chain_transport(a, sys, ex.point, ey.point, ex.p.to_matrix(), settings);
  chain.residual =
      spectral_norm(Matrix(chain.p_reconstructed - ey.p.to_matrix()));
  return chain;
}

std::vector<char> admitted_block_mask(const CocycleMap& a, const BaseSystem& sys,
                                      const TransferTable& table,
                                      const HolonomySettings& settings,
                                      int threads) {
  std::vector<char> mask(table.entries.size(), 0);
  parallel_for(static_cast<int64_t>(table.entries.size()), threads,
               [&](int64_t lo, int64_t hi) {
                 for (int64_t i = lo; i < hi; ++i) {
                   const TransferEntry& e = table.entries[static_cast<size_t>(i)];
                   if (!e.in_g) continue;
                   DominationReport dom =
                       domination_check(a, sys, e.point, settings.domination_n,
                                        settings.theta, settings.domination_kmax);
                   mask[static_cast<size_t>(i)] = dom.pass ? 1 : 0;
                 }
               });
  return mask;
}

std::vector<std::pair<int64_t, int64_t>> sample_admitted_pairs(
    const BaseSystem& sys, const TransferTable& table,
    const std::vector<char>& admitted, double max_distance, int64_t count) {
  require(admitted.size() == table.entries.size(), ErrorCode::kInvalidArgument,
          "mask size mismatch");
  NeighborIndex index(sys, max_distance);
  for (size_t i = 0; i < table.entries.size(); ++i)
    if (admitted[i]) index.insert(static_cast<int64_t>(i), table.entries[i].point);
  index.finalize();
  int64_t accepted = 0;
  index.for_each_pair([&](int64_t i, int64_t j) {
    if (sys.distance(table.entries[static_cast<size_t>(i)].point,
                     table.entries[static_cast<size_t>(j)].point) < max_distance)
      ++accepted;
  });
  std::vector<std::pair<int64_t, int64_t>> out;
  if (accepted == 0) return out;
  int64_t stride = std::max<int64_t>(1, accepted / std::max<int64_t>(count, 1));
  int64_t seen = 0;
  index.for_each_pair([&](int64_t i, int64_t j) {
    if (static_cast<int64_t>(out.size()) >= count) return;
    if (sys.distance(table.entries[static_cast<size_t>(i)].point,
                     table.entries[static_cast<size_t>(j)].point) >= max_distance)
      return;
    if ((seen++ % stride) == 0) out.emplace_back(i, j);
  });
  return out;
}

HolderEstimate holder_estimate(const BaseSystem& sys, const TransferTable& table,
                               const std::vector<char>& admitted,
                               int64_t pair_budget, const HolderOptions& opts) {
  require(admitted.size() == table.entries.size(), ErrorCode::kInvalidArgument,
          "mask size mismatch");
  require(pair_budget >= 1, ErrorCode::kInvalidArgument, "pair budget too small");
  int64_t admitted_count = 0;
  NeighborIndex index(sys, opts.max_distance);
  for (size_t i = 0; i < table.entries.size(); ++i) {
    if (!admitted[i]) continue;
    ++admitted_count;
    index.insert(static_cast<int64_t>(i), table.entries[i].point);
  }
  index.finalize();
  require(admitted_count >= opts.min_pairs, ErrorCode::kInsufficientPairs,
          "too few admitted entries: " + std::to_string(admitted_count));

  int64_t accepted = 0;
  index.for_each_pair([&](int64_t i, int64_t j) {
    if (sys.distance(table.entries[static_cast<size_t>(i)].point,
                     table.entries[static_cast<size_t>(j)].point) <
        opts.max_distance)
      ++accepted;
  });
  HolderEstimate est;
  est.pairs_seen = accepted;
  if (accepted < opts.min_pairs)
    fail(ErrorCode::kInsufficientPairs,
         "only " + std::to_string(accepted) + " admitted pairs below d = " +
             std::to_string(opts.max_distance));
  int64_t stride = (accepted + pair_budget - 1) / pair_budget;

  std::vector<double> xs, ys;
  int64_t seen = 0;
  index.for_each_pair([&](int64_t i, int64_t j) {
    const TransferEntry& ei = table.entries[static_cast<size_t>(i)];
    const TransferEntry& ej = table.entries[static_cast<size_t>(j)];
    double d = sys.distance(ei.point, ej.point);
    if (d >= opts.max_distance) return;
    if ((seen++ % stride) != 0) return;
    Matrix pi = ei.p.to_matrix(), pj = ej.p.to_matrix();
    double pdiff = spectral_norm(Matrix(pj - pi));
    double scale = std::max({spectral_norm(pi), spectral_norm(pj), 1.0});
    double floor = static_cast<double>(opts.noise_scale) * 1e-13 * scale;
    if (pdiff < floor || d <= 0) {
      ++est.dropped_noise;
      return;
    }
    xs.push_back(std::log(d));
    ys.push_back(std::log(pdiff));
    if (opts.collect_pairs) est.pairs.emplace_back(d, pdiff);
    double envelope = pdiff / std::pow(d, opts.alpha);
    int decade = static_cast<int>(std::floor(std::log10(d)));
    auto it = est.decade_envelopes.find(decade);
    if (it == est.decade_envelopes.end())
      est.decade_envelopes[decade] = envelope;
    else
      it->second = std::max(it->second, envelope);
  });
  est.pairs_used = static_cast<int64_t>(xs.size());
  if (est.pairs_used < opts.min_pairs) {
    if (est.dropped_noise > est.pairs_used) {
      est.degenerate = true;  // P constant at working precision
      return est;
    }
    fail(ErrorCode::kInsufficientPairs,
         "only " + std::to_string(est.pairs_used) + " usable pairs after filters");
  }
  LineFit fit = fit_line(xs, ys);
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  return est;
}

}  // namespace cocyclelab
