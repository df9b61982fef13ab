#include "cocyclelab/spectrum.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>

namespace cocyclelab {

namespace {

// QR with positive diagonal; returns Q, writes diag(R) logs into logs.
Matrix positive_qr(const Matrix& z, Vector* diag_logs) {
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  int d = static_cast<int>(z.cols());
  if (diag_logs) diag_logs->resize(d);
  for (int i = 0; i < d; ++i) {
    double rii = r(i, i);
    if (rii < 0) {
      q.col(i) = -q.col(i);
      rii = -rii;
    }
    if (diag_logs) (*diag_logs)(i) = std::log(std::max(rii, 1e-300));
  }
  return q;
}

Matrix orthonormal_columns(const Matrix& b) {
  Eigen::HouseholderQR<Matrix> qr(b);
  Matrix q = qr.householderQ();
  return q.leftCols(b.cols());
}

}  // namespace

LyapunovSpectrum lyapunov_spectrum(const CocycleMap& a, const BaseSystem& sys,
                                   const Point& x, int64_t n_iters,
                                   const SpectrumOptions& opts) {
  require(n_iters >= 1000, ErrorCode::kInvalidArgument,
          "lyapunov_spectrum needs n_iters >= 1000");
  int d = a.dimension();
  Matrix q = Matrix::Identity(d, d);
  Vector sums = Vector::Zero(d);
  Vector window = Vector::Zero(d);
  int64_t window_start = n_iters - std::max<int64_t>(1, n_iters / 10);
  Vector logs(d);
  OrbitEvaluator ev(a, sys, x, false);
  for (int64_t i = 0; i < n_iters; ++i) {
    q = positive_qr(ev.next() * q, &logs);
    sums += logs;
    if (i >= window_start) window += logs;
  }
  std::vector<double> rates(static_cast<size_t>(d));
  std::vector<double> wrates(static_cast<size_t>(d));
  int64_t wlen = n_iters - window_start;
  for (int i = 0; i < d; ++i) {
    rates[static_cast<size_t>(i)] = sums(i) / static_cast<double>(n_iters);
    wrates[static_cast<size_t>(i)] = window(i) / static_cast<double>(wlen);
  }
  // order decreasing, keeping each direction's window estimate with it
  std::vector<int> idx(static_cast<size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) {
    return rates[static_cast<size_t>(i)] > rates[static_cast<size_t>(j)];
  });

  LyapunovSpectrum spec;
  spec.n_iters = n_iters;
  double resolution = opts.resolution_factor / static_cast<double>(n_iters);
  double block_sum = 0, block_window = 0;
  int block_count = 0;
  double prev = 0;
  for (int rank = 0; rank < d; ++rank) {
    double lam = rates[static_cast<size_t>(idx[static_cast<size_t>(rank)])];
    double wlam = wrates[static_cast<size_t>(idx[static_cast<size_t>(rank)])];
    if (block_count > 0 && prev - lam > resolution) {
      spec.exponents.push_back(block_sum / block_count);
      spec.multiplicities.push_back(block_count);
      spec.drift.push_back(std::abs(block_window / block_count - block_sum / block_count));
      block_sum = block_window = 0;
      block_count = 0;
    }
    block_sum += lam;
    block_window += wlam;
    ++block_count;
    prev = lam;
  }
  spec.exponents.push_back(block_sum / block_count);
  spec.multiplicities.push_back(block_count);
  spec.drift.push_back(std::abs(block_window / block_count - block_sum / block_count));
  spec.converged = true;
  for (double dr : spec.drift)
    if (dr > opts.drift_tolerance) spec.converged = false;
  return spec;
}

Matrix OseledetsFrame::assembled() const {
  int d = static_cast<int>(blocks.front().rows());
  Matrix b(d, dimension());
  int col = 0;
  for (const auto& blk : blocks) {
    b.middleCols(col, blk.cols()) = blk;
    col += static_cast<int>(blk.cols());
  }
  return b;
}

OseledetsFrame oseledets_splitting(const CocycleMap& a, const BaseSystem& sys,
                                   const Point& x, int64_t n,
                                   const SpectrumOptions& opts) {
  int d = a.dimension();
  LyapunovSpectrum spec =
      lyapunov_spectrum(a, sys, x, std::max<int64_t>(n, 1000), opts);
  OseledetsFrame frame;
  frame.x = x;
  frame.exponents = spec.exponents;
  frame.multiplicities = spec.multiplicities;
  if (spec.blocks() == 1) {
    frame.degenerate = true;
    frame.blocks = {Matrix::Identity(d, d)};
    return frame;
  }

  // Product length capped so the triangular factor stays inside double range
  // despite the exponent spread.
  double spread = spec.top() - spec.bottom();
  int64_t n_svd = std::min<int64_t>(
      std::max<int64_t>(n, 50),
      static_cast<int64_t>(500.0 / std::max(spread, 0.05)));
  ScaledProduct fwd = cocycle_product(a, sys, x, n_svd);
  ScaledProduct bwd = cocycle_product(a, sys, x, -n_svd);

  Eigen::JacobiSVD<Matrix> svd_f(fwd.unit_matrix(), Eigen::ComputeFullV);
  Eigen::JacobiSVD<Matrix> svd_b(bwd.unit_matrix(), Eigen::ComputeFullV);
  const Matrix& vf = svd_f.matrixV();  // columns ordered by decreasing growth
  const Matrix& vb = svd_b.matrixV();

  frame.agreement = 1.0;
  int l = spec.blocks();
  int before = 0;  // dims of blocks 1..i-1
  for (int i = 0; i < l; ++i) {
    int mi = spec.multiplicities[static_cast<size_t>(i)];
    int upto = before + mi;  // D_i
    // slow-forward flag F_i = span of the d - before slowest forward columns
    Matrix f_basis = vf.rightCols(d - before);
    // slow-backward flag G_i = span of the D_i slowest backward columns
    Matrix g_basis = vb.rightCols(upto);
    if (before == 0) {
      // G_1 is exactly E^1
      frame.blocks.push_back(orthonormal_columns(g_basis));
    } else if (upto == d) {
      frame.blocks.push_back(orthonormal_columns(f_basis));
    } else {
      // intersection via principal vectors of the two orthonormal bases
      Matrix c = f_basis.transpose() * g_basis;
      Eigen::JacobiSVD<Matrix> svd_c(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Matrix e = f_basis * svd_c.matrixU().leftCols(mi);
      frame.agreement = std::min(frame.agreement, svd_c.singularValues()(mi - 1));
      frame.blocks.push_back(orthonormal_columns(e));
    }
    before = upto;
  }

  // sanity: the assembled frame must span R^d
  require(condition_number(frame.assembled()) < 1e10, ErrorCode::kNotConverged,
          "oseledets frame is numerically degenerate");
  return frame;
}

OseledetsFrame advance_frame(const CocycleMap& a, const BaseSystem& sys,
                             const OseledetsFrame& frame) {
  OseledetsFrame next = frame;
  next.x = sys.iterate(frame.x, 1);
  Matrix ax = a.evaluate(frame.x);
  for (size_t i = 0; i < frame.blocks.size(); ++i)
    next.blocks[i] = orthonormal_columns(ax * frame.blocks[i]);
  return next;
}

ZeroExponentReport zero_exponent_check(const CocycleMap& a, const BaseSystem& sys,
                                       int64_t samples, uint64_t seed,
                                       int64_t n_iters) {
  require(samples >= 1, ErrorCode::kInvalidArgument, "need at least one sample");
  ZeroExponentReport rep;
  auto pts = sys.sample_measure(seed, samples);
  double log_scale = 0;
  for (const auto& p : pts) {
    double nrm = spectral_norm(a.evaluate(p));
    log_scale = std::max(log_scale, std::abs(std::log(std::max(nrm, 1e-300))));
    LyapunovSpectrum spec = lyapunov_spectrum(a, sys, p, n_iters);
    rep.max_abs_top = std::max(rep.max_abs_top, std::abs(spec.top()));
    rep.max_abs_bottom = std::max(rep.max_abs_bottom, std::abs(spec.bottom()));
    rep.per_sample.push_back(std::move(spec));
  }
  rep.threshold = 1e-3 * std::max(1.0, log_scale);
  rep.pass = rep.max_abs_top <= rep.threshold && rep.max_abs_bottom <= rep.threshold;
  return rep;
}

}  // namespace cocyclelab
