#include "cocyclelab/lyapunov_norm.hpp"

#include <Eigen/Eigenvalues>

namespace cocyclelab {

namespace {

struct DirectionalSum {
  std::vector<Matrix> grams;  // per block, m_i x m_i, this direction's n != 0 terms
  std::vector<double> last_term_trace;
  bool certified = true;
  std::string why;
};

// Accumulate sum_{n=1..N} e^{+-2 lam_i n - 2 eps n} (A^{+-n} B_i)^T (A^{+-n} B_i)
// for all blocks in one orbit sweep.
DirectionalSum sweep(const CocycleMap& a, const BaseSystem& sys, const Point& x,
                     const OseledetsFrame& frame, double epsilon, int truncation,
                     bool backward, int certificate_window) {
  DirectionalSum out;
  size_t l = frame.blocks.size();
  std::vector<Matrix> y(l);
  std::vector<double> sigma(l, 0.0);
  std::vector<std::vector<double>> growth(l);
  for (size_t i = 0; i < l; ++i) {
    double f = frame.blocks[i].norm();  // Frobenius
    y[i] = frame.blocks[i] / f;
    sigma[i] = std::log(f);
    out.grams.push_back(Matrix::Zero(frame.blocks[i].cols(), frame.blocks[i].cols()));
    out.last_term_trace.push_back(0.0);
    growth[i].reserve(static_cast<size_t>(truncation));
  }
  OrbitEvaluator ev(a, sys, x, backward);
  for (int n = 1; n <= truncation; ++n) {
    const Matrix& step = ev.next();
    for (size_t i = 0; i < l; ++i) {
      Matrix z = step * y[i];
      double f = z.norm();
      sigma[i] += std::log(f);
      growth[i].push_back(std::log(f));
      y[i] = z / f;
      double lam = frame.exponents[i];
      double signed_lam = backward ? lam : -lam;  // e^{-2 lam n} fwd, e^{+2 lam n} bwd
      double w = std::exp(2.0 * (sigma[i] + signed_lam * n - epsilon * n));
      Matrix term = w * (y[i].transpose() * y[i]);
      out.grams[i] += term;
      if (n == truncation) out.last_term_trace[i] = term.trace();
    }
  }
  // Certificate: the average growth over the trailing window must sit inside
  // the (lam_i +- eps/2) cone, so each dropped term shrinks by e^{-eps} at
  // least.
  int w = std::min(certificate_window, truncation);
  for (size_t i = 0; i < l; ++i) {
    double avg = 0;
    for (int n = truncation - w; n < truncation; ++n)
      avg += growth[i][static_cast<size_t>(n)];
    avg /= static_cast<double>(w);
    double target = backward ? -frame.exponents[i] : frame.exponents[i];
    if (std::abs(avg - target) > epsilon / 2.0) {
      out.certified = false;
      out.why = "trailing growth " + std::to_string(avg) + " leaves the cone around " +
                std::to_string(target);
    }
  }
  return out;
}

}  // namespace

LyapunovNormContext lyap_gram(const CocycleMap& a, const BaseSystem& sys,
                              const Point& x, double epsilon, int truncation,
                              const OseledetsFrame* frame,
                              const LyapGramOptions& opts) {
  require(epsilon > 0, ErrorCode::kInvalidArgument, "epsilon must be positive");
  require(truncation >= 4, ErrorCode::kInvalidArgument, "truncation too small");
  LyapunovNormContext ctx;
  ctx.x = x;
  ctx.epsilon = epsilon;
  ctx.truncation = truncation;
  if (frame) {
    ctx.frame = *frame;
  } else {
    ctx.frame = oseledets_splitting(a, sys, x, opts.spectrum_iters);
  }
  int d = a.dimension();
  size_t l = ctx.frame.blocks.size();

  DirectionalSum fwd = sweep(a, sys, x, ctx.frame, epsilon, truncation, false,
                             opts.certificate_window);
  DirectionalSum bwd = sweep(a, sys, x, ctx.frame, epsilon, truncation, true,
                             opts.certificate_window);
  if (!fwd.certified || !bwd.certified)
    fail(ErrorCode::kTailNotCertified,
         (fwd.certified ? bwd.why : fwd.why) + "; raise the truncation");

  double rho = std::exp(-epsilon);
  double tail_raw = 0;
  ctx.block_grams.resize(l);
  for (size_t i = 0; i < l; ++i) {
    int m = static_cast<int>(ctx.frame.blocks[i].cols());
    ctx.block_grams[i] = Matrix::Identity(m, m) + fwd.grams[i] + bwd.grams[i];
    tail_raw += (fwd.last_term_trace[i] + bwd.last_term_trace[i]) * rho / (1.0 - rho);
  }

  // G = d * B^{-T} diag(G_i) B^{-1}
  Matrix b = ctx.frame.assembled();
  Matrix binv = b.partialPivLu().solve(Matrix::Identity(d, d));
  Matrix blockdiag = Matrix::Zero(d, d);
  int col = 0;
  for (size_t i = 0; i < l; ++i) {
    int m = static_cast<int>(ctx.block_grams[i].rows());
    blockdiag.block(col, col, m, m) = ctx.block_grams[i];
    col += m;
  }
  ctx.gram = static_cast<double>(d) * (binv.transpose() * blockdiag * binv);
  ctx.gram = 0.5 * (ctx.gram + ctx.gram.transpose());
  double binv_norm = spectral_norm(binv);
  ctx.tail_bound = static_cast<double>(d) * binv_norm * binv_norm * tail_raw;

  Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.gram);
  require(es.eigenvalues()(0) > 0, ErrorCode::kNotConverged,
          "Gram matrix lost positivity");
  ctx.lambda_min = es.eigenvalues()(0);
  ctx.c_eps = std::sqrt(es.eigenvalues()(d - 1));
  ctx.gram_sqrt = es.operatorSqrt();
  ctx.gram_inv_sqrt = es.operatorInverseSqrt();
  return ctx;
}

double lyap_norm_vector(const LyapunovNormContext& ctx, const Vector& u) {
  double q = u.dot(ctx.gram * u);
  return std::sqrt(std::max(q, 0.0));
}

double lyap_norm_operator(const LyapunovNormContext& ctx_x,
                          const LyapunovNormContext& ctx_y, const Matrix& b) {
  require(ctx_x.gram.rows() == b.cols() && ctx_y.gram.rows() == b.rows(),
          ErrorCode::kInvalidArgument, "operator norm dimension mismatch");
  return spectral_norm(ctx_y.gram_sqrt * b * ctx_x.gram_inv_sqrt);
}

RegularMembership regular_block_membership(const CocycleMap& a,
                                           const BaseSystem& sys, const Point& x,
                                           double epsilon, double block_bound,
                                           int truncation,
                                           const OseledetsFrame* frame) {
  LyapunovNormContext ctx = lyap_gram(a, sys, x, epsilon, truncation, frame);
  return {ctx.c_eps <= block_bound, ctx.c_eps};
}

}  // namespace cocyclelab
