#pragma once

#include "cocyclelab/spectrum.hpp"

namespace cocyclelab {

/// The assembled epsilon-Lyapunov inner product at one point:
/// <u,v>_{x,eps} = d * sum_i sum_{|n| <= N_t} <A^n u_i, A^n v_i> e^{-2 lam_i n - 2 eps |n|}
/// held as a Gram matrix in standard coordinates, with a certified bound on
/// the truncated tail.
struct LyapunovNormContext {
  Point x;
  double epsilon = 0.1;
  int truncation = 200;
  OseledetsFrame frame;
  std::vector<Matrix> block_grams;  // in block-basis coordinates
  Matrix gram;                      // full Gram, standard coordinates
  Matrix gram_sqrt, gram_inv_sqrt;
  double c_eps = 1;  // sqrt(lambda_max(gram)): the smallest C with
                   // ||u|| <= ||u||_{x,eps} <= C ||u||
  double lambda_min = 1;  // smallest Gram eigenvalue (>= 1 up to the tail)
  double tail_bound = 0;  // certified bound on the dropped tail, Gram norm
};

struct LyapGramOptions {
  int spectrum_iters = 20000;
  // window used by the empirical tail certificate
  int certificate_window = 50;
};

/// Per-block sums over |n| <= truncation with log-scaled pushes; the tail is
/// certified from the observed growth staying inside the (lam_i +- eps/2)
/// cone over the trailing window, giving ratio e^{-eps} per dropped term.
/// Throws TailNotCertified when the observed growth leaves the cone (raise
/// the truncation).
LyapunovNormContext lyap_gram(const CocycleMap& a, const BaseSystem& sys,
                              const Point& x, double epsilon, int truncation,
                              const OseledetsFrame* frame = nullptr,
                              const LyapGramOptions& opts = {});

double lyap_norm_vector(const LyapunovNormContext& ctx, const Vector& u);

/// ||B||_{y <- x} = sup ||Bu||_y / ||u||_x = sigma_max(G_y^{1/2} B G_x^{-1/2}).
double lyap_norm_operator(const LyapunovNormContext& ctx_x,
                          const LyapunovNormContext& ctx_y, const Matrix& b);

inline double c_epsilon(const LyapunovNormContext& ctx) { return ctx.c_eps; }

struct RegularMembership {
  bool member = false;
  double c_eps = 0;
};

/// C_eps(x) <= N, the computable criterion for the regular block R^mu_{eps,N}
/// (on these uniformly hyperbolic testbeds the Pesin factor is all of M, so
/// the set G reduces to this test).
RegularMembership regular_block_membership(const CocycleMap& a,
                                           const BaseSystem& sys, const Point& x,
                                           double epsilon, double block_bound,
                                           int truncation = 200,
                                           const OseledetsFrame* frame = nullptr);

}  // namespace cocyclelab
