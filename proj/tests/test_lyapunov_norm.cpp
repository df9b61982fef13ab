#include <doctest.h>

#include "cocyclelab/lyapunov_norm.hpp"

#include <cmath>
#include <memory>

using namespace cocyclelab;

namespace {

std::shared_ptr<const BaseSystem> cat_map() {
  Matrix m(2, 2);
  m << 2, 1, 1, 1;
  return std::make_shared<BaseSystem>(BaseSystem::torus_automorphism(m));
}

Matrix rot(double t) {
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Matrix diag2(double a, double b) {
  Matrix m(2, 2);
  m << a, 0, 0, b;
  return m;
}

double coth(double x) { return std::cosh(x) / std::sinh(x); }

}  // namespace

TEST_CASE("closed-form Gram for constant orthogonal cocycles") {
  auto sys = cat_map();
  CocycleMap a = CocycleMap::constant(rot(0.4));
  Point x = sys->sample_measure(3, 1)[0];
  LyapunovNormContext ctx = lyap_gram(a, *sys, x, 0.1, 200);

  Vector e1(2);
  e1 << 1, 0;
  double expected = std::sqrt(2.0 * coth(0.1));
  CHECK(std::abs(lyap_norm_vector(ctx, e1) - expected) / expected < 1e-9);
  CHECK(std::abs(c_epsilon(ctx) - expected) / expected < 1e-9);
  CHECK(ctx.tail_bound < 1e-12);
  CHECK(ctx.tail_bound < 0.1 * ctx.lambda_min);

  // every u: ||u||^2_{x,eps} = d coth(eps) ||u||^2
  SeededRng rng(4);
  for (int i = 0; i < 20; ++i) {
    Vector u(2);
    u << rng.uniform01() - 0.5, rng.uniform01() - 0.5;
    CHECK(lyap_norm_vector(ctx, u) ==
          doctest::Approx(std::sqrt(2.0 * coth(0.1)) * u.norm()).epsilon(1e-9));
  }

  // large eps: only n = 0 survives
  LyapunovNormContext wide = lyap_gram(a, *sys, x, 5.0, 50);
  Vector u(2);
  u << 0.3, -0.8;
  CHECK(std::abs(std::pow(lyap_norm_vector(wide, u), 2) - 2.0 * u.squaredNorm()) /
            (2.0 * u.squaredNorm()) <
        1e-3);
  CHECK(std::abs(c_epsilon(wide) - std::sqrt(2.0)) < 1e-3);
}

TEST_CASE("diagonal cocycle block sums match the geometric series") {
  auto sys = cat_map();
  CocycleMap a = CocycleMap::constant(diag2(2.0, 0.5));
  Point x = sys->sample_measure(8, 1)[0];
  LyapunovNormContext ctx = lyap_gram(a, *sys, x, 0.1, 200);
  Vector e1(2);
  e1 << 1, 0;
  CHECK(lyap_norm_vector(ctx, e1) ==
        doctest::Approx(std::sqrt(2.0 * coth(0.1))).epsilon(1e-8));
  // 4.4796 from the worked example
  CHECK(lyap_norm_vector(ctx, e1) == doctest::Approx(4.479578).epsilon(1e-5));
  Vector zero = Vector::Zero(2);
  CHECK(lyap_norm_vector(ctx, zero) == 0.0);
}

TEST_CASE("norm sandwich and positivity") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.0}}, 1.0);
  CocycleMap a = CocycleMap::coboundary(truth, sys);
  SeededRng rng(11);
  auto pts = sys->sample_measure(19, 10);
  for (const auto& p : pts) {
    LyapunovNormContext ctx = lyap_gram(a, *sys, p, 0.1, 150);
    CHECK(ctx.lambda_min >= 1.0 - ctx.tail_bound - 1e-9);
    for (int i = 0; i < 100; ++i) {
      Vector u(2);
      u << rng.uniform01() - 0.5, rng.uniform01() - 0.5;
      double plain = u.norm();
      double lyap = lyap_norm_vector(ctx, u);
      CHECK(lyap >= plain * (1.0 - 1e-9));
      CHECK(lyap <= c_epsilon(ctx) * plain * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("growth inequality (adapted-norm sandwich along the orbit)") {
  auto sys = cat_map();
  CocycleMap a = CocycleMap::constant(diag2(2.0, 0.5));
  Point x = sys->sample_measure(23, 1)[0];
  double eps = 0.1;
  OseledetsFrame frame = oseledets_splitting(a, *sys, x, 2000);
  LyapunovNormContext ctx0 = lyap_gram(a, *sys, x, eps, 200, &frame);

  // e^{(lam_i - eps)|n|} ||u||_x <= ||A^n u||_{f^n x} <= e^{(lam_i + eps)|n|} ||u||_x
  for (size_t blk = 0; blk < frame.blocks.size(); ++blk) {
    double lam = frame.exponents[blk];
    Vector u = frame.blocks[blk].col(0);
    OseledetsFrame cur = frame;
    LyapunovNormContext ctx_n = ctx0;
    Matrix an = Matrix::Identity(2, 2);
    Point pos = x;
    for (int n = 1; n <= 15; ++n) {
      an = a.evaluate(pos) * an;
      pos = sys->iterate(pos, 1);
      cur = advance_frame(a, *sys, cur);
      ctx_n = lyap_gram(a, *sys, pos, eps, 200, &cur);
      double lhs = std::exp((lam - eps) * n) * lyap_norm_vector(ctx0, u);
      double rhs = std::exp((lam + eps) * n) * lyap_norm_vector(ctx0, u);
      double mid = lyap_norm_vector(ctx_n, Vector(an * u));
      double slack = 1e-6 + 2.0 * (ctx0.tail_bound + ctx_n.tail_bound);
      CHECK(mid >= lhs * (1 - 1e-6) - slack);
      CHECK(mid <= rhs * (1 + 1e-6) + slack);
    }
  }
}

TEST_CASE("operator norm properties") {
  auto sys = cat_map();
  CocycleMap a = CocycleMap::constant(diag2(2.0, 0.5));
  Point x = sys->sample_measure(31, 1)[0];
  OseledetsFrame frame = oseledets_splitting(a, *sys, x, 2000);
  LyapunovNormContext ctx_x = lyap_gram(a, *sys, x, 0.1, 200, &frame);

  CHECK(lyap_norm_operator(ctx_x, ctx_x, Matrix::Identity(2, 2)) ==
        doctest::Approx(1.0).epsilon(1e-10));
  Matrix two = 2.0 * Matrix::Identity(2, 2);
  CHECK(lyap_norm_operator(ctx_x, ctx_x, two) ==
        doctest::Approx(2.0).epsilon(1e-10));

  // one step: ||A(x)||_{f(x) <- x} <= e^{lam_1 + eps}
  OseledetsFrame next = advance_frame(a, *sys, frame);
  LyapunovNormContext ctx_fx =
      lyap_gram(a, *sys, sys->iterate(x, 1), 0.1, 200, &next);
  double op = lyap_norm_operator(ctx_x, ctx_fx, a.evaluate(x));
  CHECK(op <= std::exp(std::log(2.0) + 0.1) * (1.0 + 1e-6));

  // operator sandwich: C^{-1}(x) ||B|| <= ||B||_{y <- x} <= C(y) ||B||
  SeededRng rng(2);
  for (int i = 0; i < 25; ++i) {
    Matrix b(2, 2);
    b << rng.uniform01() - 0.5, rng.uniform01() - 0.5, rng.uniform01() - 0.5,
        rng.uniform01() - 0.5;
    double plain = spectral_norm(b);
    double induced = lyap_norm_operator(ctx_x, ctx_fx, b);
    CHECK(induced >= plain / c_epsilon(ctx_x) * (1 - 1e-9));
    CHECK(induced <= plain * c_epsilon(ctx_fx) * (1 + 1e-9));
  }
}

TEST_CASE("c_epsilon growth along orbits") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.0}}, 1.0);
  CocycleMap a = CocycleMap::coboundary(truth, sys);
  Point x = sys->sample_measure(41, 1)[0];
  double eps = 0.1;
  LyapunovNormContext base = lyap_gram(a, *sys, x, eps, 200);
  OseledetsFrame cur = base.frame;
  Point pos = x;
  for (int n = 1; n <= 20; ++n) {
    cur = advance_frame(a, *sys, cur);
    pos = sys->iterate(pos, 1);
    LyapunovNormContext ctx = lyap_gram(a, *sys, pos, eps, 200, &cur);
    double lo = c_epsilon(base) * std::exp(-eps * n) * (1 - 1e-6);
    double hi = c_epsilon(base) * std::exp(eps * n) * (1 + 1e-6);
    CHECK(c_epsilon(ctx) >= lo - 2 * (base.tail_bound + ctx.tail_bound));
    CHECK(c_epsilon(ctx) <= hi + 2 * (base.tail_bound + ctx.tail_bound));
  }
}

TEST_CASE("euclidean growth controlled by C_eps") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.25, 0.4}}, 1.0);
  CocycleMap a = CocycleMap::coboundary(truth, sys);
  double eps = 0.05;
  SeededRng rng(6);
  auto pts = sys->sample_measure(55, 6);
  for (const auto& p : pts) {
    LyapunovNormContext ctx = lyap_gram(a, *sys, p, eps, 200);
    double ce = c_epsilon(ctx);
    for (int64_t n : {-15, -7, 3, 9, 15}) {
      Matrix an = cocycle_product(a, *sys, p, n).to_matrix();
      for (int i = 0; i < 10; ++i) {
        Vector u(2);
        u << rng.uniform01() - 0.5, rng.uniform01() - 0.5;
        // lambda_1 = 0 for coboundaries
        CHECK((an * u).norm() <=
              ce * std::exp(eps * std::abs(n)) * u.norm() * (1 + 1e-6) + 1e-12);
      }
      // regular-block bound with N = C_eps(z): ||A^n(z)|| <= N e^{eps |n|}
      CHECK(spectral_norm(an) <= ce * std::exp(eps * std::abs(n)) * (1 + 1e-6));
    }
  }
}

TEST_CASE("regular block membership") {
  auto sys = cat_map();
  CocycleMap a = CocycleMap::constant(rot(0.7));
  Point x = sys->sample_measure(70, 1)[0];
  auto m1 = regular_block_membership(a, *sys, x, 0.1, 10.0);
  CHECK(m1.member);
  CHECK(m1.c_eps == doctest::Approx(std::sqrt(2.0 * coth(0.1))).epsilon(1e-9));
  auto m2 = regular_block_membership(a, *sys, x, 0.1, 2.0);
  CHECK_FALSE(m2.member);
  // identity cocycle, generous bound
  CocycleMap id = CocycleMap::constant(Matrix::Identity(2, 2));
  auto m3 = regular_block_membership(id, *sys, x, 0.3, 1e6);
  CHECK(m3.member);

  // monotone in N
  auto m4 = regular_block_membership(a, *sys, x, 0.1, m1.c_eps + 1e-6);
  CHECK(m4.member);
}

TEST_CASE("tail certificate rejects hopeless truncations") {
  auto sys = cat_map();
  // growth wobbles by +-log(cond) per step; a tiny truncation with tiny eps
  // cannot certify the tail
  Matrix wob(2, 2);
  wob << 1.35, 0.2, 0.1, 0.8;
  CocycleMap a = CocycleMap::torus_smooth(
      wob, {{{1, 0}, 0.0, 0.25 * Matrix::Identity(2, 2)}}, 1.0);
  Point x = sys->sample_measure(77, 1)[0];
  bool threw = false;
  try {
    (void)lyap_gram(a, *sys, x, 0.001, 8);
  } catch (const Error& e) {
    threw = (e.code() == ErrorCode::kTailNotCertified);
  }
  CHECK(threw);
}
