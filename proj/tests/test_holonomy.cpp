#include <doctest.h>

#include "cocyclelab/holonomy.hpp"

#include <cmath>
#include <memory>

using namespace cocyclelab;

namespace {

std::shared_ptr<const BaseSystem> cat_map() {
  Matrix m(2, 2);
  m << 2, 1, 1, 1;
  return std::make_shared<BaseSystem>(BaseSystem::torus_automorphism(m));
}

std::shared_ptr<const BaseSystem> shift2() {
  return std::make_shared<BaseSystem>(BaseSystem::full_shift(2));
}

Matrix rot(double t) {
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Matrix shear(double s, double d) {
  Matrix m(2, 2);
  m << d, s, 0, 1.0 / d;
  return m;
}

HolonomySettings settings() {
  HolonomySettings st;
  st.theta = 0.1;
  st.tol = 1e-11;
  return st;
}

// direct finite-product oracle for the stable limit at step n
Matrix stable_oracle(const CocycleMap& a, const BaseSystem& sys, const Point& y,
                     const Point& z, int64_t n) {
  Matrix ay = Matrix::Identity(2, 2), az = Matrix::Identity(2, 2);
  Point py = y, pz = z;
  for (int64_t i = 0; i < n; ++i) {
    ay = a.evaluate(py) * ay;
    az = a.evaluate(pz) * az;
    py = sys.iterate(py, 1);
    pz = sys.iterate(pz, 1);
  }
  return az.inverse() * ay;
}

}  // namespace

TEST_CASE("domination check") {
  auto sys = cat_map();
  Point x = sys->sample_measure(4, 1)[0];

  CocycleMap id = CocycleMap::constant(Matrix::Identity(2, 2));
  DominationReport dom = domination_check(id, *sys, x, 5, 0.01, 12);
  CHECK(dom.pass);
  for (double lp : dom.log_products_forward) CHECK(std::abs(lp) < 1e-9);

  // coboundary from a rotation field: products are exactly 1
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.0}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  CHECK(domination_check(cob, *sys, x, 5, 0.05, 10).pass);

  // diag(2, 1/2): the product grows like e^{2 k N log 2}
  Matrix d2(2, 2);
  d2 << 2, 0, 0, 0.5;
  CocycleMap bad = CocycleMap::constant(d2);
  DominationReport rep = domination_check(bad, *sys, x, 5, 0.5, 6);
  CHECK_FALSE(rep.pass);
  CHECK(rep.first_fail_k == 1);
  CHECK(rep.log_products_forward[0] ==
        doctest::Approx(2.0 * 5.0 * std::log(2.0)).epsilon(1e-9));
  DominationReport ok = domination_check(bad, *sys, x, 5, 2.0 * std::log(2.0) + 0.01, 6);
  CHECK(ok.pass);
}

TEST_CASE("locally constant holonomies stabilize exactly at the depth") {
  auto sys = shift2();
  // depth-1 cocycle with non-commuting values
  std::vector<Matrix> table;
  for (int code = 0; code < 8; ++code)
    table.push_back(rot(0.2 + 0.15 * code) * shear(0.1 * ((code * 5) % 3), 1.0));
  CocycleMap a = CocycleMap::locally_constant(2, 1, table, 1.0);

  Point y = sys->sample_measure(12, 1)[0];

  // z = y -> Id exactly
  HolonomyMatrix triv = stable_holonomy(a, *sys, y, y, settings());
  CHECK(spectral_norm(Matrix(triv.h - Matrix::Identity(2, 2))) == 0.0);
  CHECK(triv.n_converged == 0);

  // depth-1 cocycle, leaf pair differing at n = -1: A sees the difference
  // only at j = 0,1; exact from n = 2... but if they agree at n >= 0 and the
  // cocycle depth is 1, A(f^j y) = A(f^j z) for j >= 1, so the limit is
  // exact at n = depth = 1? j=0 window is (-1,0,1): differs. j=1 window
  // (0,1,2): equal. Stabilization index = depth.
  Point z1 = sys->local_stable_point(y, 1);
  HolonomyMatrix h1 = stable_holonomy(a, *sys, y, z1, settings());
  CHECK(h1.n_converged == 1);
  Matrix oracle1 = stable_oracle(a, *sys, y, z1, 1);
  CHECK(spectral_norm(Matrix(h1.h - oracle1)) <= 1e-12);

  // depth-2 disagreement for a depth-2 cocycle
  std::vector<Matrix> table2;
  for (int code = 0; code < 32; ++code)
    table2.push_back(rot(0.1 + 0.07 * code) * shear(0.05 * ((code * 7) % 5), 1.0));
  CocycleMap a2 = CocycleMap::locally_constant(2, 2, table2, 1.0);
  Point z2 = sys->local_stable_point(y, 1);  // differs at n = -1
  HolonomyMatrix h2 = stable_holonomy(a2, *sys, y, z2, settings());
  CHECK(h2.n_converged == 2);
  Matrix oracle2 = stable_oracle(a2, *sys, y, z2, 2);
  CHECK(spectral_norm(Matrix(h2.h - oracle2)) <= 1e-12);

  // once stabilized, longer products change nothing
  Matrix oracle5 = stable_oracle(a2, *sys, y, z2, 7);
  CHECK(spectral_norm(Matrix(h2.h - oracle5)) <= 1e-12);
}

TEST_CASE("holonomy against the coboundary transfer oracle") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.7}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  auto pts = sys->sample_measure(91, 12);
  for (const auto& y : pts) {
    Point zs = sys->local_stable_point(y, 0.02);
    HolonomyMatrix hs = stable_holonomy(cob, *sys, y, zs, settings());
    Matrix expected = truth.evaluate(zs) * truth.evaluate_inverse(y);
    CHECK(spectral_norm(Matrix(hs.h - expected)) < 1e-8);

    Point zu = sys->local_unstable_point(y, -0.015);
    HolonomyMatrix hu = unstable_holonomy(cob, *sys, y, zu, settings());
    Matrix uexpected = truth.evaluate(zu) * truth.evaluate_inverse(y);
    CHECK(spectral_norm(Matrix(hu.h - uexpected)) < 1e-8);
  }
}

TEST_CASE("holonomy equivariance") {
  auto sys = cat_map();
  Matrix c0 = 1.0 * Matrix::Identity(2, 2);
  std::vector<CocycleMap::SmoothTerm> terms;
  terms.push_back({{1, 0}, 0.2, 0.18 * rot(0.4)});
  terms.push_back({{0, 1}, 1.1, 0.12 * shear(0.3, 1.0)});
  CocycleMap a = CocycleMap::torus_smooth(c0, terms, 1.0);

  auto pts = sys->sample_measure(17, 8);
  for (const auto& y : pts) {
    Point z = sys->local_stable_point(y, 0.012);
    HolonomyMatrix base = stable_holonomy(a, *sys, y, z, settings());
    // H^s_{f^j y, f^j z} = A^j(z) H^s_{yz} A^j(y)^{-1}
    for (int j = 1; j <= 5; ++j) {
      HolonomyMatrix pushed = stable_holonomy(
          a, *sys, sys->iterate(y, j), sys->iterate(z, j), settings());
      Matrix ajy = cocycle_product(a, *sys, y, j).to_matrix();
      Matrix ajz = cocycle_product(a, *sys, z, j).to_matrix();
      Matrix rhs = ajz * base.h * ajy.inverse();
      CHECK(spectral_norm(Matrix(pushed.h - rhs)) < 1e-8);
    }

    // unstable mirror under f^{-1}
    Point w = sys->local_unstable_point(y, 0.012);
    HolonomyMatrix ubase = unstable_holonomy(a, *sys, y, w, settings());
    HolonomyMatrix upushed = unstable_holonomy(
        a, *sys, sys->iterate(y, -1), sys->iterate(w, -1), settings());
    Matrix am1y = cocycle_product(a, *sys, y, -1).to_matrix();
    Matrix am1w = cocycle_product(a, *sys, w, -1).to_matrix();
    Matrix rhs = am1w * ubase.h * am1y.inverse();
    CHECK(spectral_norm(Matrix(upushed.h - rhs)) < 1e-8);
  }
}

TEST_CASE("holonomy groupoid laws") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{2, 1}, 0.22, 0.1}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  auto pts = sys->sample_measure(29, 10);
  for (const auto& y : pts) {
    Point z = sys->local_stable_point(y, 0.011);
    Point w = sys->local_stable_point(y, 0.023);
    HolonomyMatrix hyz = stable_holonomy(cob, *sys, y, z, settings());
    HolonomyMatrix hzw = stable_holonomy(cob, *sys, z, w, settings());
    HolonomyMatrix hyw = stable_holonomy(cob, *sys, y, w, settings());
    HolonomyMatrix hzy = stable_holonomy(cob, *sys, z, y, settings());
    CHECK(spectral_norm(Matrix(hzw.h * hyz.h - hyw.h)) < 1e-8);
    CHECK(spectral_norm(Matrix(hzy.h - hyz.h.inverse())) < 1e-8);
  }
}

TEST_CASE("holonomy Hoelder envelope") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.35, 0.0}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  SeededRng rng(8);
  std::vector<double> ratios;
  for (int i = 0; i < 300; ++i) {
    Point y = sys->sample_measure(1000 + i, 1)[0];
    double s = (rng.uniform01() * 2 - 1) * 0.04;
    if (std::abs(s) < 1e-4) continue;
    Point z = sys->local_stable_point(y, s);
    HolonomyMatrix h = stable_holonomy(cob, *sys, y, z, settings());
    double d = sys->distance(y, z);
    ratios.push_back(spectral_norm(Matrix(h.h - Matrix::Identity(2, 2))) / d);
  }
  REQUIRE(ratios.size() > 200);
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  double p90 = sorted[static_cast<size_t>(0.9 * sorted.size())];
  double worst = sorted.back();
  CHECK(worst <= 3.0 * p90);  // no outlier beyond 3x the envelope
}

TEST_CASE("bracket chain transport") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.5}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);

  // degenerate chain at y = x
  Point x = sys->sample_measure(3, 1)[0];
  Matrix px = Matrix::Identity(2, 2);
  ChainReconstruction degenerate = chain_transport(cob, *sys, x, x, px, settings());
  CHECK(degenerate.chain_length == 0.0);
  CHECK(spectral_norm(Matrix(degenerate.p_reconstructed - px)) < 1e-12);

  // reconstruction against the ground truth, many pairs
  SeededRng rng(77);
  int built = 0;
  double worst_ratio = 0, worst_k = 0;
  for (int i = 0; i < 120 && built < 80; ++i) {
    Point a = sys->sample_measure(2000 + i, 1)[0];
    Vector offset(2);
    offset << (rng.uniform01() * 2 - 1) * 0.01, (rng.uniform01() * 2 - 1) * 0.01;
    Point b = TorusPoint(Vector(std::get<TorusPoint>(a).coords() + offset));
    double d = sys->distance(a, b);
    if (d < 1e-5 || d >= sys->bracket_radius() / 2) continue;
    Matrix pa = truth.evaluate(a);
    ChainReconstruction chain = chain_transport(cob, *sys, a, b, pa, settings());
    ++built;
    Matrix expected = truth.evaluate(b);
    double res = spectral_norm(Matrix(chain.p_reconstructed - expected));
    worst_ratio = std::max(worst_ratio, res / d);  // alpha = 1
    worst_k = std::max(worst_k, chain.k_ratio);
  }
  REQUIRE(built >= 80);
  CHECK(worst_ratio < 50.0);  // finite run-level Hoelder constant
  CHECK(worst_k <= 2.0);      // orthogonal eigenbasis: sum of legs <= sqrt(2) d
}

TEST_CASE("chain transport on the shift is exact for cylinder transfers") {
  auto sys = shift2();
  std::vector<Matrix> ptable = {rot(0.3), rot(1.1) * shear(0.2, 1.0)};
  GroundTruthTransfer truth = GroundTruthTransfer::cylinder(2, 0, ptable, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  auto pts = sys->sample_measure(5, 30);
  int built = 0;
  for (const auto& a : pts) {
    // perturb far coordinates so the pair is close but distinct
    const auto& sa = std::get<SymbolSequence>(a);
    SymbolSequence sb = sa.with_symbol(-3, (sa.symbol_at(-3) + 1) % 2)
                            .with_symbol(4, (sa.symbol_at(4) + 1) % 2);
    double d = sys->distance(sa, sb);
    if (d >= sys->bracket_radius() / 2) continue;
    ++built;
    Matrix pa = truth.evaluate(sa);
    ChainReconstruction chain = chain_transport(cob, *sys, sa, sb, pa, settings());
    Matrix expected = truth.evaluate(sb);
    CHECK(spectral_norm(Matrix(chain.p_reconstructed - expected)) <= 1e-10);
  }
  CHECK(built >= 20);
}

TEST_CASE("leaf membership is enforced") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.0}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  Point y = sys->sample_measure(2, 1)[0];
  Point off_leaf = TorusPoint(
      Vector(std::get<TorusPoint>(y).coords() + (Vector(2) << 0.01, 0.0).finished()));
  bool threw = false;
  try {
    (void)stable_holonomy(cob, *sys, y, off_leaf, settings());
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kNotOnLeaf;
  }
  CHECK(threw);

  // a non-dominated cocycle is rejected before iterating
  Matrix d2(2, 2);
  d2 << 2, 0, 0, 0.5;
  CocycleMap bad = CocycleMap::constant(d2);
  Point z = sys->local_stable_point(y, 0.01);
  threw = false;
  try {
    (void)stable_holonomy(bad, *sys, y, z, settings());
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kNotDominated;
  }
  CHECK(threw);
}

TEST_CASE("holder estimate needs enough admitted pairs") {
  auto sys = cat_map();
  CocycleMap id = CocycleMap::constant(Matrix::Identity(2, 2));
  TransferOptions topts;
  topts.n_points = 40;
  topts.epsilon = 0.05;
  topts.truncation = 60;
  topts.spectrum_iters = 2000;
  topts.seed = 5;
  TransferTable tiny = build_transfer(id, *sys, choose_anchor(*sys, 5), topts);
  std::vector<char> mask(tiny.entries.size(), 1);
  bool threw = false;
  try {
    (void)holder_estimate(*sys, tiny, mask, 100, HolderOptions{});
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kInsufficientPairs;
  }
  CHECK(threw);
}

TEST_CASE("holder estimate on transfer tables") {
  auto sys = cat_map();
  auto truth = GroundTruthTransfer::rotation_field({{{1, 0}, 0.3, 0.0}}, 1.0);
  CocycleMap cob = CocycleMap::coboundary(truth, sys);
  Point x0 = choose_anchor(*sys, 41);
  TransferOptions topts;
  topts.n_points = 6000;
  topts.epsilon = 0.05;
  topts.truncation = 120;
  topts.spectrum_iters = 5000;
  topts.seed = 41;
  TransferTable table = build_transfer(cob, *sys, x0, topts);

  std::vector<char> mask = admitted_block_mask(cob, *sys, table, settings(), 2);
  int64_t admitted = std::count(mask.begin(), mask.end(), 1);
  CHECK(admitted >= static_cast<int64_t>(0.8 * table.entries.size()));

  HolderOptions hopts;
  hopts.alpha = 1.0;
  HolderEstimate est = holder_estimate(*sys, table, mask, 20000, hopts);
  CHECK_FALSE(est.degenerate);
  CHECK(est.pairs_used > 500);
  CHECK(est.slope > 0.8);
  CHECK(est.slope < 1.2);

  // identity cocycle: constant P detected
  CocycleMap id = CocycleMap::constant(Matrix::Identity(2, 2));
  TransferOptions small = topts;
  small.n_points = 3000;
  TransferTable t_id = build_transfer(id, *sys, x0, small);
  std::vector<char> mask_id(t_id.entries.size(), 1);
  HolderEstimate e_id = holder_estimate(*sys, t_id, mask_id, 5000, hopts);
  CHECK(e_id.degenerate);
}
