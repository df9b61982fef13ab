#include "cocyclelab/cocycle.hpp"

#include <Eigen/QR>

#include <cmath>

namespace cocyclelab {

namespace {

Matrix rotation(double theta) {
  Matrix r(2, 2);
  double c = std::cos(theta), s = std::sin(theta);
  r << c, -s, s, c;
  return r;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

// ---------------------------------------------------------------------------
// GroundTruthTransfer

GroundTruthTransfer GroundTruthTransfer::rotation_field(
    std::vector<TrigTerm> terms, double holder_alpha) {
  require(holder_alpha > 0 && holder_alpha <= 1, ErrorCode::kInvalidArgument,
          "holder exponent must lie in (0,1]");
  GroundTruthTransfer t;
  t.kind_ = Kind::kRotation;
  t.dimension_ = 2;
  t.holder_alpha_ = holder_alpha;
  t.bound_ = 1.0;  // rotations are orthogonal
  t.terms_ = std::move(terms);
  return t;
}

GroundTruthTransfer GroundTruthTransfer::rotation_lacunary(
    int levels, double amplitude, double holder_alpha, int base,
    uint64_t phase_seed) {
  require(levels >= 1 && base >= 2, ErrorCode::kInvalidArgument,
          "lacunary field needs levels >= 1, base >= 2");
  SeededRng rng(phase_seed);
  std::vector<TrigTerm> terms;
  terms.reserve(static_cast<size_t>(levels));
  double freq = 1;
  for (int j = 0; j < levels; ++j) {
    TrigTerm term;
    term.freq = {static_cast<int64_t>(freq), 0};
    term.amplitude =
        amplitude * std::pow(static_cast<double>(base),
                             -holder_alpha * static_cast<double>(j));
    term.phase = kTwoPi * rng.uniform01();
    terms.push_back(std::move(term));
    freq *= base;
    require(freq < 9e15, ErrorCode::kInvalidArgument, "lacunary level overflow");
  }
  return rotation_field(std::move(terms), holder_alpha);
}

GroundTruthTransfer GroundTruthTransfer::cylinder(int alphabet, int depth,
                                                  std::vector<Matrix> table,
                                                  double holder_alpha) {
  require(alphabet >= 2 && depth >= 0, ErrorCode::kInvalidArgument,
          "cylinder transfer needs alphabet >= 2, depth >= 0");
  size_t expected = 1;
  for (int i = 0; i < 2 * depth + 1; ++i) expected *= static_cast<size_t>(alphabet);
  require(table.size() == expected, ErrorCode::kInvalidArgument,
          "cylinder table must cover every word of length 2*depth+1");
  GroundTruthTransfer t;
  t.kind_ = Kind::kCylinder;
  t.holder_alpha_ = holder_alpha;
  t.alphabet_ = alphabet;
  t.depth_ = depth;
  t.dimension_ = static_cast<int>(table.front().rows());
  double bound = 0;
  t.table_inv_.reserve(table.size());
  for (const auto& m : table) {
    require(m.rows() == t.dimension_ && m.cols() == t.dimension_,
            ErrorCode::kInvalidArgument, "cylinder table dimension mismatch");
    require(condition_number(m) < 1e12, ErrorCode::kInvalidArgument,
            "cylinder table entry is numerically singular");
    Matrix inv = m.inverse();
    bound = std::max({bound, spectral_norm(m), spectral_norm(inv)});
    t.table_inv_.push_back(inv);
  }
  t.table_ = std::move(table);
  t.bound_ = bound;
  return t;
}

double GroundTruthTransfer::angle(const TorusPoint& x) const {
  require(kind_ == Kind::kRotation, ErrorCode::kInvalidArgument,
          "angle(): not a rotation field");
  double theta = 0;
  for (const auto& term : terms_) {
    double arg = term.phase;
    int k = std::min<int>(static_cast<int>(term.freq.size()), x.dimension());
    for (int i = 0; i < k; ++i)
      arg += kTwoPi * static_cast<double>(term.freq[static_cast<size_t>(i)]) * x[i];
    theta += term.amplitude * std::cos(arg);
  }
  return theta;
}

int64_t GroundTruthTransfer::word_code(const SymbolSequence& s) const {
  int64_t code = 0, pow = 1;
  for (int n = -depth_; n <= depth_; ++n) {
    code += pow * s.symbol_at(n);
    pow *= alphabet_;
  }
  return code;
}

Matrix GroundTruthTransfer::evaluate(const Point& x) const {
  if (kind_ == Kind::kRotation)
    return rotation(angle(std::get<TorusPoint>(x)));
  return table_[static_cast<size_t>(word_code(std::get<SymbolSequence>(x)))];
}

Matrix GroundTruthTransfer::evaluate_inverse(const Point& x) const {
  if (kind_ == Kind::kRotation)
    return rotation(-angle(std::get<TorusPoint>(x)));
  return table_inv_[static_cast<size_t>(word_code(std::get<SymbolSequence>(x)))];
}

// ---------------------------------------------------------------------------
// ScaledProduct

ScaledProduct ScaledProduct::identity(int d) {
  ScaledProduct p;
  p.q_ = Matrix::Identity(d, d);
  p.r_ = Matrix::Identity(d, d);
  p.log_scale_ = 0;
  return p;
}

ScaledProduct ScaledProduct::from_matrix(const Matrix& b) {
  ScaledProduct p = identity(static_cast<int>(b.rows()));
  p.apply_left(b);
  return p;
}

void ScaledProduct::apply_left(const Matrix& b) {
  int d = dimension();
  Matrix z = b * q_;
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix qn = qr.householderQ();
  Matrix rn = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix signs so diag(R) > 0
  for (int i = 0; i < d; ++i) {
    if (rn(i, i) < 0) {
      rn.row(i) = -rn.row(i);
      qn.col(i) = -qn.col(i);
    }
  }
  q_ = qn;
  r_ = rn * r_;
  renormalize();
}

void ScaledProduct::renormalize() {
  int d = dimension();
  double acc = 0;
  for (int i = 0; i < d; ++i) acc += std::log(r_(i, i));
  double mean = acc / static_cast<double>(d);
  if (std::abs(mean) > 1e-3) {
    r_ *= std::exp(-mean);
    log_scale_ += mean;
  }
}

Matrix ScaledProduct::rel_to(const ScaledProduct& base) const {
  // this * base^{-1} = e^{s1-s2} Q1 (R1 R2^{-1}) Q2^T
  Matrix w = base.r_.transpose()
                 .triangularView<Eigen::Lower>()
                 .solve(r_.transpose())
                 .transpose();
  return std::exp(log_scale_ - base.log_scale_) * (q_ * w * base.q_.transpose());
}

Matrix ScaledProduct::left_quotient(const ScaledProduct& other) const {
  // this^{-1} * other = e^{s2-s1} R1^{-1} (Q1^T Q2) R2
  Matrix mid = q_.transpose() * other.q_ * other.r_;
  Matrix out = r_.triangularView<Eigen::Upper>().solve(mid);
  return std::exp(other.log_scale_ - log_scale_) * out;
}

double ScaledProduct::log_norm() const {
  return log_scale_ + std::log(spectral_norm(r_));
}

double ScaledProduct::log_norm_inverse() const {
  Matrix rinv = r_.triangularView<Eigen::Upper>().solve(
      Matrix::Identity(dimension(), dimension()));
  return -log_scale_ + std::log(spectral_norm(rinv));
}

// ---------------------------------------------------------------------------
// CocycleMap

CocycleMap CocycleMap::constant(const Matrix& a0, double alpha) {
  require(a0.rows() == a0.cols() && a0.rows() >= 1, ErrorCode::kInvalidArgument,
          "constant cocycle needs a square matrix");
  require(condition_number(a0) < 1e12, ErrorCode::kInvalidArgument,
          "constant cocycle matrix is numerically singular");
  CocycleMap a;
  a.variant_ = Variant::kConstant;
  a.dimension_ = static_cast<int>(a0.rows());
  a.holder_alpha_ = alpha;
  a.constant_ = a0;
  a.constant_inv_ = a0.inverse();
  return a;
}

CocycleMap CocycleMap::coboundary(GroundTruthTransfer p_true,
                                  std::shared_ptr<const BaseSystem> base) {
  require(base != nullptr, ErrorCode::kInvalidArgument,
          "coboundary cocycle needs its base system");
  CocycleMap a;
  a.variant_ = Variant::kCoboundary;
  a.dimension_ = p_true.dimension();
  a.holder_alpha_ = p_true.holder_alpha();
  a.truth_ = std::move(p_true);
  a.base_ = std::move(base);
  return a;
}

CocycleMap CocycleMap::locally_constant(int alphabet, int depth,
                                        std::vector<Matrix> table, double alpha) {
  require(alphabet >= 2 && depth >= 0, ErrorCode::kInvalidArgument,
          "locally constant cocycle needs alphabet >= 2, depth >= 0");
  size_t expected = 1;
  for (int i = 0; i < 2 * depth + 1; ++i) expected *= static_cast<size_t>(alphabet);
  require(table.size() == expected, ErrorCode::kInvalidArgument,
          "locally constant table must cover every word of length 2*depth+1");
  CocycleMap a;
  a.variant_ = Variant::kLocallyConstant;
  a.dimension_ = static_cast<int>(table.front().rows());
  a.holder_alpha_ = alpha;
  a.alphabet_ = alphabet;
  a.depth_ = depth;
  a.table_inv_.reserve(table.size());
  for (const auto& m : table) {
    require(m.rows() == a.dimension_ && m.cols() == a.dimension_,
            ErrorCode::kInvalidArgument, "table dimension mismatch");
    require(condition_number(m) < 1e12, ErrorCode::kInvalidArgument,
            "table entry is numerically singular");
    a.table_inv_.push_back(m.inverse());
  }
  a.table_ = std::move(table);
  return a;
}

CocycleMap CocycleMap::torus_smooth(const Matrix& constant_term,
                                    std::vector<SmoothTerm> terms, double alpha) {
  require(constant_term.rows() == constant_term.cols(),
          ErrorCode::kInvalidArgument, "constant term must be square");
  CocycleMap a;
  a.variant_ = Variant::kTorusSmooth;
  a.dimension_ = static_cast<int>(constant_term.rows());
  a.holder_alpha_ = alpha;
  a.smooth_constant_ = constant_term;
  for (const auto& t : terms)
    require(t.coeff.rows() == a.dimension_ && t.coeff.cols() == a.dimension_,
            ErrorCode::kInvalidArgument, "coefficient dimension mismatch");
  a.smooth_terms_ = std::move(terms);
  return a;
}

Matrix CocycleMap::evaluate_raw(const Point& x) const {
  switch (variant_) {
    case Variant::kConstant:
      return constant_;
    case Variant::kCoboundary: {
      Point fx = base_->iterate(x, 1);
      return truth_.evaluate(fx) * truth_.evaluate_inverse(x);
    }
    case Variant::kLocallyConstant: {
      const auto& s = std::get<SymbolSequence>(x);
      int64_t code = 0, pow = 1;
      for (int n = -depth_; n <= depth_; ++n) {
        code += pow * s.symbol_at(n);
        pow *= alphabet_;
      }
      return table_[static_cast<size_t>(code)];
    }
    case Variant::kTorusSmooth: {
      const auto& t = std::get<TorusPoint>(x);
      Matrix m = smooth_constant_;
      for (const auto& term : smooth_terms_) {
        double arg = term.phase;
        int k = std::min<int>(static_cast<int>(term.freq.size()), t.dimension());
        for (int i = 0; i < k; ++i)
          arg += kTwoPi * static_cast<double>(term.freq[static_cast<size_t>(i)]) * t[i];
        m += std::cos(arg) * term.coeff;
      }
      return m;
    }
  }
  fail(ErrorCode::kInvalidArgument, "unreachable cocycle variant");
}

void CocycleMap::check_condition(const Matrix& m) const {
  double cond = condition_number(m);
  if (!(cond <= condition_bound_))
    fail(ErrorCode::kIllConditioned,
         "cocycle value has condition number " + std::to_string(cond));
}

Matrix CocycleMap::evaluate(const Point& x) const {
  Matrix m = evaluate_raw(x);
  check_condition(m);
  return m;
}

Matrix CocycleMap::evaluate_inverse(const Point& x) const {
  switch (variant_) {
    case Variant::kConstant:
      return constant_inv_;
    case Variant::kCoboundary: {
      Point fx = base_->iterate(x, 1);
      return truth_.evaluate(x) * truth_.evaluate_inverse(fx);
    }
    case Variant::kLocallyConstant: {
      const auto& s = std::get<SymbolSequence>(x);
      int64_t code = 0, pow = 1;
      for (int n = -depth_; n <= depth_; ++n) {
        code += pow * s.symbol_at(n);
        pow *= alphabet_;
      }
      return table_inv_[static_cast<size_t>(code)];
    }
    case Variant::kTorusSmooth: {
      Matrix m = evaluate(x);
      return m.inverse();
    }
  }
  fail(ErrorCode::kInvalidArgument, "unreachable cocycle variant");
}

// ---------------------------------------------------------------------------
// OrbitEvaluator / products

OrbitEvaluator::OrbitEvaluator(const CocycleMap& a, const BaseSystem& sys,
                               Point x, bool backward)
    : a_(a), sys_(sys), x_(std::move(x)), backward_(backward) {}

const Matrix& OrbitEvaluator::next() {
  if (!backward_) {
    if (a_.variant_ == CocycleMap::Variant::kCoboundary) {
      if (!has_p_) {
        p_here_ = a_.truth_.evaluate(x_);
        has_p_ = true;
      }
      Point fx = sys_.iterate(x_, 1);
      Matrix p_next = a_.truth_.evaluate(fx);
      current_ = p_next * p_here_.inverse();
      a_.check_condition(current_);
      p_here_ = std::move(p_next);
      x_ = std::move(fx);
      return current_;
    }
    current_ = a_.evaluate(x_);
    x_ = sys_.iterate(x_, 1);
    return current_;
  }
  // backward: emit A(f^{-j-1} x)^{-1}
  Point prev = sys_.iterate(x_, -1);
  if (a_.variant_ == CocycleMap::Variant::kCoboundary) {
    if (!has_p_) {
      p_here_ = a_.truth_.evaluate(x_);
      has_p_ = true;
    }
    Matrix p_prev = a_.truth_.evaluate(prev);
    current_ = p_prev * p_here_.inverse();
    a_.check_condition(current_);
    p_here_ = std::move(p_prev);
  } else {
    current_ = a_.evaluate_inverse(prev);
  }
  x_ = std::move(prev);
  return current_;
}

ScaledProduct cocycle_product(const CocycleMap& a, const BaseSystem& sys,
                              const Point& x, int64_t n, int64_t budget,
                              int reorth_interval) {
  require(std::llabs(n) <= budget, ErrorCode::kBudgetExceeded,
          "product length exceeds the configured budget");
  require(reorth_interval >= 1, ErrorCode::kInvalidArgument,
          "reorth interval must be >= 1");
  ScaledProduct sp = ScaledProduct::identity(a.dimension());
  if (n == 0) return sp;
  OrbitEvaluator ev(a, sys, x, n < 0);
  int64_t count = std::llabs(n);
  if (reorth_interval == 1) {
    for (int64_t i = 0; i < count; ++i) sp.apply_left(ev.next());
    return sp;
  }
  Matrix buffer;
  int pending = 0;
  for (int64_t i = 0; i < count; ++i) {
    if (pending == 0)
      buffer = ev.next();
    else
      buffer = ev.next() * buffer;
    if (++pending == reorth_interval) {
      sp.apply_left(buffer);
      pending = 0;
    }
  }
  if (pending > 0) sp.apply_left(buffer);
  return sp;
}

}  // namespace cocyclelab
