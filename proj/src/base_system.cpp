#include "cocyclelab/base_system.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace cocyclelab {

namespace {

using i128 = __int128;

int64_t floor_div(i128 a, i128 b) {
  // b != 0; round toward -inf
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return static_cast<int64_t>(q);
}

int64_t ceil_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return static_cast<int64_t>(q);
}

constexpr int64_t kIntPowerLimit = 300000000000000000LL;  // 3e17

// Integer matrix power with overflow guard (2x2).
std::vector<std::vector<int64_t>> int_power_2x2(
    const std::vector<std::vector<int64_t>>& m, int64_t n) {
  std::vector<std::vector<int64_t>> r = {{1, 0}, {0, 1}};
  for (int64_t step = 0; step < n; ++step) {
    std::vector<std::vector<int64_t>> next(2, std::vector<int64_t>(2, 0));
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        i128 acc = 0;
        for (int t = 0; t < 2; ++t) acc += i128(r[i][t]) * m[t][j];
        if (acc > kIntPowerLimit || acc < -kIntPowerLimit)
          fail(ErrorCode::kBudgetExceeded,
               "matrix power exceeds exact integer range at n=" +
                   std::to_string(step + 1));
        next[i][j] = static_cast<int64_t>(acc);
      }
    }
    r = next;
  }
  return r;
}

double stable_pow(double base_log_abs, int sign, int64_t n) {
  // sign^n * |base|^n with graceful under/overflow handling
  double mag = base_log_abs * static_cast<double>(n);
  double v;
  if (mag > 700.0) v = std::numeric_limits<double>::infinity();
  else if (mag < -745.0) v = 0.0;
  else v = std::exp(mag);
  if (sign < 0 && (n % 2 != 0)) v = -v;
  return v;
}

int64_t lcm_capped(int64_t a, int64_t b) {
  int64_t g = std::gcd(a, b);
  i128 l = i128(a / g) * b;
  constexpr int64_t kCap = int64_t(1) << 22;
  if (l > kCap)
    fail(ErrorCode::kInvalidArgument, "tail periods too large to compare");
  return static_cast<int64_t>(l);
}

}  // namespace

// ---------------------------------------------------------------------------
// TorusPoint

TorusPoint::TorusPoint(Vector coords) : coords_(std::move(coords)) {
  for (int i = 0; i < coords_.size(); ++i) coords_(i) = wrap_unit(coords_(i));
}

TorusPoint::TorusPoint(std::initializer_list<double> coords) {
  coords_.resize(static_cast<int>(coords.size()));
  int i = 0;
  for (double v : coords) coords_(i++) = wrap_unit(v);
}

// ---------------------------------------------------------------------------
// SymbolSequence

SymbolSequence SymbolSequence::periodic_word(int alphabet,
                                             const std::vector<uint8_t>& word) {
  require(alphabet >= 2, ErrorCode::kInvalidArgument, "alphabet must be >= 2");
  require(!word.empty(), ErrorCode::kInvalidArgument, "empty periodic word");
  for (uint8_t s : word)
    require(s < alphabet, ErrorCode::kInvalidArgument, "symbol out of range");
  auto st = std::make_shared<Storage>();
  st->window = word;
  st->right = word;
  st->left.assign(word.rbegin(), word.rend());
  return SymbolSequence(alphabet, std::move(st), 0);
}

SymbolSequence SymbolSequence::from_parts(int alphabet,
                                          std::vector<uint8_t> left,
                                          std::vector<uint8_t> window,
                                          std::vector<uint8_t> right,
                                          int64_t lo) {
  require(alphabet >= 2, ErrorCode::kInvalidArgument, "alphabet must be >= 2");
  require(!left.empty() && !window.empty() && !right.empty(),
          ErrorCode::kInvalidArgument, "sequence parts must be nonempty");
  for (auto* part : {&left, &window, &right})
    for (uint8_t s : *part)
      require(s < alphabet, ErrorCode::kInvalidArgument, "symbol out of range");
  auto st = std::make_shared<Storage>();
  st->left = std::move(left);
  st->window = std::move(window);
  st->right = std::move(right);
  return SymbolSequence(alphabet, std::move(st), lo);
}

int SymbolSequence::symbol_at(int64_t n) const {
  const Storage& st = *storage_;
  int64_t hi = lo_ + static_cast<int64_t>(st.window.size()) - 1;
  if (n >= lo_ && n <= hi) return st.window[static_cast<size_t>(n - lo_)];
  if (n < lo_) {
    int64_t t = lo_ - 1 - n;
    return st.left[static_cast<size_t>(t % static_cast<int64_t>(st.left.size()))];
  }
  int64_t t = n - hi - 1;
  return st.right[static_cast<size_t>(t % static_cast<int64_t>(st.right.size()))];
}

SymbolSequence SymbolSequence::shifted(int64_t m) const {
  // (f^m x)_n = x_{n+m}: the window slides to [lo-m, hi-m]; the tail rules,
  // being anchored at the window edges, slide with it unchanged.
  return SymbolSequence(alphabet_, storage_, lo_ - m);
}

SymbolSequence::Storage SymbolSequence::materialize(int64_t lo, int64_t hi) const {
  Storage out;
  out.window.reserve(static_cast<size_t>(hi - lo + 1));
  for (int64_t n = lo; n <= hi; ++n)
    out.window.push_back(static_cast<uint8_t>(symbol_at(n)));
  size_t l = storage_->left.size(), r = storage_->right.size();
  out.left.reserve(l);
  for (size_t t = 0; t < l; ++t)
    out.left.push_back(static_cast<uint8_t>(symbol_at(lo - 1 - static_cast<int64_t>(t))));
  out.right.reserve(r);
  for (size_t t = 0; t < r; ++t)
    out.right.push_back(static_cast<uint8_t>(symbol_at(hi + 1 + static_cast<int64_t>(t))));
  return out;
}

SymbolSequence SymbolSequence::with_symbol(int64_t n, int s) const {
  require(s >= 0 && s < alphabet_, ErrorCode::kInvalidArgument,
          "symbol out of range");
  int64_t lo = std::min(lo_, n);
  int64_t hi = std::max(window_hi(), n);
  auto st = std::make_shared<Storage>(materialize(lo, hi));
  const_cast<std::vector<uint8_t>&>(st->window)[static_cast<size_t>(n - lo)] =
      static_cast<uint8_t>(s);
  return SymbolSequence(alphabet_, std::move(st), lo);
}

std::optional<int64_t> SymbolSequence::first_difference(const SymbolSequence& a,
                                                        const SymbolSequence& b) {
  require(a.alphabet_ == b.alphabet_, ErrorCode::kInvalidArgument,
          "comparing sequences over different alphabets");
  // Outside both windows each sequence is periodic along the ray, so two
  // sequences that agree over one full lcm of the tail periods past the last
  // window edge agree on the whole ray.
  int64_t right_edge = std::max({a.window_hi(), b.window_hi(), int64_t(0)});
  int64_t left_edge = std::min({a.window_lo(), b.window_lo(), int64_t(0)});
  int64_t lcm_r = lcm_capped(static_cast<int64_t>(a.storage_->right.size()),
                             static_cast<int64_t>(b.storage_->right.size()));
  int64_t lcm_l = lcm_capped(static_cast<int64_t>(a.storage_->left.size()),
                             static_cast<int64_t>(b.storage_->left.size()));
  int64_t bound_r = right_edge + lcm_r;
  int64_t bound_l = -left_edge + lcm_l;
  int64_t bound = std::max(bound_r, bound_l);
  for (int64_t n = 0; n <= bound; ++n) {
    if (n <= bound_r && a.symbol_at(n) != b.symbol_at(n)) return n;
    if (n > 0 && n <= bound_l && a.symbol_at(-n) != b.symbol_at(-n)) return n;
  }
  return std::nullopt;
}

std::string SymbolSequence::to_string() const {
  std::ostringstream os;
  os << "(";
  for (auto it = storage_->left.rbegin(); it != storage_->left.rend(); ++it)
    os << static_cast<int>(*it);
  os << ")|";
  for (uint8_t s : storage_->window) os << static_cast<int>(s);
  os << "|(";
  for (uint8_t s : storage_->right) os << static_cast<int>(s);
  os << ")@" << lo_;
  return os.str();
}

std::string SymbolSequence::window_string() const {
  std::string out;
  for (uint8_t s : storage_->window) out.push_back(static_cast<char>('0' + s));
  return out;
}

std::string point_to_string(const Point& p) {
  if (std::holds_alternative<TorusPoint>(p)) {
    const auto& t = std::get<TorusPoint>(p);
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < t.dimension(); ++i) {
      if (i) os << ",";
      os << t[i];
    }
    os << ")";
    return os.str();
  }
  return std::get<SymbolSequence>(p).to_string();
}

// ---------------------------------------------------------------------------
// BaseSystem construction

BaseSystem BaseSystem::torus_automorphism(const Matrix& m, double leaf_radius,
                                          double bracket_radius,
                                          int enum_budget) {
  require(m.rows() == m.cols() && m.rows() >= 2, ErrorCode::kInvalidArgument,
          "torus matrix must be square, k >= 2");
  require(leaf_radius > 0 && bracket_radius > 0, ErrorCode::kInvalidArgument,
          "radii must be positive");
  int k = static_cast<int>(m.rows());
  BaseSystem sys;
  sys.kind_ = Kind::kTorusAutomorphism;
  sys.leaf_radius_ = leaf_radius;
  sys.bracket_radius_ = bracket_radius;
  sys.enum_budget_ = enum_budget;

  sys.m_int_.assign(k, std::vector<int64_t>(k, 0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double v = m(i, j);
      int64_t iv = llround(v);
      require(std::abs(v - static_cast<double>(iv)) < 1e-9,
              ErrorCode::kInvalidArgument, "torus matrix must be integer");
      sys.m_int_[i][j] = iv;
    }
  sys.m_ = Matrix(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) sys.m_(i, j) = static_cast<double>(sys.m_int_[i][j]);

  // |det| = 1 over the integers so the inverse is again integer.
  if (k == 2) {
    int64_t det = sys.m_int_[0][0] * sys.m_int_[1][1] -
                  sys.m_int_[0][1] * sys.m_int_[1][0];
    require(det == 1 || det == -1, ErrorCode::kInvalidArgument,
            "torus matrix must have determinant +-1");
    int64_t s = det;  // +-1
    sys.m_inv_int_ = {{s * sys.m_int_[1][1], -s * sys.m_int_[0][1]},
                      {-s * sys.m_int_[1][0], s * sys.m_int_[0][0]}};
  } else {
    double det = sys.m_.determinant();
    require(std::abs(std::abs(det) - 1.0) < 1e-9, ErrorCode::kInvalidArgument,
            "torus matrix must have determinant +-1");
    Matrix inv = sys.m_.inverse();
    sys.m_inv_int_.assign(k, std::vector<int64_t>(k, 0));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        int64_t iv = llround(inv(i, j));
        require(std::abs(inv(i, j) - static_cast<double>(iv)) < 1e-6,
                ErrorCode::kInvalidArgument, "inverse is not integer");
        sys.m_inv_int_[i][j] = iv;
      }
  }
  sys.m_inv_ = Matrix(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      sys.m_inv_(i, j) = static_cast<double>(sys.m_inv_int_[i][j]);

  // Hyperbolicity: no eigenvalue on the unit circle.
  Eigen::EigenSolver<Matrix> es(sys.m_);
  for (int i = 0; i < k; ++i) {
    double mod = std::abs(es.eigenvalues()(i));
    require(std::abs(mod - 1.0) > 1e-9, ErrorCode::kInvalidArgument,
            "matrix is not hyperbolic (eigenvalue on the unit circle)");
  }

  if (k == 2) {
    // Real spectrum in the hyperbolic 2d unimodular case.
    require(std::abs(es.eigenvalues()(0).imag()) < 1e-12 &&
                std::abs(es.eigenvalues()(1).imag()) < 1e-12,
            ErrorCode::kInvalidArgument, "expected real hyperbolic spectrum");
    int iu = std::abs(es.eigenvalues()(0).real()) > 1.0 ? 0 : 1;
    int is = 1 - iu;
    sys.lambda_u_ = es.eigenvalues()(iu).real();
    sys.lambda_s_ = es.eigenvalues()(is).real();
    auto unit_real = [&](int idx) {
      Vector v(2);
      v(0) = es.eigenvectors()(0, idx).real();
      v(1) = es.eigenvectors()(1, idx).real();
      v.normalize();
      if (v(0) < 0 || (v(0) == 0 && v(1) < 0)) v = -v;
      return v;
    };
    sys.v_u_ = unit_real(iu);
    sys.v_s_ = unit_real(is);
    Matrix basis(2, 2);
    basis.col(0) = sys.v_u_;
    basis.col(1) = sys.v_s_;
    sys.eig_cond_ = condition_number(basis);
    sys.eig_valid_ = true;
  }
  return sys;
}

BaseSystem BaseSystem::full_shift(int alphabet, double bracket_radius,
                                  int sample_window, int enum_budget) {
  require(alphabet >= 2, ErrorCode::kInvalidArgument, "alphabet must be >= 2");
  require(bracket_radius > 0, ErrorCode::kInvalidArgument,
          "bracket radius must be positive");
  require(sample_window >= 4, ErrorCode::kInvalidArgument,
          "sample window too small");
  BaseSystem sys;
  sys.kind_ = Kind::kFullShift;
  sys.alphabet_ = alphabet;
  sys.bracket_radius_ = bracket_radius;
  sys.sample_window_ = sample_window;
  sys.enum_budget_ = enum_budget;
  sys.leaf_radius_ = 48;  // maximum disagreement depth for leaf points
  return sys;
}

int BaseSystem::dimension() const {
  return is_torus() ? static_cast<int>(m_.rows()) : 1;
}

int BaseSystem::alphabet() const {
  require(!is_torus(), ErrorCode::kInvalidArgument, "not a shift system");
  return alphabet_;
}

double BaseSystem::expansion_rate() const {
  if (is_torus()) {
    require(eig_valid_, ErrorCode::kUnsupportedDimension,
            "rates implemented for the 2d torus");
    return std::abs(lambda_u_);
  }
  return 2.0;
}

double BaseSystem::contraction_rate() const {
  if (is_torus()) {
    require(eig_valid_, ErrorCode::kUnsupportedDimension,
            "rates implemented for the 2d torus");
    return std::abs(lambda_s_);
  }
  return 0.5;
}

double BaseSystem::leaf_contraction_rate() const {
  if (is_torus())
    return std::min(std::log(expansion_rate()), -std::log(contraction_rate()));
  return std::log(2.0);
}

double BaseSystem::leaf_contraction_constant() const { return 1.0; }

double BaseSystem::closing_rate() const { return leaf_contraction_rate(); }

double BaseSystem::closing_constant() const {
  if (!is_torus()) return 1.0;
  require(eig_valid_, ErrorCode::kUnsupportedDimension,
          "closing constants implemented for the 2d torus");
  double g = std::max(1.0 / (1.0 - contraction_rate()),
                      1.0 / (1.0 - 1.0 / expansion_rate()));
  return 2.0 * eig_cond_ * g;
}

const TorusPoint& BaseSystem::as_torus(const Point& p, const char* who) const {
  require(is_torus(), ErrorCode::kInvalidArgument,
          std::string(who) + ": system is not a torus automorphism");
  require(std::holds_alternative<TorusPoint>(p), ErrorCode::kInvalidArgument,
          std::string(who) + ": expected a torus point");
  const auto& t = std::get<TorusPoint>(p);
  require(t.dimension() == dimension(), ErrorCode::kInvalidArgument,
          std::string(who) + ": point dimension mismatch");
  return t;
}

const SymbolSequence& BaseSystem::as_shift(const Point& p, const char* who) const {
  require(!is_torus(), ErrorCode::kInvalidArgument,
          std::string(who) + ": system is not a shift");
  require(std::holds_alternative<SymbolSequence>(p), ErrorCode::kInvalidArgument,
          std::string(who) + ": expected a symbol sequence");
  const auto& s = std::get<SymbolSequence>(p);
  require(s.alphabet() == alphabet_, ErrorCode::kInvalidArgument,
          std::string(who) + ": alphabet mismatch");
  return s;
}

void BaseSystem::require_torus_2d(const char* who) const {
  require(is_torus() && eig_valid_, ErrorCode::kUnsupportedDimension,
          std::string(who) + " is implemented for the 2d torus testbed");
}

// ---------------------------------------------------------------------------
// Dynamics

Point BaseSystem::iterate_torus(const TorusPoint& x, int64_t n) const {
  // Coordinates are snapped to the dyadic grid m / 2^53 (a <= 6e-17 move;
  // measure samples are exactly on it already) and iterated in exact integer
  // arithmetic mod 2^53. The map becomes an exact bijection of the grid, so
  // the group law f^{a+b} = f^a f^b holds bit-for-bit, forward and backward.
  constexpr int64_t kGrid = int64_t(1) << 53;
  int k = static_cast<int>(x.coords().size());
  std::vector<int64_t> num(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    int64_t v = llround(x.coords()(i) * static_cast<double>(kGrid));
    num[static_cast<size_t>(i)] = (v >= kGrid) ? 0 : v;
  }
  const auto& step = n >= 0 ? m_int_ : m_inv_int_;
  int64_t count = std::llabs(n);
  std::vector<int64_t> next(static_cast<size_t>(k));
  for (int64_t it = 0; it < count; ++it) {
    for (int i = 0; i < k; ++i) {
      i128 acc = 0;
      for (int j = 0; j < k; ++j)
        acc += i128(step[static_cast<size_t>(i)][static_cast<size_t>(j)]) *
               num[static_cast<size_t>(j)];
      i128 r = acc % kGrid;
      if (r < 0) r += kGrid;
      next[static_cast<size_t>(i)] = static_cast<int64_t>(r);
    }
    num.swap(next);
  }
  Vector out(k);
  for (int i = 0; i < k; ++i)
    out(i) = static_cast<double>(num[static_cast<size_t>(i)]) * 0x1.0p-53;
  return TorusPoint(out);
}

Point BaseSystem::iterate(const Point& x, int64_t n) const {
  if (is_torus()) return iterate_torus(as_torus(x, "iterate"), n);
  return as_shift(x, "iterate").shifted(n);
}

double BaseSystem::distance(const Point& a, const Point& b) const {
  if (is_torus()) {
    const auto& ta = as_torus(a, "distance");
    const auto& tb = as_torus(b, "distance");
    double acc = 0;
    for (int i = 0; i < ta.dimension(); ++i) {
      double d = wrap_half(ta[i] - tb[i]);
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  const auto& sa = as_shift(a, "distance");
  const auto& sb = as_shift(b, "distance");
  auto diff = SymbolSequence::first_difference(sa, sb);
  if (!diff) return 0.0;
  if (*diff > 1074) return 0.0;
  return std::ldexp(1.0, -static_cast<int>(*diff));
}

std::vector<PeriodicOrbit> BaseSystem::enumerate_periodic(int64_t n) const {
  require(n >= 1, ErrorCode::kInvalidArgument, "period must be positive");
  require(n <= enum_budget_, ErrorCode::kBudgetExceeded,
          "period " + std::to_string(n) + " exceeds enumeration budget " +
              std::to_string(enum_budget_));
  std::vector<PeriodicOrbit> out;
  if (is_torus()) {
    require_torus_2d("enumerate_periodic");
    auto mn = int_power_2x2(m_int_, n);
    int64_t b00 = mn[0][0] - 1, b01 = mn[0][1];
    int64_t b10 = mn[1][0], b11 = mn[1][1] - 1;
    i128 det = i128(b00) * b11 - i128(b01) * b10;
    if (det == 0)
      fail(ErrorCode::kSingularLattice,
           "M^n - I singular; the matrix is not hyperbolic");
    int64_t dabs = static_cast<int64_t>(det < 0 ? -det : det);
    int s = det < 0 ? -1 : 1;
    // adj(B) with B = M^n - I
    i128 adj00 = b11, adj01 = -b01, adj10 = -b10, adj11 = b00;

    // x in [0,1)^2 <=> m = Bx has s*(adj m)_i in [0, |det|) for i = 0,1.
    // Scan m0 over the integer range of the image parallelogram, solve the
    // two inequalities for m1. Everything in exact integer arithmetic.
    int64_t m0_lo = std::min<int64_t>({0, b00, b01, b00 + b01});
    int64_t m0_hi = std::max<int64_t>({0, b00, b01, b00 + b01});
    for (int64_t m0 = m0_lo; m0 <= m0_hi; ++m0) {
      int64_t lo = std::numeric_limits<int64_t>::min() / 4;
      int64_t hi = std::numeric_limits<int64_t>::max() / 4;
      bool empty = false;
      auto clamp_constraint = [&](i128 a, i128 b) {
        // need 0 <= a*m1 + b <= dabs-1
        if (a == 0) {
          if (b < 0 || b > dabs - 1) empty = true;
          return;
        }
        int64_t l, h;
        if (a > 0) {
          l = ceil_div(-b, a);
          h = floor_div(i128(dabs - 1) - b, a);
        } else {
          l = ceil_div(i128(dabs - 1) - b, a);
          h = floor_div(-b, a);
        }
        lo = std::max(lo, l);
        hi = std::min(hi, h);
      };
      clamp_constraint(i128(s) * adj01, i128(s) * adj00 * m0);
      clamp_constraint(i128(s) * adj11, i128(s) * adj10 * m0);
      if (empty || lo > hi) continue;
      for (int64_t m1 = lo; m1 <= hi; ++m1) {
        i128 c0 = i128(s) * (adj00 * m0 + adj01 * m1);
        i128 c1 = i128(s) * (adj10 * m0 + adj11 * m1);
        if (c0 < 0 || c0 >= dabs || c1 < 0 || c1 >= dabs) continue;
        PeriodicOrbit orbit;
        orbit.numerators = {static_cast<int64_t>(c0), static_cast<int64_t>(c1)};
        orbit.denominator = dabs;
        Vector coords(2);
        coords(0) = static_cast<double>(orbit.numerators[0]) / static_cast<double>(dabs);
        coords(1) = static_cast<double>(orbit.numerators[1]) / static_cast<double>(dabs);
        orbit.base_point = TorusPoint(coords);
        orbit.period = n;
        out.push_back(std::move(orbit));
      }
    }
    if (static_cast<int64_t>(out.size()) != dabs)
      fail(ErrorCode::kSingularLattice,
           "lattice enumeration mismatch: got " + std::to_string(out.size()) +
               ", expected " + std::to_string(dabs));
    std::sort(out.begin(), out.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
      return a.numerators < b.numerators;
    });
    return out;
  }

  // Full shift: every word of length n extended periodically.
  double count_d = std::pow(static_cast<double>(alphabet_), static_cast<double>(n));
  require(count_d <= 2.0e6, ErrorCode::kBudgetExceeded,
          "k^n exceeds the enumeration budget");
  int64_t count = static_cast<int64_t>(llround(count_d));
  out.reserve(static_cast<size_t>(count));
  std::vector<uint8_t> word(static_cast<size_t>(n), 0);
  for (int64_t code = 0; code < count; ++code) {
    int64_t c = code;
    for (int64_t i = n - 1; i >= 0; --i) {
      word[static_cast<size_t>(i)] = static_cast<uint8_t>(c % alphabet_);
      c /= alphabet_;
    }
    PeriodicOrbit orbit;
    orbit.base_point = SymbolSequence::periodic_word(alphabet_, word);
    orbit.period = n;
    out.push_back(std::move(orbit));
  }
  return out;
}

std::vector<int64_t> BaseSystem::iterate_numerators(
    const std::vector<int64_t>& nums, int64_t den) const {
  require(is_torus(), ErrorCode::kInvalidArgument,
          "iterate_numerators: torus systems only");
  require(static_cast<int>(nums.size()) == dimension() && den > 0,
          ErrorCode::kInvalidArgument, "iterate_numerators: bad rational point");
  std::vector<int64_t> out(nums.size(), 0);
  for (size_t i = 0; i < nums.size(); ++i) {
    i128 acc = 0;
    for (size_t j = 0; j < nums.size(); ++j)
      acc += i128(m_int_[i][j]) * nums[j];
    i128 r = acc % den;
    if (r < 0) r += den;
    out[i] = static_cast<int64_t>(r);
  }
  return out;
}

ShadowResult BaseSystem::shadow(const Point& y, int64_t n, double h) const {
  require(n >= 1, ErrorCode::kInvalidArgument, "period must be positive");
  require(h > 0, ErrorCode::kInvalidArgument, "closeness scale must be positive");
  double beta = closing_beta(h);
  ShadowResult res;
  res.period = n;
  res.h = h;
  res.bound_constant = closing_constant();
  res.rate = closing_rate();

  if (is_torus()) {
    require_torus_2d("shadow");
    const auto& ty = as_torus(y, "shadow");
    require(n <= 100000, ErrorCode::kBudgetExceeded, "shadow period too large");

    // Orbit endpoint gap s with f^n(y) = y + s (mod Z^2), |s_i| <= 1/2.
    Point endp = iterate_torus(ty, n);
    const auto& te = std::get<TorusPoint>(endp);
    Vector s(2);
    for (int i = 0; i < 2; ++i) s(i) = wrap_half(te[i] - ty[i]);
    double gap = s.norm();
    require(gap < beta, ErrorCode::kNotRecurrent,
            "d(f^n(y), y) = " + std::to_string(gap) + " is not below beta(h) = " +
                std::to_string(beta));

    // Decompose s in the eigenbasis and close up the orbit: the deviation
    // e = p - y solves (M^n - I)e = -s, so e_u = -s_u/(lam_u^n - 1) and
    // e_s = -s_s/(lam_s^n - 1). Deviation dynamics of a linear automorphism
    // is exactly linear, so per-step distances come from the closed form.
    Matrix basis(2, 2);
    basis.col(0) = v_u_;
    basis.col(1) = v_s_;
    Vector comps = basis.partialPivLu().solve(s);
    double su = comps(0), ss = comps(1);

    double log_lu = std::log(std::abs(lambda_u_));
    double log_ls = std::log(std::abs(lambda_s_));
    int sign_u = lambda_u_ < 0 ? -1 : 1;
    int sign_s = lambda_s_ < 0 ? -1 : 1;

    double pow_u_n = stable_pow(log_lu, sign_u, n);  // may be +-inf
    double pow_s_n = stable_pow(log_ls, sign_s, n);  // -> 0 for large n
    double eu = std::isinf(pow_u_n) ? 0.0 : -su / (pow_u_n - 1.0);
    double es = -ss / (pow_s_n - 1.0);

    // Periodic point. Exact integer lattice solve while M^n fits in int64;
    // closed-form closure beyond that.
    Vector e0 = eu * v_u_ + es * v_s_;
    TorusPoint p;
    bool exact = false;
    try {
      auto mn = int_power_2x2(m_int_, n);
      int64_t b00 = mn[0][0] - 1, b01 = mn[0][1];
      int64_t b10 = mn[1][0], b11 = mn[1][1] - 1;
      i128 det = i128(b00) * b11 - i128(b01) * b10;
      if (det == 0) fail(ErrorCode::kSingularLattice, "M^n - I singular");
      // r = (M^n - I) y~ - s, rounded to the nearest integer vector.
      Vector w(2);
      w(0) = b00 * ty[0] + b01 * ty[1] - s(0);
      w(1) = b10 * ty[0] + b11 * ty[1] - s(1);
      i128 r0 = static_cast<int64_t>(llround(w(0)));
      i128 r1 = static_cast<int64_t>(llround(w(1)));
      i128 p0 = i128(b11) * r0 - i128(b01) * r1;
      i128 p1 = -i128(b10) * r0 + i128(b00) * r1;
      auto wrap_frac = [&](i128 num) {
        i128 m = num % det;
        if ((m < 0 && det > 0) || (m > 0 && det < 0)) m += det;
        return static_cast<double>(static_cast<long double>(m) /
                                   static_cast<long double>(det));
      };
      Vector coords(2);
      coords(0) = wrap_frac(p0);
      coords(1) = wrap_frac(p1);
      p = TorusPoint(coords);
      exact = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBudgetExceeded) throw;
      Vector coords(2);
      coords(0) = ty[0] + e0(0);
      coords(1) = ty[1] + e0(1);
      p = TorusPoint(coords);
    }
    res.periodic_point = p;
    res.exact_lattice = exact;

    // Distances from the actual returned p: components of p - y in the
    // eigenbasis, pushed by the exact linear deviation dynamics.
    Vector d0(2);
    for (int i = 0; i < 2; ++i) d0(i) = wrap_half(p[i] - ty[i]);
    Vector c = basis.partialPivLu().solve(d0);
    double cu = c(0), cs = c(1);
    double log_cu = std::log(std::abs(cu));
    double log_cs = std::log(std::abs(cs));
    res.per_step_distances.resize(static_cast<size_t>(n) + 1);
    for (int64_t i = 0; i <= n; ++i) {
      double mu = 0.0, ms = 0.0;
      if (cu != 0.0) {
        double lg = log_cu + static_cast<double>(i) * log_lu;
        mu = lg < -745.0 ? 0.0 : std::exp(lg);
        if ((sign_u < 0 && (i % 2 != 0)) != (cu < 0)) mu = -mu;
      }
      if (cs != 0.0) {
        double lg = log_cs + static_cast<double>(i) * log_ls;
        ms = lg < -745.0 ? 0.0 : std::exp(lg);
        if ((sign_s < 0 && (i % 2 != 0)) != (cs < 0)) ms = -ms;
      }
      Vector dev = mu * v_u_ + ms * v_s_;
      // This is a lift deviation; the torus distance is at most its norm and
      // equals it once below 1/2.
      res.per_step_distances[static_cast<size_t>(i)] = dev.norm();
    }
  } else {
    const auto& sy = as_shift(y, "shadow");
    require(n <= 4096, ErrorCode::kBudgetExceeded, "shadow period too large");
    double gap = distance(y, iterate(y, n));
    require(gap < beta, ErrorCode::kNotRecurrent,
            "d(f^n(y), y) = " + std::to_string(gap) +
                " is not below beta(h) = " + std::to_string(beta));
    std::vector<uint8_t> word;
    word.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
      word.push_back(static_cast<uint8_t>(sy.symbol_at(i)));
    SymbolSequence p = SymbolSequence::periodic_word(alphabet_, word);
    res.periodic_point = p;
    res.exact_lattice = true;
    res.per_step_distances.resize(static_cast<size_t>(n) + 1);
    for (int64_t i = 0; i <= n; ++i)
      res.per_step_distances[static_cast<size_t>(i)] =
          distance(sy.shifted(i), p.shifted(i));
  }

  // Bound check and fitted decay rate.
  res.bound_satisfied = true;
  for (int64_t i = 0; i <= n; ++i) {
    double lim = h * res.bound_constant *
                 std::exp(-res.rate * static_cast<double>(std::min(i, n - i)));
    if (res.per_step_distances[static_cast<size_t>(i)] > lim * (1.0 + 1e-9)) {
      res.bound_satisfied = false;
      break;
    }
  }
  std::vector<double> xs, ys;
  for (int64_t i = 0; i <= n; ++i) {
    double d = res.per_step_distances[static_cast<size_t>(i)];
    if (d > 1e-14) {
      xs.push_back(static_cast<double>(std::min(i, n - i)));
      ys.push_back(std::log(d));
    }
  }
  if (xs.size() >= 6) {
    double xmin = *std::min_element(xs.begin(), xs.end());
    double xmax = *std::max_element(xs.begin(), xs.end());
    if (xmax - xmin >= 3.0) {
      LineFit fit = fit_line(xs, ys);
      res.fitted_eta = -fit.slope;
    }
  }
  return res;
}

Point BaseSystem::local_stable_point(const Point& x, double s) const {
  if (is_torus()) {
    require_torus_2d("local_stable_point");
    const auto& tx = as_torus(x, "local_stable_point");
    require(std::abs(s) <= leaf_radius_ + 1e-15, ErrorCode::kLeafRadiusExceeded,
            "leaf parameter exceeds the leaf radius");
    return TorusPoint(Vector(tx.coords() + s * v_s_));
  }
  const auto& sx = as_shift(x, "local_stable_point");
  if (s == 0.0) return sx;
  double mag = std::abs(s);
  int64_t depth = llround(mag);
  require(std::abs(mag - static_cast<double>(depth)) < 1e-9 && depth >= 1,
          ErrorCode::kInvalidArgument,
          "shift leaf parameter must be an integer disagreement depth");
  require(depth <= static_cast<int64_t>(leaf_radius_),
          ErrorCode::kLeafRadiusExceeded, "disagreement depth too large");
  int sym = sx.symbol_at(-depth);
  return sx.with_symbol(-depth, (sym + 1) % alphabet_);
}

Point BaseSystem::local_unstable_point(const Point& x, double s) const {
  if (is_torus()) {
    require_torus_2d("local_unstable_point");
    const auto& tx = as_torus(x, "local_unstable_point");
    require(std::abs(s) <= leaf_radius_ + 1e-15, ErrorCode::kLeafRadiusExceeded,
            "leaf parameter exceeds the leaf radius");
    return TorusPoint(Vector(tx.coords() + s * v_u_));
  }
  const auto& sx = as_shift(x, "local_unstable_point");
  if (s == 0.0) return sx;
  double mag = std::abs(s);
  int64_t depth = llround(mag);
  require(std::abs(mag - static_cast<double>(depth)) < 1e-9 && depth >= 1,
          ErrorCode::kInvalidArgument,
          "shift leaf parameter must be an integer disagreement depth");
  require(depth <= static_cast<int64_t>(leaf_radius_),
          ErrorCode::kLeafRadiusExceeded, "disagreement depth too large");
  int sym = sx.symbol_at(depth);
  return sx.with_symbol(depth, (sym + 1) % alphabet_);
}

Point BaseSystem::bracket(const Point& z, const Point& w) const {
  double d = distance(z, w);
  require(d < bracket_radius_, ErrorCode::kPointsTooFar,
          "bracket requires distance < " + std::to_string(bracket_radius_) +
              ", got " + std::to_string(d));
  if (is_torus()) {
    require_torus_2d("bracket");
    const auto& tz = as_torus(z, "bracket");
    const auto& tw = as_torus(w, "bracket");
    // Solve z + a v_s = w + b v_u in the lift nearest to z.
    Vector delta(2);
    for (int i = 0; i < 2; ++i) delta(i) = wrap_half(tw[i] - tz[i]);
    Matrix lhs(2, 2);
    lhs.col(0) = v_s_;
    lhs.col(1) = -v_u_;
    Vector ab = lhs.partialPivLu().solve(delta);
    require(std::abs(ab(0)) <= leaf_radius_ * (1.0 + 1e-9) &&
                std::abs(ab(1)) <= leaf_radius_ * (1.0 + 1e-9),
            ErrorCode::kPointsTooFar,
            "bracket solution leaves the local leaves");
    return TorusPoint(Vector(tz.coords() + ab(0) * v_s_));
  }
  const auto& sz = as_shift(z, "bracket");
  const auto& sw = as_shift(w, "bracket");
  // Coordinates n >= 0 from z, n < 0 from w; tails inherited accordingly.
  int64_t lo = std::min<int64_t>(sw.window_lo(), -1);
  int64_t hi = std::max<int64_t>(sz.window_hi(), 0);
  std::vector<uint8_t> window;
  window.reserve(static_cast<size_t>(hi - lo + 1));
  for (int64_t nn = lo; nn <= hi; ++nn)
    window.push_back(static_cast<uint8_t>(nn >= 0 ? sz.symbol_at(nn)
                                                  : sw.symbol_at(nn)));
  // Below lo (<= w's window edge) the donor w is purely in its left tail, so
  // the splice inherits w's left period, re-anchored at lo. Same on the right
  // with z. Reading the symbols through symbol_at handles the phase rotation.
  std::vector<uint8_t> left, right;
  for (int64_t t = 0; t < sw.left_period_length(); ++t)
    left.push_back(static_cast<uint8_t>(sw.symbol_at(lo - 1 - t)));
  for (int64_t t = 0; t < sz.right_period_length(); ++t)
    right.push_back(static_cast<uint8_t>(sz.symbol_at(hi + 1 + t)));
  return SymbolSequence::from_parts(alphabet_, std::move(left), std::move(window),
                                    std::move(right), lo);
}

std::vector<Point> BaseSystem::sample_measure(uint64_t seed, int64_t count) const {
  require(count >= 1, ErrorCode::kInvalidArgument, "count must be >= 1");
  SeededRng rng(seed);
  std::vector<Point> out;
  out.reserve(static_cast<size_t>(count));
  if (is_torus()) {
    int k = dimension();
    for (int64_t i = 0; i < count; ++i) {
      Vector v(k);
      for (int j = 0; j < k; ++j) v(j) = rng.uniform01();
      out.emplace_back(TorusPoint(v));
    }
    return out;
  }
  for (int64_t i = 0; i < count; ++i) {
    std::vector<uint8_t> window(static_cast<size_t>(2 * sample_window_ + 1));
    for (auto& sym : window)
      sym = static_cast<uint8_t>(rng.below(static_cast<uint64_t>(alphabet_)));
    std::vector<uint8_t> left = {
        static_cast<uint8_t>(rng.below(static_cast<uint64_t>(alphabet_)))};
    std::vector<uint8_t> right = {
        static_cast<uint8_t>(rng.below(static_cast<uint64_t>(alphabet_)))};
    out.emplace_back(SymbolSequence::from_parts(alphabet_, std::move(left),
                                                std::move(window), std::move(right),
                                                -sample_window_));
  }
  return out;
}

const Matrix& BaseSystem::torus_matrix() const {
  require(is_torus(), ErrorCode::kInvalidArgument, "not a torus system");
  return m_;
}

Vector BaseSystem::stable_direction() const {
  require_torus_2d("stable_direction");
  return v_s_;
}

Vector BaseSystem::unstable_direction() const {
  require_torus_2d("unstable_direction");
  return v_u_;
}

double BaseSystem::stable_eigenvalue() const {
  require_torus_2d("stable_eigenvalue");
  return lambda_s_;
}

double BaseSystem::unstable_eigenvalue() const {
  require_torus_2d("unstable_eigenvalue");
  return lambda_u_;
}

std::string BaseSystem::describe() const {
  std::ostringstream os;
  if (is_torus()) {
    os << "torus_automorphism k=" << dimension();
    if (eig_valid_)
      os << " lambda_u=" << lambda_u_ << " lambda_s=" << lambda_s_;
  } else {
    os << "full_shift k=" << alphabet_;
  }
  return os.str();
}

}  // namespace cocyclelab
