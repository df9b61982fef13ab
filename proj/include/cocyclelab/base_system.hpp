#pragma once

#include "cocyclelab/common.hpp"

#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace cocyclelab {

/// Point on the k-torus, every coordinate reduced into [0,1).
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(Vector coords);
  TorusPoint(std::initializer_list<double> coords);

  int dimension() const { return static_cast<int>(coords_.size()); }
  const Vector& coords() const { return coords_; }
  double operator[](int i) const { return coords_(i); }

 private:
  Vector coords_;
};

/// Bi-infinite symbol sequence, represented exactly: an explicit window of
/// symbols covering coordinates [lo, hi] plus eventually periodic tails on
/// both sides. The left tail is anchored at the window edge: coordinate
/// n < lo holds left[(lo-1-n) mod L], read outward; symmetrically on the
/// right. Shifting is O(1) (the window slides, the tail phases slide with
/// it), so long orbits of the shift map cost nothing and lose nothing.
class SymbolSequence {
 public:
  SymbolSequence() = default;

  /// Bi-infinite repetition of `word`, window covering [0, word.size()-1].
  static SymbolSequence periodic_word(int alphabet,
                                      const std::vector<uint8_t>& word);

  static SymbolSequence from_parts(int alphabet, std::vector<uint8_t> left,
                                   std::vector<uint8_t> window,
                                   std::vector<uint8_t> right, int64_t lo = 0);

  int alphabet() const { return alphabet_; }
  int64_t window_lo() const { return lo_; }
  int64_t window_hi() const { return lo_ + static_cast<int64_t>(storage_->window.size()) - 1; }
  int64_t left_period_length() const { return static_cast<int64_t>(storage_->left.size()); }
  int64_t right_period_length() const { return static_cast<int64_t>(storage_->right.size()); }

  int symbol_at(int64_t n) const;

  /// The image under the m-th power of the left shift: (f^m x)_n = x_{n+m}.
  SymbolSequence shifted(int64_t m) const;

  /// Copy with coordinate n set to s (window widened as needed).
  SymbolSequence with_symbol(int64_t n, int s) const;

  /// Smallest |n| with a_n != b_n, or nullopt when the sequences are equal.
  /// Exact: beyond the windows both sequences are periodic, so agreement on
  /// one full lcm of the tail periods decides agreement of the whole ray.
  static std::optional<int64_t> first_difference(const SymbolSequence& a,
                                                 const SymbolSequence& b);

  bool same_sequence(const SymbolSequence& other) const {
    return !first_difference(*this, other).has_value();
  }

  /// "(left)|window|(right)@lo" with the window spelled as symbol digits.
  std::string to_string() const;

  /// The window contents only (used for periodic-orbit labels).
  std::string window_string() const;

 private:
  struct Storage {
    std::vector<uint8_t> left;    // period word of the left tail
    std::vector<uint8_t> window;  // explicit symbols, coordinates [lo, hi]
    std::vector<uint8_t> right;   // period word of the right tail
  };

  SymbolSequence(int alphabet, std::shared_ptr<const Storage> storage, int64_t lo)
      : alphabet_(alphabet), storage_(std::move(storage)), lo_(lo) {}

  /// Plain storage with the window widened to cover [lo, hi] and the tail
  /// phases rotated so the represented sequence is unchanged.
  Storage materialize(int64_t lo, int64_t hi) const;

  int alphabet_ = 2;
  std::shared_ptr<const Storage> storage_;
  int64_t lo_ = 0;
};

using Point = std::variant<TorusPoint, SymbolSequence>;

std::string point_to_string(const Point& p);

struct PeriodicOrbit {
  Point base_point;
  int64_t period = 1;
  // Exact rational coordinates on the torus (coords = numerators/denominator),
  // denominator 0 when not rational-backed (shift orbits are exact as words).
  std::vector<int64_t> numerators;
  int64_t denominator = 0;
};

struct ShadowResult {
  Point periodic_point;
  int64_t period = 0;
  double bound_constant = 0;  // published C
  double rate = 0;            // published eta
  double h = 0;               // requested closeness scale
  std::vector<double> per_step_distances;  // length period+1
  bool exact_lattice = false;  // torus: p obtained by the exact integer solve
  bool bound_satisfied = false;
  // OLS decay rate of log d_i against min(i, n-i); NaN when degenerate.
  double fitted_eta = std::numeric_limits<double>::quiet_NaN();
};

/// One of the two concrete uniformly hyperbolic testbeds: a hyperbolic toral
/// automorphism with Lebesgue measure, or the full shift on k symbols with
/// the uniform Bernoulli measure. Immutable after construction; all
/// operations are pure.
class BaseSystem {
 public:
  enum class Kind { kTorusAutomorphism, kFullShift };

  /// m must be an integer matrix with |det| = 1 and no eigenvalue on the unit
  /// circle. Lattice, leaf and bracket operations are implemented for the
  /// canonical 2-dimensional case.
  static BaseSystem torus_automorphism(const Matrix& m,
                                       double leaf_radius = 0.05,
                                       double bracket_radius = 0.05,
                                       int enum_budget = 14);

  static BaseSystem full_shift(int alphabet, double bracket_radius = 0.75,
                               int sample_window = 4096, int enum_budget = 14);

  Kind kind() const { return kind_; }
  bool is_torus() const { return kind_ == Kind::kTorusAutomorphism; }
  int dimension() const;  // torus: k, shift: conceptual dimension 1 per symbol slot
  int alphabet() const;
  double leaf_radius() const { return leaf_radius_; }
  double bracket_radius() const { return bracket_radius_; }
  int enum_budget() const { return enum_budget_; }
  int sample_window() const { return sample_window_; }

  // Published hyperbolicity data (uniform on these testbeds).
  double expansion_rate() const;         // lambda_u (torus), 2 (shift metric)
  double contraction_rate() const;       // |lambda_s| (torus), 1/2 (shift)
  double leaf_contraction_rate() const;  // tau
  double leaf_contraction_constant() const;  // C_x <= C
  double closing_rate() const;               // eta of the closing lemma
  double closing_constant() const;           // C of the closing lemma
  double closing_beta(double h) const { return h / (2.0 * closing_constant()); }

  Point iterate(const Point& x, int64_t n) const;
  double distance(const Point& a, const Point& b) const;

  /// All points of Fix(f^n). Torus: exact integer-lattice enumeration of
  /// (M^n - I)x in Z^2, count |det(M^n - I)|. Shift: the k^n periodic words.
  std::vector<PeriodicOrbit> enumerate_periodic(int64_t n) const;

  /// Closing lemma realized constructively. Requires d(f^n(y), y) < beta(h).
  ShadowResult shadow(const Point& y, int64_t n, double h) const;

  /// Point on W^s_loc(x) at leaf parameter s. Torus: arclength along the
  /// stable eigendirection, |s| <= leaf_radius. Shift: s is an integer
  /// disagreement depth >= 1; the symbol at coordinate -s is altered.
  Point local_stable_point(const Point& x, double s) const;
  Point local_unstable_point(const Point& x, double s) const;

  /// The unique point of W^s_loc(z) cap W^u_loc(w); requires
  /// distance(z, w) < bracket_radius.
  Point bracket(const Point& z, const Point& w) const;

  /// i.i.d. samples from the invariant measure (Lebesgue / Bernoulli),
  /// deterministic in the seed.
  std::vector<Point> sample_measure(uint64_t seed, int64_t count) const;

  // Torus-only accessors (2d).
  const Matrix& torus_matrix() const;
  Vector stable_direction() const;
  Vector unstable_direction() const;
  double stable_eigenvalue() const;
  double unstable_eigenvalue() const;

  /// One exact step of a rational lattice point: num' = M num (mod den).
  /// Keeps periodic-orbit iteration exact in the audits.
  std::vector<int64_t> iterate_numerators(const std::vector<int64_t>& nums,
                                          int64_t den) const;

  std::string describe() const;

 private:
  BaseSystem() = default;

  const TorusPoint& as_torus(const Point& p, const char* who) const;
  const SymbolSequence& as_shift(const Point& p, const char* who) const;
  void require_torus_2d(const char* who) const;

  Point iterate_torus(const TorusPoint& x, int64_t n) const;

  Kind kind_ = Kind::kTorusAutomorphism;
  double leaf_radius_ = 0.05;
  double bracket_radius_ = 0.05;
  int enum_budget_ = 14;
  int sample_window_ = 4096;

  // Torus data.
  Matrix m_;      // the integer matrix, stored as doubles
  Matrix m_inv_;  // exact integer inverse (|det| = 1)
  std::vector<std::vector<int64_t>> m_int_, m_inv_int_;
  double lambda_u_ = 0, lambda_s_ = 0;  // signed eigenvalues (2d case)
  Vector v_u_, v_s_;                    // unit eigenvectors (2d case)
  double eig_cond_ = 1;                 // condition number of [v_u v_s]
  bool eig_valid_ = false;

  // Shift data.
  int alphabet_ = 2;
};

}  // namespace cocyclelab
