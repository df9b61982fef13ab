#pragma once

#include "cocyclelab/base_system.hpp"
#include "cocyclelab/common.hpp"

#include <map>
#include <memory>
#include <vector>

namespace cocyclelab {

/// Closed-form invertible transfer maps used to generate coboundary cocycles
/// and to serve as oracles for them. Rotation-valued angle fields on the
/// torus, cylinder-constant matrices on the shift.
class GroundTruthTransfer {
 public:
  struct TrigTerm {
    std::vector<int64_t> freq;  // integer frequency vector
    double amplitude = 0;
    double phase = 0;
  };

  /// P(x) = R(theta(x)), theta(x) = sum_t amp_t cos(2 pi <freq_t, x> + phase_t).
  static GroundTruthTransfer rotation_field(std::vector<TrigTerm> terms,
                                            double holder_alpha);

  /// Lacunary angle field sum_j c b^{-j a} cos(2 pi b^j x_0 + phi_j): a
  /// uniform a-Hoelder modulus at every scale above b^{-levels}.
  static GroundTruthTransfer rotation_lacunary(int levels, double amplitude,
                                               double holder_alpha, int base,
                                               uint64_t phase_seed);

  /// P(x) determined by the symbols x_{-depth..depth}; table indexed by the
  /// word code sum_i s_i k^i, least significant at coordinate -depth.
  static GroundTruthTransfer cylinder(int alphabet, int depth,
                                      std::vector<Matrix> table,
                                      double holder_alpha);

  Matrix evaluate(const Point& x) const;
  Matrix evaluate_inverse(const Point& x) const;
  double bound() const { return bound_; }  // sup of ||P|| and ||P^{-1}||
  double holder_alpha() const { return holder_alpha_; }
  int dimension() const { return dimension_; }
  bool is_rotation() const { return kind_ == Kind::kRotation; }
  double angle(const TorusPoint& x) const;

 private:
  enum class Kind { kRotation, kCylinder };
  Kind kind_ = Kind::kRotation;
  int dimension_ = 2;
  double holder_alpha_ = 1.0;
  double bound_ = 1.0;
  std::vector<TrigTerm> terms_;
  int alphabet_ = 2;
  int depth_ = 0;
  std::vector<Matrix> table_;
  std::vector<Matrix> table_inv_;

  int64_t word_code(const SymbolSequence& s) const;
};

/// Overflow-safe carrier of a long matrix product: the represented matrix is
/// exp(log_scale) * Q * R with Q orthogonal and R upper triangular with
/// positive diagonal, re-orthonormalized as factors are applied.
class ScaledProduct {
 public:
  static ScaledProduct identity(int d);
  static ScaledProduct from_matrix(const Matrix& b);

  /// product <- b * product.
  void apply_left(const Matrix& b);

  int dimension() const { return static_cast<int>(q_.rows()); }
  const Matrix& q() const { return q_; }
  const Matrix& r() const { return r_; }
  double log_scale() const { return log_scale_; }

  Matrix to_matrix() const { return std::exp(log_scale_) * q_ * r_; }
  /// Q * R without the scalar (same matrix up to the positive factor).
  Matrix unit_matrix() const { return q_ * r_; }

  /// this * base^{-1}, assembled through triangular solves.
  Matrix rel_to(const ScaledProduct& base) const;
  /// this^{-1} * other.
  Matrix left_quotient(const ScaledProduct& other) const;

  double log_norm() const;          // log ||represented||
  double log_norm_inverse() const;  // log ||represented^{-1}||
  double norm() const { return std::exp(log_norm()); }

 private:
  Matrix q_, r_;
  double log_scale_ = 0;

  void renormalize();
};

/// A Hoelder map from phase space into GL(d,R). Immutable; evaluations are
/// pure and condition-checked.
class CocycleMap {
 public:
  enum class Variant { kConstant, kCoboundary, kLocallyConstant, kTorusSmooth };

  static CocycleMap constant(const Matrix& a0, double alpha = 1.0);
  static CocycleMap coboundary(GroundTruthTransfer p_true,
                               std::shared_ptr<const BaseSystem> base);
  static CocycleMap locally_constant(int alphabet, int depth,
                                     std::vector<Matrix> table,
                                     double alpha = 1.0);
  struct SmoothTerm {
    std::vector<int64_t> freq;
    double phase = 0;
    Matrix coeff;
  };
  static CocycleMap torus_smooth(const Matrix& constant_term,
                                 std::vector<SmoothTerm> terms,
                                 double alpha = 1.0);

  Variant variant() const { return variant_; }
  int dimension() const { return dimension_; }
  double holder_alpha() const { return holder_alpha_; }
  double condition_bound() const { return condition_bound_; }
  void set_condition_bound(double b) { condition_bound_ = b; }

  Matrix evaluate(const Point& x) const;
  Matrix evaluate_inverse(const Point& x) const;

  /// Ground truth of the coboundary variant, nullptr otherwise.
  const GroundTruthTransfer* ground_truth() const {
    return variant_ == Variant::kCoboundary ? &truth_ : nullptr;
  }

 private:
  friend class OrbitEvaluator;

  Variant variant_ = Variant::kConstant;
  int dimension_ = 2;
  double holder_alpha_ = 1.0;
  double condition_bound_ = 1e8;

  Matrix constant_, constant_inv_;
  GroundTruthTransfer truth_;
  std::shared_ptr<const BaseSystem> base_;
  int alphabet_ = 2;
  int depth_ = 0;
  std::vector<Matrix> table_, table_inv_;
  Matrix smooth_constant_;
  std::vector<SmoothTerm> smooth_terms_;

  Matrix evaluate_raw(const Point& x) const;
  void check_condition(const Matrix& m) const;
};

/// Streams A(f^j x) (forward) or A(f^{-j-1} x)^{-1} (backward) along an
/// orbit, reusing whatever the variant allows (the coboundary variant shares
/// one transfer evaluation between consecutive steps).
class OrbitEvaluator {
 public:
  OrbitEvaluator(const CocycleMap& a, const BaseSystem& sys, Point x,
                 bool backward = false);

  /// The next factor of the product, advancing the orbit cursor.
  const Matrix& next();
  const Point& position() const { return x_; }

 private:
  const CocycleMap& a_;
  const BaseSystem& sys_;
  Point x_;
  bool backward_;
  Matrix current_;
  Matrix p_here_;  // coboundary fast path
  bool has_p_ = false;
};

/// A^n(x) as a ScaledProduct, n of either sign. reorth_interval controls how
/// many plain multiplications happen between QR re-orthonormalizations.
ScaledProduct cocycle_product(const CocycleMap& a, const BaseSystem& sys,
                              const Point& x, int64_t n,
                              int64_t budget = 10000000,
                              int reorth_interval = 1);

}  // namespace cocyclelab
