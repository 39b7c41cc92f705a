#ifndef AEFIE_KNOTS_HPP_
#define AEFIE_KNOTS_HPP_

#include <vector>

#include <Eigen/Dense>

#include "aefie/common.hpp"

namespace aefie {

/// Largest supported spline degree; sizes the stack buffers of the banded
/// evaluation routines.
inline constexpr int kMaxDegree = 15;

/// A p-open knot vector on [0,1]: the first and last knot appear p+1 times,
/// the sequence is nondecreasing and interior multiplicities stay below p+1.
/// Spline evaluation uses the half-open convention with a left-limit fix at
/// x = 1 so the basis is a partition of unity on the closed interval.
class KnotVector {
 public:
  KnotVector(int degree, std::vector<double> knots);

  /// Uniformly refined open knot vector with 2^level equal spans.
  static KnotVector uniform_open(int degree, int level);

  int degree() const { return degree_; }
  /// Number of basis functions k = #knots - p - 1.
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  const std::vector<double>& knots() const { return knots_; }

  /// Distinct breakpoints (possible element boundaries).
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  int num_spans() const { return static_cast<int>(breakpoints_.size()) - 1; }

  /// The knot vector with its first and last knot removed; it is
  /// (p-1)-open for the lowered degree and drives the next space in the
  /// de Rham sequence.
  KnotVector truncated() const;

  /// Index i of the knot span [xi_i, xi_{i+1}) containing x, with the
  /// left-limit convention at x = 1.  Result satisfies p <= i < #knots-p-1
  /// and b_j(x) = 0 for all j outside [i-p, i].
  int find_span(double x) const;

  /// Index of the element (counted over nonempty spans) containing x.
  int span_to_element(int span) const { return span_to_element_[span]; }

  /// All k basis values b_i^p(x); derivatives optional.
  /// Convenience wrapper over the banded evaluation below.
  Eigen::VectorXd eval_all(double x) const;
  void eval_all(double x, Eigen::VectorXd* values, Eigen::VectorXd* derivs) const;

  /// The p+1 possibly nonzero basis values at x: values[j] = b_{first+j}^p(x)
  /// with first = find_span(x) - p.  Cox-de Boor triangle, no allocation.
  /// derivs may be nullptr.  Returns first.
  int eval_nonzero(double x, double* values, double* derivs) const;

  bool operator==(const KnotVector& other) const {
    return degree_ == other.degree_ && knots_ == other.knots_;
  }

 private:
  int degree_;
  std::vector<double> knots_;
  std::vector<double> breakpoints_;
  std::vector<int> span_to_element_;
};

}  // namespace aefie

#endif  // AEFIE_KNOTS_HPP_
