#include "aefie/knots.hpp"

#include <algorithm>
#include <cmath>

namespace aefie {

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 0) throw ValidationError("knot vector: negative degree");
  if (degree_ > kMaxDegree)
    throw ValidationError("knot vector: degree exceeds supported maximum " +
                          std::to_string(kMaxDegree));
  const int n = static_cast<int>(knots_.size());
  if (n < 2 * (degree_ + 1))
    throw ValidationError("knot vector: too few knots for degree " +
                          std::to_string(degree_));
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw ValidationError("knot vector: knots not nondecreasing");
  for (int i = 0; i <= degree_; ++i) {
    if (knots_[i] != knots_.front() || knots_[n - 1 - i] != knots_.back())
      throw ValidationError("knot vector: not p-open");
  }
  if (knots_.front() != 0.0 || knots_.back() != 1.0)
    throw ValidationError("knot vector: domain must be [0,1]");
  if (knots_[degree_ + 1] == knots_.front() ||
      knots_[n - degree_ - 2] == knots_.back())
    throw ValidationError("knot vector: end multiplicity exceeds degree+1");
  // interior multiplicities <= p (so every basis function is continuous)
  for (int i = degree_ + 1; i < n - degree_ - 1;) {
    int j = i;
    while (j < n - degree_ - 1 && knots_[j] == knots_[i]) ++j;
    if (degree_ > 0 && j - i > degree_)
      throw ValidationError("knot vector: interior multiplicity exceeds degree");
    i = j;
  }

  breakpoints_.push_back(knots_.front());
  for (double xi : knots_)
    if (xi > breakpoints_.back()) breakpoints_.push_back(xi);

  // map span index (position in the raw knot list) to element number
  span_to_element_.assign(knots_.size(), -1);
  int element = -1;
  for (size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (knots_[i + 1] > knots_[i]) ++element;
    span_to_element_[i] = element;
  }
}

KnotVector KnotVector::uniform_open(int degree, int level) {
  if (level < 0) throw ValidationError("knot vector: negative refinement level");
  const int spans = 1 << level;
  std::vector<double> knots(degree, 0.0);
  for (int i = 0; i <= spans; ++i)
    knots.push_back(static_cast<double>(i) / static_cast<double>(spans));
  knots.insert(knots.end(), degree, 1.0);
  return KnotVector(degree, std::move(knots));
}

KnotVector KnotVector::truncated() const {
  if (degree_ < 1)
    throw ValidationError("knot vector: cannot truncate degree 0");
  std::vector<double> inner(knots_.begin() + 1, knots_.end() - 1);
  return KnotVector(degree_ - 1, std::move(inner));
}

int KnotVector::find_span(double x) const {
  const int n = static_cast<int>(knots_.size());
  if (x < 0.0 || x > 1.0) throw ValidationError("spline evaluation outside [0,1]");
  if (x >= knots_.back()) return n - degree_ - 2;  // left limit at x = 1
  // rightmost span with knots_[i] <= x < knots_[i+1]
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  return static_cast<int>(it - knots_.begin()) - 1;
}

int KnotVector::eval_nonzero(double x, double* values, double* derivs) const {
  const int p = degree_;
  const int span = find_span(x);
  // Cox-de Boor triangle: left[j] = x - xi_{span+1-j}, right[j] = xi_{span+j} - x
  double left[kMaxDegree + 1], right[kMaxDegree + 1], ndu[kMaxDegree + 1];
  values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    if (derivs != nullptr && j == p) {
      // values currently holds the degree-(p-1) functions needed below
      for (int r = 0; r < p; ++r) ndu[r] = values[r];
    }
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    values[j] = saved;
  }
  if (derivs != nullptr) {
    // d/dx b_i^p = p (b_i^{p-1}/(xi_{i+p}-xi_i) - b_{i+1}^{p-1}/(xi_{i+p+1}-xi_{i+1}))
    if (p == 0) {
      derivs[0] = 0.0;
    } else {
      for (int j = 0; j <= p; ++j) {
        const int i = span - p + j;
        double d = 0.0;
        if (j > 0) {
          const double den = knots_[i + p] - knots_[i];
          if (den > 0.0) d += ndu[j - 1] / den;
        }
        if (j < p) {
          const double den = knots_[i + p + 1] - knots_[i + 1];
          if (den > 0.0) d -= ndu[j] / den;
        }
        derivs[j] = p * d;
      }
    }
  }
  return span - p;
}

Eigen::VectorXd KnotVector::eval_all(double x) const {
  Eigen::VectorXd values;
  eval_all(x, &values, nullptr);
  return values;
}

void KnotVector::eval_all(double x, Eigen::VectorXd* values,
                          Eigen::VectorXd* derivs) const {
  const int k = num_basis();
  double vals[kMaxDegree + 1], ders[kMaxDegree + 1];
  const int first = eval_nonzero(x, vals, derivs ? ders : nullptr);
  values->setZero(k);
  if (derivs != nullptr) derivs->setZero(k);
  for (int j = 0; j <= degree_; ++j) {
    const int i = first + j;
    if (i < 0 || i >= k) continue;
    (*values)(i) = vals[j];
    if (derivs != nullptr) (*derivs)(i) = ders[j];
  }
}

}  // namespace aefie
