#ifndef AEFIE_POSTPROCESS_HPP_
#define AEFIE_POSTPROCESS_HPP_

#include <vector>

#include <Eigen/Dense>

#include "aefie/common.hpp"
#include "aefie/spaces.hpp"

namespace aefie {

/// Controls for evaluating fields away from the surface.
struct FieldEvalConfig {
  /// Gauss degree per element and direction; 0 picks space degree + 2.
  int degree = 0;
  /// Evaluation points must keep a distance of guard_factor times the element
  /// diameter from every element; closer points would need the singular
  /// quadrature machinery that this smooth evaluator deliberately omits.
  double guard_factor = 1.0;
};

/// The two field contributions at one point: the frequency-scaled vector
/// potential term (mu times the single layer of the scaled current) and the
/// scalar potential gradient term (charge layer differentiated at the
/// observation point).  The scattered field is minus their sum.
struct FieldContributions {
  CVec3 vector_term = CVec3::Zero();
  CVec3 gradient_term = CVec3::Zero();
  CVec3 total() const { return -vector_term - gradient_term; }
};

/// Evaluates both contributions of the scattered field at one point from the
/// solved current and charge coefficients.
FieldContributions eval_potentials(const DiscreteSpace& form1,
                                   const DiscreteSpace& form2,
                                   const Eigen::VectorXcd& current,
                                   const Eigen::VectorXcd& charge,
                                   const Vec3& point, double frequency,
                                   const Medium& medium,
                                   const FieldEvalConfig& config = {});

/// Scattered electric field at a batch of points.  Throws ValidationError
/// when any point violates the distance guard of any element.
std::vector<CVec3> eval_scattered_field(const DiscreteSpace& form1,
                                        const DiscreteSpace& form2,
                                        const Eigen::VectorXcd& current,
                                        const Eigen::VectorXcd& charge,
                                        const std::vector<Vec3>& points,
                                        double frequency, const Medium& medium,
                                        const FieldEvalConfig& config = {});

/// Deterministic, nearly uniform sampling of the sphere of the given radius
/// by the Fibonacci lattice.
std::vector<Vec3> fibonacci_sphere_points(int count, double radius);

/// Pointwise comparison of a computed field against a reference.
struct FieldError {
  /// Largest Euclidean norm of the pointwise difference.
  double max_absolute = 0.0;
  /// max_absolute divided by the largest reference magnitude.
  double max_relative = 0.0;
};

FieldError max_pointwise_error(const std::vector<CVec3>& field,
                               const std::vector<CVec3>& reference);

}  // namespace aefie

#endif  // AEFIE_POSTPROCESS_HPP_
