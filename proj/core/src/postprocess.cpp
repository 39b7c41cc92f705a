#include "aefie/postprocess.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "aefie/nurbs.hpp"
#include "aefie/operators.hpp"
#include "aefie/quadrature.hpp"

namespace aefie {

namespace {

/// One element's quadrature data with the coefficient sums already folded in:
/// the weighted current density and charge density at every node.
struct ElementDensities {
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<CVec3> current;
  std::vector<Complex> charge;
};

void check_spaces(const DiscreteSpace& form1, const DiscreteSpace& form2) {
  if (form1.kind() != SpaceKind::Form1 || form2.kind() != SpaceKind::Form2) {
    throw ValidationError("field evaluation needs a Form1 and a Form2 space");
  }
  if (form1.elements().size() != form2.elements().size()) {
    throw ValidationError("current and charge spaces use different meshes");
  }
  for (std::size_t e = 0; e < form1.elements().size(); ++e) {
    const Element& a = form1.elements()[e];
    const Element& b = form2.elements()[e];
    if (a.patch != b.patch || a.span_u != b.span_u || a.span_v != b.span_v) {
      throw ValidationError("current and charge spaces use different meshes");
    }
  }
}

std::vector<ElementDensities> build_densities(const DiscreteSpace& form1,
                                              const DiscreteSpace& form2,
                                              const Eigen::VectorXcd& current,
                                              const Eigen::VectorXcd& charge,
                                              int degree) {
  const GaussRule1d& rule = gauss_rule(degree);
  const int q = static_cast<int>(rule.points.size());
  const auto& patches = form1.geometry().patches;

  std::vector<ElementDensities> densities(form1.elements().size());
  std::vector<double> basis1(3 * form1.num_local_dofs());
  std::vector<double> basis2(form2.num_local_dofs());
  for (std::size_t e = 0; e < form1.elements().size(); ++e) {
    const Element& el = form1.elements()[e];
    const auto& dofs1 = form1.element_dofs(static_cast<int>(e));
    const auto& dofs2 = form2.element_dofs(static_cast<int>(e));
    const NurbsPatch& patch = patches[el.patch];
    const double hu = el.u1 - el.u0;
    const double hv = el.v1 - el.v0;

    ElementDensities& density = densities[e];
    density.points.resize(q * q);
    density.weights.resize(q * q);
    density.current.assign(q * q, CVec3::Zero());
    density.charge.assign(q * q, Complex(0.0, 0.0));
    for (int jv = 0; jv < q; ++jv) {
      for (int ju = 0; ju < q; ++ju) {
        const int node = jv * q + ju;
        const double u = el.u0 + rule.points[ju] * hu;
        const double v = el.v0 + rule.points[jv] * hv;
        const SurfaceFrame frame = patch.frame(u, v);
        density.points[node] = frame.point;
        density.weights[node] =
            rule.weights[ju] * rule.weights[jv] * hu * hv;

        form1.eval_element_basis(static_cast<int>(e), u, v, basis1.data());
        for (std::size_t k = 0; k < dofs1.size(); ++k) {
          const Vec3 mapped =
              basis1[3 * k] * frame.du + basis1[3 * k + 1] * frame.dv;
          density.current[node] += current[dofs1[k].global] * mapped;
        }
        form2.eval_element_basis(static_cast<int>(e), u, v, basis2.data());
        for (std::size_t k = 0; k < dofs2.size(); ++k) {
          density.charge[node] += charge[dofs2[k].global] * basis2[k];
        }
      }
    }
  }
  return densities;
}

void check_guard(const DiscreteSpace& form1, const Vec3& point,
                 double guard_factor) {
  for (const Element& el : form1.elements()) {
    double distance = (point - el.center).norm();
    for (const Vec3& corner : el.corners) {
      distance = std::min(distance, (point - corner).norm());
    }
    if (distance <= guard_factor * el.diameter) {
      std::ostringstream message;
      message << "evaluation point (" << point.x() << ", " << point.y() << ", "
              << point.z() << ") is within " << distance
              << " of an element of diameter " << el.diameter
              << "; the smooth evaluator needs distance > " << guard_factor
              << " x diameter";
      throw ValidationError(message.str());
    }
  }
}

FieldContributions accumulate(const std::vector<ElementDensities>& densities,
                              const Vec3& point, double kappa, double mu,
                              double inv_epsilon) {
  FieldContributions out;
  for (const ElementDensities& density : densities) {
    for (std::size_t node = 0; node < density.points.size(); ++node) {
      const Vec3 diff = point - density.points[node];
      const double distance = diff.norm();
      const Complex g = greens_kernel(point, density.points[node], kappa);
      const double w = density.weights[node];
      out.vector_term += (w * mu) * g * density.current[node];
      // Gradient of the kernel at the observation point.
      const Complex radial =
          g * (Complex(0.0, -kappa) - Complex(1.0 / distance, 0.0));
      out.gradient_term += (w * inv_epsilon * radial / distance) *
                           density.charge[node] * diff.cast<Complex>();
    }
  }
  return out;
}

int resolve_eval_degree(const DiscreteSpace& form1,
                        const FieldEvalConfig& config) {
  const int degree = config.degree > 0 ? config.degree : form1.degree() + 2;
  if (config.guard_factor <= 0.0) {
    throw ValidationError("guard factor must be positive");
  }
  return degree;
}

}  // namespace

FieldContributions eval_potentials(const DiscreteSpace& form1,
                                   const DiscreteSpace& form2,
                                   const Eigen::VectorXcd& current,
                                   const Eigen::VectorXcd& charge,
                                   const Vec3& point, double frequency,
                                   const Medium& medium,
                                   const FieldEvalConfig& config) {
  check_spaces(form1, form2);
  if (current.size() != form1.num_dofs() || charge.size() != form2.num_dofs()) {
    throw ValidationError("coefficient vectors do not match the spaces");
  }
  const int degree = resolve_eval_degree(form1, config);
  check_guard(form1, point, config.guard_factor);
  const auto densities =
      build_densities(form1, form2, current, charge, degree);
  return accumulate(densities, point, wavenumber(frequency, medium), medium.mu,
                    1.0 / medium.epsilon);
}

std::vector<CVec3> eval_scattered_field(const DiscreteSpace& form1,
                                        const DiscreteSpace& form2,
                                        const Eigen::VectorXcd& current,
                                        const Eigen::VectorXcd& charge,
                                        const std::vector<Vec3>& points,
                                        double frequency, const Medium& medium,
                                        const FieldEvalConfig& config) {
  check_spaces(form1, form2);
  if (current.size() != form1.num_dofs() || charge.size() != form2.num_dofs()) {
    throw ValidationError("coefficient vectors do not match the spaces");
  }
  const int degree = resolve_eval_degree(form1, config);
  for (const Vec3& point : points) {
    check_guard(form1, point, config.guard_factor);
  }
  const auto densities =
      build_densities(form1, form2, current, charge, degree);
  const double kappa = wavenumber(frequency, medium);

  std::vector<CVec3> fields;
  fields.reserve(points.size());
  for (const Vec3& point : points) {
    fields.push_back(
        accumulate(densities, point, kappa, medium.mu, 1.0 / medium.epsilon)
            .total());
  }
  return fields;
}

std::vector<Vec3> fibonacci_sphere_points(int count, double radius) {
  if (count < 1 || radius <= 0.0) {
    throw ValidationError("sampling sphere needs count >= 1 and radius > 0");
  }
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double angle = golden_angle * i;
    points.emplace_back(radius * ring * std::cos(angle),
                        radius * ring * std::sin(angle), radius * z);
  }
  return points;
}

FieldError max_pointwise_error(const std::vector<CVec3>& field,
                               const std::vector<CVec3>& reference) {
  if (field.size() != reference.size() || field.empty()) {
    throw ValidationError("field comparison needs matching nonempty samples");
  }
  FieldError error;
  double reference_peak = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    error.max_absolute =
        std::max(error.max_absolute, (field[i] - reference[i]).norm());
    reference_peak = std::max(reference_peak, reference[i].norm());
  }
  error.max_relative = reference_peak > 0.0
                           ? error.max_absolute / reference_peak
                           : (error.max_absolute > 0.0
                                  ? std::numeric_limits<double>::infinity()
                                  : 0.0);
  return error;
}

}  // namespace aefie
