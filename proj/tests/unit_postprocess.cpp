#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "aefie/operators.hpp"
#include "aefie/postprocess.hpp"
#include "aefie/quadrature.hpp"
#include "support.hpp"

using namespace aefie;
using aefie::testing::unit_square_patch;

namespace {

constexpr Medium kUnitMedium{1.0, 1.0};

MultiPatchGeometry square_geometry() {
  MultiPatchGeometry geometry;
  geometry.name = "square";
  geometry.patches.push_back(unit_square_patch());
  return geometry;
}

}  // namespace

TEST_CASE("fibonacci lattice covers the sampling sphere deterministically") {
  const auto points = fibonacci_sphere_points(100, 2.0);
  REQUIRE(points.size() == 100);
  double min_z = 1.0, max_z = -1.0;
  for (const Vec3& p : points) {
    CHECK(p.norm() == doctest::Approx(2.0).epsilon(1e-13));
    min_z = std::min(min_z, p.z() / 2.0);
    max_z = std::max(max_z, p.z() / 2.0);
  }
  CHECK(max_z > 0.95);
  CHECK(min_z < -0.95);

  double min_gap = 1e30;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      min_gap = std::min(min_gap, (points[i] - points[j]).norm());
    }
  }
  CHECK(min_gap > 0.25);

  const auto again = fibonacci_sphere_points(100, 2.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK((points[i] - again[i]).norm() == 0.0);
  }

  CHECK_THROWS_AS(fibonacci_sphere_points(0, 1.0), ValidationError);
}

TEST_CASE("pointwise error norms match hand values") {
  std::vector<CVec3> field(2, CVec3::Zero());
  std::vector<CVec3> reference(2, CVec3::Zero());
  field[0] = CVec3(Complex(0.0, 0.0), Complex(0.0, 0.0), Complex(10.0, 0.0));
  reference[0] = CVec3(Complex(0.0, 0.0), Complex(0.0, 0.0), Complex(10.0, 0.0));
  field[1] = CVec3(Complex(0.0, 0.0), Complex(1.0, 0.0), Complex(0.0, 0.0));
  reference[1] = CVec3(Complex(0.0, 0.0), Complex(5.0, 0.0), Complex(0.0, 0.0));

  const FieldError error = max_pointwise_error(field, reference);
  CHECK(error.max_absolute == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(error.max_relative == doctest::Approx(0.4).epsilon(1e-14));

  CHECK_THROWS_AS(max_pointwise_error(field, std::vector<CVec3>(3)),
                  ValidationError);
}

TEST_CASE("distance guard rejects points close to the surface") {
  const MultiPatchGeometry geometry = square_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  const Eigen::VectorXcd current =
      Eigen::VectorXcd::Ones(form1.num_dofs());
  const Eigen::VectorXcd charge = Eigen::VectorXcd::Ones(form2.num_dofs());

  const std::vector<Vec3> close{Vec3(0.5, 0.5, 0.1)};
  CHECK_THROWS_AS(eval_scattered_field(form1, form2, current, charge, close,
                                       0.0, kUnitMedium),
                  ValidationError);

  const std::vector<Vec3> far{Vec3(0.5, 0.5, 2.0)};
  CHECK_NOTHROW(eval_scattered_field(form1, form2, current, charge, far, 0.0,
                                     kUnitMedium));

  // A smaller guard factor admits closer points explicitly.
  FieldEvalConfig relaxed;
  relaxed.guard_factor = 0.05;
  CHECK_NOTHROW(eval_scattered_field(form1, form2, current, charge, close, 0.0,
                                     kUnitMedium, relaxed));
}

TEST_CASE("static charge layer radiates the monopole far field") {
  const MultiPatchGeometry geometry = square_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 1);

  // Coefficients of the constant unit density: total charge 1 on the square.
  const Eigen::VectorXcd current =
      Eigen::VectorXcd::Zero(form1.num_dofs());
  const Eigen::VectorXcd charge = Eigen::VectorXcd::Ones(form2.num_dofs());

  const Vec3 centroid(0.5, 0.5, 0.0);
  const Vec3 point = centroid + Vec3(14.0, 23.0, 37.0);
  const auto field = eval_scattered_field(form1, form2, current, charge,
                                          {point}, 0.0, kUnitMedium);

  const Vec3 diff = point - centroid;
  const double distance = diff.norm();
  const Vec3 expected = diff / (4.0 * kPi * distance * distance * distance);
  CHECK((field[0].real() - expected).norm() < 1e-3 * expected.norm());
  CHECK(field[0].imag().norm() == 0.0);
}

TEST_CASE("static current layer radiates its moment") {
  const MultiPatchGeometry geometry = square_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 2, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 2, 1);

  Eigen::VectorXcd current(form1.num_dofs());
  for (int i = 0; i < current.size(); ++i) {
    current[i] = Complex(std::sin(0.7 * i + 0.3), std::cos(1.1 * i));
  }
  const Eigen::VectorXcd charge = Eigen::VectorXcd::Zero(form2.num_dofs());

  // The total current moment, integrated with an independent dense rule.
  CVec3 moment = CVec3::Zero();
  const GaussRule1d& rule = gauss_rule(8);
  std::vector<double> basis(3 * form1.num_local_dofs());
  for (std::size_t e = 0; e < form1.elements().size(); ++e) {
    const Element& el = form1.elements()[e];
    const auto& dofs = form1.element_dofs(static_cast<int>(e));
    const NurbsPatch& patch = geometry.patches[el.patch];
    for (std::size_t jv = 0; jv < rule.points.size(); ++jv) {
      for (std::size_t ju = 0; ju < rule.points.size(); ++ju) {
        const double u = el.u0 + rule.points[ju] * (el.u1 - el.u0);
        const double v = el.v0 + rule.points[jv] * (el.v1 - el.v0);
        const double w = rule.weights[ju] * rule.weights[jv] *
                         (el.u1 - el.u0) * (el.v1 - el.v0);
        const SurfaceFrame frame = patch.frame(u, v);
        form1.eval_element_basis(static_cast<int>(e), u, v, basis.data());
        for (std::size_t k = 0; k < dofs.size(); ++k) {
          const Vec3 mapped =
              basis[3 * k] * frame.du + basis[3 * k + 1] * frame.dv;
          moment += w * current[dofs[k].global] * mapped;
        }
      }
    }
  }

  // Far enough that the neglected moment-offset correction, of order
  // (patch size / distance), sits well below the tolerance.
  const Vec3 point(310.0, -180.0, 440.0);
  const double distance = (point - Vec3(0.5, 0.5, 0.0)).norm();
  const auto potentials = eval_potentials(form1, form2, current, charge, point,
                                          0.0, kUnitMedium);
  const CVec3 expected = moment / (4.0 * kPi * distance);
  CHECK((potentials.vector_term - expected).norm() < 5e-3 * expected.norm());
  CHECK(potentials.gradient_term.norm() == 0.0);
  CHECK((potentials.total() + potentials.vector_term +
         potentials.gradient_term)
            .norm() == 0.0);
}

TEST_CASE("single-point and batch evaluation agree") {
  const MultiPatchGeometry geometry = square_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 1);

  Eigen::VectorXcd current(form1.num_dofs());
  Eigen::VectorXcd charge(form2.num_dofs());
  for (int i = 0; i < current.size(); ++i) {
    current[i] = Complex(0.1 * i, -0.05 * i);
  }
  for (int i = 0; i < charge.size(); ++i) {
    charge[i] = Complex(std::cos(0.9 * i), 0.2);
  }

  const double frequency = 3.0e6;
  const std::vector<Vec3> points{Vec3(2.0, -1.0, 3.0), Vec3(-1.5, 2.5, -2.0)};
  const auto batch = eval_scattered_field(form1, form2, current, charge,
                                          points, frequency, kUnitMedium);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto single = eval_potentials(form1, form2, current, charge,
                                        points[i], frequency, kUnitMedium);
    CHECK((batch[i] - single.total()).norm() == 0.0);
  }
}

TEST_CASE("mismatched meshes and coefficients are rejected") {
  const MultiPatchGeometry geometry = square_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  const auto matching = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 1);

  const Eigen::VectorXcd current =
      Eigen::VectorXcd::Zero(form1.num_dofs());
  const std::vector<Vec3> points{Vec3(0.0, 0.0, 5.0)};
  CHECK_THROWS_AS(
      eval_scattered_field(form1, form2, current,
                           Eigen::VectorXcd::Zero(form2.num_dofs()), points,
                           0.0, kUnitMedium),
      ValidationError);
  CHECK_THROWS_AS(
      eval_scattered_field(form1, matching, current,
                           Eigen::VectorXcd::Zero(3), points, 0.0,
                           kUnitMedium),
      ValidationError);
}
