#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include "aefie/operators.hpp"

#include <cmath>

#include "doctest.h"

#include "aefie/quadrature.hpp"
#include "aefie/spaces.hpp"
#include "support.hpp"

using namespace aefie;

namespace {

// Coincident-square kernel integral Int Int 1/|x-y| over [0,1]^2 twice:
// closed form 4 ln(1+sqrt(2)) - (4/3)(sqrt(2)-1), cross-checked numerically
// by polar-coordinate integration in the quadrature tests.
constexpr double kSquareSelfEnergy = 2.973209598247379;

const Medium kUnitMedium{1.0, 1.0};

MultiPatchGeometry single_square() {
  MultiPatchGeometry geometry;
  geometry.name = "square";
  geometry.patches.push_back(testing::unit_square_patch());
  return geometry;
}

MultiPatchGeometry separated_squares() {
  MultiPatchGeometry geometry;
  geometry.name = "separated";
  geometry.patches.push_back(testing::unit_square_patch());
  geometry.patches.push_back(testing::shifted_square_patch(3.0, 0.0));
  return geometry;
}

double rel_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("kernel basics") {
  const Vec3 x(0.0, 0.0, 0.0);
  const Vec3 y(0.0, 3.0, 4.0);
  const Complex g0 = greens_kernel(x, y, 0.0);
  CHECK(g0.real() == doctest::Approx(1.0 / (4.0 * kPi * 5.0)).epsilon(1e-15));
  CHECK(g0.imag() == 0.0);

  const double kappa = 0.7;
  const Complex g = greens_kernel(x, y, kappa);
  CHECK(std::abs(g) == doctest::Approx(1.0 / (4.0 * kPi * 5.0)).epsilon(1e-14));
  CHECK(std::arg(g) == doctest::Approx(std::remainder(-kappa * 5.0, 2.0 * kPi))
                           .epsilon(1e-12));
  CHECK_THROWS_AS(greens_kernel(x, x, 1.0), NumericalError);
}

TEST_CASE("static dipole matches the closed-form near field") {
  DipoleSource source;
  source.position = Vec3(0.1, -0.2, 0.3);
  source.moment = Vec3(0.0, 0.0, 2e-3);

  const double r = 0.5;
  const double scale = 1.0 / (4.0 * kPi * kEpsilon0 * r * r * r);

  // On the dipole axis the field is 2 p / (4 pi eps r^3).
  const CVec3 axial = dipole_field(source.position + Vec3(0.0, 0.0, r), source,
                                   0.0, Medium{});
  CHECK(std::abs(axial[2] - 2.0 * source.moment[2] * scale) <
        1e-13 * std::abs(axial[2]));
  CHECK(std::abs(axial[0]) < 1e-18);
  CHECK(std::abs(axial[1]) < 1e-18);

  // In the equatorial plane it is -p / (4 pi eps r^3).
  const CVec3 equatorial = dipole_field(source.position + Vec3(r, 0.0, 0.0),
                                        source, 0.0, Medium{});
  CHECK(std::abs(equatorial[2] + source.moment[2] * scale) <
        1e-13 * std::abs(equatorial[2]));
}

TEST_CASE("dipole low-frequency limit and phase switch") {
  DipoleSource source;
  source.position = Vec3(0.2, 0.2, 0.2);
  source.moment = Vec3(0.0, 0.1, 0.1);
  const Vec3 x(1.0, 0.3, -0.1);

  const CVec3 stat = dipole_field(x, source, 0.0, Medium{});
  const CVec3 low = dipole_field(x, source, 3e6, Medium{});
  const double rel = (low - stat).norm() / stat.norm();
  CHECK(rel < 1e-2);   // kappa r ~ 0.02 at 3 MHz
  CHECK(rel > 1e-6);   // but genuinely frequency dependent

  DipoleSource flipped = source;
  flipped.phase_sign = 1.0;
  const CVec3 outgoing = dipole_field(x, source, 3e6, Medium{});
  const CVec3 incoming = dipole_field(x, flipped, 3e6, Medium{});
  CHECK((incoming - outgoing.conjugate()).norm() < 1e-14 * outgoing.norm());
}

TEST_CASE("far dipole field is nearly transverse") {
  DipoleSource source;
  source.position = Vec3::Zero();
  source.moment = Vec3(1.0, 0.0, 1.0);
  const double kappa = 50.0;
  const double frequency = kappa / (2.0 * kPi * std::sqrt(kEpsilon0 * kMu0));
  const Vec3 x(0.0, 0.0, 1.0);  // kappa r = 50 along z
  const CVec3 field = dipole_field(x, source, frequency, Medium{});
  const double radial = std::abs(field[2]);
  CHECK(radial / field.norm() < 0.1);
  CHECK(radial / field.norm() > 1e-4);
}

TEST_CASE("local blocks on one flat element are exact") {
  const MultiPatchGeometry geometry = single_square();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  const LocalBlocks local = assemble_local(form1, form2);

  REQUIRE(local.M.rows() == 1);
  CHECK(local.M(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  // One element, divergence -1/+1 per component endpoint function.
  REQUIRE(local.S.rows() == 1);
  REQUIRE(local.S.cols() == 4);
  const double expected[4] = {-1.0, 1.0, -1.0, 1.0};
  for (int j = 0; j < 4; ++j) {
    CHECK(local.S(0, j) == doctest::Approx(expected[j]).epsilon(1e-14));
  }
}

TEST_CASE("piecewise-constant mass matrix is the element measure") {
  const MultiPatchGeometry geometry = testing::two_squares_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 1);
  const LocalBlocks local = assemble_local(form1, form2);
  REQUIRE(local.M.rows() == 8);
  const Eigen::MatrixXd expected =
      0.25 * Eigen::MatrixXd::Identity(8, 8);
  CHECK((local.M - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("incidence matrix of the glued two-square mesh") {
  const MultiPatchGeometry geometry = testing::two_squares_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  const LocalBlocks local = assemble_local(form1, form2);

  REQUIRE(local.S.rows() == 2);
  REQUIRE(local.S.cols() == 7);
  Eigen::MatrixXd expected(2, 7);
  expected << -1, 1, -1, 1, 0, 0, 0,
               0, -1, 0, 0, 1, -1, 1;
  CHECK((local.S - expected).cwiseAbs().maxCoeff() < 1e-14);

  // The interface column carries opposite contributions from the two sides,
  // so it sums to zero: discrete charge conservation across the interface.
  CHECK(std::abs(local.S.col(1).sum()) < 1e-14);
}

TEST_CASE("interior incidence columns sum to zero on the refined mesh") {
  const MultiPatchGeometry geometry = testing::two_squares_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 1);
  const LocalBlocks local = assemble_local(form1, form2);

  // Columns with a nonvanishing normal trace on the free outer boundary keep
  // a net divergence; there are 12 of them on this mesh (2 + 2 u-endpoints,
  // 4 + 4 v-endpoints).  All interior columns must cancel exactly.
  int boundary_columns = 0;
  for (int j = 0; j < local.S.cols(); ++j) {
    if (std::abs(local.S.col(j).sum()) > 1e-12) ++boundary_columns;
  }
  CHECK(boundary_columns == 12);
}

TEST_CASE("excitation vector on one flat element is exact") {
  const MultiPatchGeometry geometry = single_square();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  const auto field = [](const Vec3&) { return CVec3(1.0, 0.0, 0.0); };

  const Eigen::VectorXcd plain =
      assemble_excitation(form1, field, ExcitationTrace::Plain, 3);
  REQUIRE(plain.size() == 4);
  CHECK(std::abs(plain[0] - 0.5) < 1e-14);
  CHECK(std::abs(plain[1] - 0.5) < 1e-14);
  CHECK(std::abs(plain[2]) < 1e-14);
  CHECK(std::abs(plain[3]) < 1e-14);

  // (1,0,0) x (0,0,1) = (0,-1,0) pairs with the v-component functions.
  const Eigen::VectorXcd cross =
      assemble_excitation(form1, field, ExcitationTrace::Cross, 3);
  CHECK(std::abs(cross[0]) < 1e-14);
  CHECK(std::abs(cross[1]) < 1e-14);
  CHECK(std::abs(cross[2] + 0.5) < 1e-14);
  CHECK(std::abs(cross[3] + 0.5) < 1e-14);
}

TEST_CASE("static potential block reproduces the self-energy constant") {
  const MultiPatchGeometry geometry = single_square();
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  AssemblyConfig config;
  const Eigen::MatrixXcd P = assemble_single_layer(
      form2, SingleLayerKind::ScalarP, 0.0, kUnitMedium, config);
  REQUIRE(P.rows() == 1);
  const double expected = kSquareSelfEnergy / (4.0 * kPi);
  CHECK(std::abs(P(0, 0).real() - expected) < 1e-6 * expected);
  CHECK(std::abs(P(0, 0).imag()) < 1e-18);
}

TEST_CASE("flat inductive block respects the u-v reflection symmetry") {
  const MultiPatchGeometry geometry = single_square();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  AssemblyConfig config;
  const Eigen::MatrixXcd L = assemble_single_layer(
      form1, SingleLayerKind::VectorL, 0.0, kUnitMedium, config);
  REQUIRE(L.rows() == 4);
  // Swapping the parameter directions maps the u-component functions onto
  // the v-component ones and leaves the kernel invariant.
  CHECK(std::abs(L(0, 0) - L(2, 2)) < 1e-12 * std::abs(L(0, 0)));
  CHECK(std::abs(L(0, 1) - L(2, 3)) < 1e-12 * std::abs(L(0, 0)));
  CHECK(std::abs(L(1, 1) - L(3, 3)) < 1e-12 * std::abs(L(0, 0)));
  // The two components decouple on a flat patch only through the kernel, so
  // the cross blocks are still nonzero; the matrix must stay symmetric.
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() <
        1e-13 * L.cwiseAbs().maxCoeff());
}

TEST_CASE("kernel blocks are complex symmetric and deterministic") {
  const MultiPatchGeometry geometry = testing::two_squares_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 1);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 1);
  AssemblyConfig config;

  Eigen::MatrixXcd L, P;
  assemble_kernel_blocks(form1, form2, 3e6, Medium{}, config, &L, &P);
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() <
        1e-13 * L.cwiseAbs().maxCoeff());
  CHECK((P - P.transpose()).cwiseAbs().maxCoeff() <
        1e-13 * P.cwiseAbs().maxCoeff());

  // The batched schedule makes the result bitwise independent of the worker
  // count: per-pair arithmetic is self-contained and the scatter is ordered.
  AssemblyConfig parallel = config;
  parallel.workers = 3;
  Eigen::MatrixXcd L3, P3;
  assemble_kernel_blocks(form1, form2, 3e6, Medium{}, parallel, &L3, &P3);
  CHECK((L - L3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((P - P3).cwiseAbs().maxCoeff() == 0.0);

  // The single-block wrapper walks the same path.
  const Eigen::MatrixXcd Lsolo = assemble_single_layer(
      form1, SingleLayerKind::VectorL, 3e6, Medium{}, config);
  CHECK((L - Lsolo).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero frequency is the exact limit of vanishing frequency") {
  const MultiPatchGeometry geometry = testing::two_squares_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  AssemblyConfig config;

  Eigen::MatrixXcd L0, P0, Leps, Peps;
  assemble_kernel_blocks(form1, form2, 0.0, Medium{}, config, &L0, &P0);
  assemble_kernel_blocks(form1, form2, 1e-30, Medium{}, config, &Leps, &Peps);
  CHECK(rel_diff(L0, Leps) < 1e-12);
  CHECK(rel_diff(P0, Peps) < 1e-12);
  CHECK(L0.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(P0.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("factorized far pair agrees with a direct tensor loop") {
  const MultiPatchGeometry geometry = separated_squares();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 2, 0);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 2, 0);

  const double frequency = 3e6;
  const Medium medium;
  AssemblyConfig config;
  config.quadrature.base_degree = 8;
  Eigen::MatrixXcd L, P;
  assemble_kernel_blocks(form1, form2, frequency, medium, config, &L, &P);

  // Plain four-dimensional summation over the same 8x8 tensor rule, written
  // independently of the assembly engine.
  const int nj = form1.num_local_dofs();
  const int np = form2.num_local_dofs();
  Eigen::MatrixXcd Lref = Eigen::MatrixXcd::Zero(nj, nj);
  Eigen::MatrixXcd Pref = Eigen::MatrixXcd::Zero(np, np);
  const GaussRule1d& rule = gauss_rule(8);
  const double kappa = wavenumber(frequency, medium);
  std::vector<double> ba(3 * nj), bb(3 * nj), pa(np), pb(np);
  for (int au = 0; au < 8; ++au) {
    for (int av = 0; av < 8; ++av) {
      const double ux = rule.points[au];
      const double vx = rule.points[av];
      const SurfaceFrame fa = geometry.patches[0].frame(ux, vx);
      form1.eval_element_basis(0, ux, vx, ba.data());
      form2.eval_element_basis(0, ux, vx, pa.data());
      for (int bu = 0; bu < 8; ++bu) {
        for (int bv = 0; bv < 8; ++bv) {
          const double uy = rule.points[bu];
          const double vy = rule.points[bv];
          const SurfaceFrame fb = geometry.patches[1].frame(uy, vy);
          form1.eval_element_basis(1, uy, vy, bb.data());
          form2.eval_element_basis(1, uy, vy, pb.data());
          const double w = rule.weights[au] * rule.weights[av] *
                           rule.weights[bu] * rule.weights[bv];
          const Complex g = w * greens_kernel(fa.point, fb.point, kappa);
          for (int i = 0; i < nj; ++i) {
            const Vec3 ci = fa.du * ba[3 * i] + fa.dv * ba[3 * i + 1];
            for (int j = 0; j < nj; ++j) {
              const Vec3 cj = fb.du * bb[3 * j] + fb.dv * bb[3 * j + 1];
              Lref(i, j) += medium.mu * g * ci.dot(cj);
            }
          }
          for (int i = 0; i < np; ++i) {
            for (int j = 0; j < np; ++j) {
              Pref(i, j) += g * pa[i] * pb[j] / medium.epsilon;
            }
          }
        }
      }
    }
  }

  CHECK(rel_diff(L.block(0, nj, nj, nj), Lref) < 5e-13);
  CHECK(rel_diff(P.block(0, np, np, np), Pref) < 5e-13);
}

TEST_CASE("assemble_blocks bundles every piece consistently") {
  const MultiPatchGeometry geometry = testing::two_squares_geometry();
  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry, 1, 0);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry, 1, 0);
  AssemblyConfig config;

  DipoleSource source;
  source.position = Vec3(0.5, 0.5, 0.7);
  source.moment = Vec3(0.0, 0.1, 0.1);
  const double frequency = 3e6;
  const Medium medium;
  const auto incident = [&](const Vec3& x) {
    return dipole_field(x, source, frequency, medium);
  };

  const SystemBlocks blocks =
      assemble_blocks(form1, form2, frequency, medium, config, incident);
  CHECK(blocks.num_currents() == form1.num_dofs());
  CHECK(blocks.num_potentials() == form2.num_dofs());
  CHECK(blocks.v_ex.size() == form1.num_dofs());
  CHECK(blocks.v_ex.cwiseAbs().maxCoeff() > 0.0);

  const Eigen::VectorXcd direct = assemble_excitation(
      form1, incident, ExcitationTrace::Plain,
      config.quadrature.resolve_base(form1.degree()) + 2);
  CHECK((blocks.v_ex - direct).cwiseAbs().maxCoeff() == 0.0);

  const LocalBlocks local = assemble_local(form1, form2);
  CHECK((blocks.M - local.M).cwiseAbs().maxCoeff() == 0.0);
  CHECK((blocks.S - local.S).cwiseAbs().maxCoeff() == 0.0);
}
