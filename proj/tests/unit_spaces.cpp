#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "aefie/spaces.hpp"
#include "support.hpp"

using namespace aefie;
using aefie::testing::two_squares_geometry;
using aefie::testing::unit_square_patch;

namespace {

MultiPatchGeometry single_square() {
  MultiPatchGeometry geo;
  geo.name = "square";
  geo.patches.push_back(unit_square_patch());
  return geo;
}

}  // namespace

TEST_CASE("space dimensions on one flat patch") {
  const MultiPatchGeometry geo = single_square();
  for (int p = 1; p <= 3; ++p) {
    for (int level = 0; level <= 2; ++level) {
      const int m = 1 << level;
      const DiscreteSpace zero = DiscreteSpace::build(SpaceKind::Form0, geo, p, level);
      const DiscreteSpace one = DiscreteSpace::build(SpaceKind::Form1, geo, p, level);
      const DiscreteSpace two = DiscreteSpace::build(SpaceKind::Form2, geo, p, level);
      CHECK(zero.num_dofs() == (m + p) * (m + p));
      CHECK(one.num_dofs() == 2 * (m + p) * (m + p - 1));
      CHECK(two.num_dofs() == (m + p - 1) * (m + p - 1));
      CHECK(zero.elements().size() == m * m);
      CHECK(one.num_local_dofs() == 2 * p * (p + 1));
      CHECK(two.num_local_dofs() == p * p);
      CHECK_FALSE(one.closed());
    }
  }
}

TEST_CASE("element geometry data is exact on the flat patch") {
  const MultiPatchGeometry geo = single_square();
  const DiscreteSpace space = DiscreteSpace::build(SpaceKind::Form2, geo, 1, 1);
  REQUIRE(space.elements().size() == 4);
  const Element& el = space.elements()[0];
  CHECK(el.u0 == 0.0);
  CHECK(el.u1 == 0.5);
  CHECK((el.corners[0] - Vec3(0, 0, 0)).norm() < 1e-15);
  CHECK((el.corners[2] - Vec3(0.5, 0.5, 0)).norm() < 1e-15);
  CHECK((el.center - Vec3(0.25, 0.25, 0)).norm() < 1e-15);
  CHECK(el.diameter == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  // elements are listed v-major, u fastest
  CHECK(space.elements()[1].u0 == 0.5);
  CHECK(space.elements()[2].v0 == 0.5);
}

TEST_CASE("interface detection finds the shared edge of two squares") {
  const MultiPatchGeometry geo = two_squares_geometry();
  const auto interfaces = detect_interfaces(geo);
  REQUIRE(interfaces.size() == 1);
  CHECK(interfaces[0].patch_a == 0);
  CHECK(interfaces[0].edge_a == kEdgeUMax);
  CHECK(interfaces[0].patch_b == 1);
  CHECK(interfaces[0].edge_b == kEdgeUMin);
  CHECK_FALSE(interfaces[0].reversed);
}

TEST_CASE("gluing couples the normal trace across the shared edge") {
  const MultiPatchGeometry geo = two_squares_geometry();
  const DiscreteSpace space = DiscreteSpace::build(SpaceKind::Form1, geo, 1, 0);
  CHECK(space.num_preglue_dofs() == 8);
  CHECK(space.num_dofs() == 7);

  // the shared dof: patch 0 component 0 has dofs (iu, 0), iu = 0, 1; the
  // iu = 1 one lies on the interface and must alias patch 1's iu = 0 dof
  const ComponentSpace& comp_a = space.component(0, 0);
  const ComponentSpace& comp_b = space.component(1, 0);
  const int edge_a = comp_a.offset + 1;
  const int edge_b = comp_b.offset + 0;
  CHECK(space.preglue_global(edge_a) == space.preglue_global(edge_b));
  // identical parametrizations: the outward fluxes already agree, sign +1
  CHECK(space.preglue_sign(edge_a) == 1.0);
  CHECK(space.preglue_sign(edge_b) == 1.0);

  // global indices are contiguous
  std::set<int> seen;
  for (int i = 0; i < space.num_preglue_dofs(); ++i) seen.insert(space.preglue_global(i));
  CHECK(static_cast<int>(seen.size()) == space.num_dofs());
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == space.num_dofs() - 1);
}

TEST_CASE("glued dimensions on refined two-square meshes") {
  const MultiPatchGeometry geo = two_squares_geometry();
  for (int p = 1; p <= 3; ++p) {
    for (int level = 0; level <= 2; ++level) {
      const int m = 1 << level;
      const DiscreteSpace one = DiscreteSpace::build(SpaceKind::Form1, geo, p, level);
      // two patches minus one merged edge worth of dofs
      const int per_patch = 2 * (m + p) * (m + p - 1);
      CHECK(one.num_dofs() == 2 * per_patch - (m + p - 1));
    }
  }
}

TEST_CASE("scalar basis functions sum to one on every element") {
  const MultiPatchGeometry geo = two_squares_geometry();
  const DiscreteSpace space = DiscreteSpace::build(SpaceKind::Form2, geo, 3, 1);
  std::vector<double> values(space.num_local_dofs());
  for (size_t e = 0; e < space.elements().size(); ++e) {
    const Element& el = space.elements()[e];
    for (double s : {0.12, 0.5, 0.93}) {
      const double u = el.u0 + s * (el.u1 - el.u0);
      const double v = el.v0 + 0.7 * s * (el.v1 - el.v0);
      space.eval_element_basis(static_cast<int>(e), u, v, values.data());
      double sum = 0.0;
      for (double w : values) sum += w;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("vector basis evaluation matches the component splines") {
  const MultiPatchGeometry geo = single_square();
  const DiscreteSpace space = DiscreteSpace::build(SpaceKind::Form1, geo, 2, 1);
  const int e = 2;  // element (0,1)
  const Element& el = space.elements()[e];
  const double u = 0.3, v = 0.8;
  REQUIRE(el.u0 <= u);
  REQUIRE(u <= el.u1);
  std::vector<double> out(3 * space.num_local_dofs());
  space.eval_element_basis(e, u, v, out.data());
  const auto& dofs = space.element_dofs(e);
  for (size_t k = 0; k < dofs.size(); ++k) {
    const LocalDof& dof = dofs[k];
    const ComponentSpace& comp = space.component(0, dof.component);
    Eigen::VectorXd bu, dbu, bv, dbv;
    comp.knots_u.eval_all(u, &bu, &dbu);
    comp.knots_v.eval_all(v, &bv, &dbv);
    const double value = bu[dof.iu] * bv[dof.iv];
    const double div = dof.component == 0 ? dbu[dof.iu] * bv[dof.iv]
                                          : bu[dof.iu] * dbv[dof.iv];
    CHECK(out[3 * k + dof.component] == doctest::Approx(value).epsilon(1e-14));
    CHECK(out[3 * k + (1 - dof.component)] == 0.0);
    CHECK(out[3 * k + 2] == doctest::Approx(div).epsilon(1e-13));
  }
}

TEST_CASE("flipping one patch orientation flips the coupling sign") {
  // mirror patch 1 in u: same surface, opposite parameter direction
  MultiPatchGeometry geo;
  geo.patches.push_back(unit_square_patch());
  {
    KnotVector k(1, {0.0, 0.0, 1.0, 1.0});
    std::vector<Vec3> net = {{2.0, 0.0, 0.0},
                             {1.0, 0.0, 0.0},
                             {2.0, 1.0, 0.0},
                             {1.0, 1.0, 0.0}};
    geo.patches.emplace_back(k, k, net, std::vector<double>{1.0, 1.0, 1.0, 1.0});
  }
  const auto interfaces = detect_interfaces(geo);
  REQUIRE(interfaces.size() == 1);
  CHECK(interfaces[0].edge_a == kEdgeUMax);
  CHECK(interfaces[0].edge_b == kEdgeUMax);

  const DiscreteSpace space = DiscreteSpace::build(SpaceKind::Form1, geo, 1, 0);
  CHECK(space.num_dofs() == 7);
  const int edge_a = space.component(0, 0).offset + 1;
  const int edge_b = space.component(1, 0).offset + 1;
  CHECK(space.preglue_global(edge_a) == space.preglue_global(edge_b));
  // both edges have outward flux sign +1, so the partner picks up -1
  CHECK(space.preglue_sign(edge_a) * space.preglue_sign(edge_b) == -1.0);
}

TEST_CASE("per patch blocks partition the pre-glue numbering") {
  const MultiPatchGeometry geo = two_squares_geometry();
  const DiscreteSpace space = DiscreteSpace::build(SpaceKind::Form1, geo, 2, 1);
  const auto dims = space.per_patch_dims();
  REQUIRE(dims.size() == 2);
  CHECK(dims[0] + dims[1] == space.num_preglue_dofs());
  CHECK(dims[0] == dims[1]);
}
