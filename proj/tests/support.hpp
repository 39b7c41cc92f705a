#ifndef AEFIE_TESTS_SUPPORT_HPP_
#define AEFIE_TESTS_SUPPORT_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "aefie/knots.hpp"
#include "aefie/nurbs.hpp"

namespace aefie::testing {

/// Directory holding the checked-in geometry fixtures.
inline std::string data_dir() { return AEFIE_DATA_DIR; }

/// Planar unit square [0,1]^2 in the z = 0 plane, normal +z.
inline NurbsPatch unit_square_patch() {
  KnotVector k(1, {0.0, 0.0, 1.0, 1.0});
  std::vector<Vec3> net = {{0.0, 0.0, 0.0},
                           {1.0, 0.0, 0.0},
                           {0.0, 1.0, 0.0},
                           {1.0, 1.0, 0.0}};
  return NurbsPatch(k, k, net, {1.0, 1.0, 1.0, 1.0});
}

/// Unit square translated by (dx, dy) in the z = 0 plane.
inline NurbsPatch shifted_square_patch(double dx, double dy) {
  KnotVector k(1, {0.0, 0.0, 1.0, 1.0});
  std::vector<Vec3> net = {{dx, dy, 0.0},
                           {dx + 1.0, dy, 0.0},
                           {dx, dy + 1.0, 0.0},
                           {dx + 1.0, dy + 1.0, 0.0}};
  return NurbsPatch(k, k, net, {1.0, 1.0, 1.0, 1.0});
}

/// Two coplanar unit squares sharing the edge x = 1.
inline MultiPatchGeometry two_squares_geometry() {
  MultiPatchGeometry geo;
  geo.name = "two_squares";
  geo.patches.push_back(unit_square_patch());
  geo.patches.push_back(shifted_square_patch(1.0, 0.0));
  return geo;
}

/// Quarter cylinder shell: a rational quarter circle of radius 1 in u,
/// extruded linearly from z = 0 to z = 1 in v.
inline NurbsPatch quarter_cylinder_patch() {
  KnotVector ku(2, {0.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  KnotVector kv(1, {0.0, 0.0, 1.0, 1.0});
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Vec3> net = {{1.0, 0.0, 0.0}, {1.0, 1.0, 0.0}, {0.0, 1.0, 0.0},
                           {1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}, {0.0, 1.0, 1.0}};
  return NurbsPatch(ku, kv, net, {1.0, s, 1.0, 1.0, s, 1.0});
}

}  // namespace aefie::testing

#endif  // AEFIE_TESTS_SUPPORT_HPP_
