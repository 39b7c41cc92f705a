#ifndef AEFIE_TESTS_ORACLE_HPP_
#define AEFIE_TESTS_ORACLE_HPP_

#include <Eigen/Dense>

#include "aefie/common.hpp"
#include "aefie/spaces.hpp"

namespace aefie::testing {

/// Static-kernel Galerkin blocks on the flat two-square strip, computed by a
/// route disjoint from the production assembly: the four-dimensional pair
/// integrals collapse to two dimensions through the cross-correlation of the
/// basis functions,
///   Int Int f(x) g(y) / (4 pi |x - y|) dx dy
///     = Int W(t) / (4 pi |t|) dt,   W(t) = Int f(x) g(x + t) dx,
/// which is legitimate here because every element is a flat unit square with
/// an identity chart.  W is integrated exactly; the outer kernel integral
/// uses high-degree Gauss panels, split at the correlation breakpoints, with
/// a polar fan around the kernel point.  The incidence block comes from edge
/// fluxes via the divergence theorem instead of the volume integral.
struct OracleBlocks {
  Eigen::MatrixXd L;  // mu Int Int nu_i . nu_j / (4 pi R)
  Eigen::MatrixXd P;  // (1/eps) Int Int phi_i phi_j / (4 pi R)
  Eigen::MatrixXd M;  // reference mass of the scalar space
  Eigen::MatrixXd S;  // incidence Int phi div nu
};

/// Both spaces must be degree 1, level 0 on the two-square geometry from
/// two_squares_geometry(); anything else is rejected.
OracleBlocks two_square_oracle(const DiscreteSpace& form1,
                               const DiscreteSpace& form2,
                               const Medium& medium);

}  // namespace aefie::testing

#endif  // AEFIE_TESTS_ORACLE_HPP_
