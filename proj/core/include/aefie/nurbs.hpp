#ifndef AEFIE_NURBS_HPP_
#define AEFIE_NURBS_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aefie/common.hpp"
#include "aefie/knots.hpp"

namespace aefie {

/// Geometry data at one parameter point of a patch.
struct SurfaceFrame {
  Vec3 point;      // Gamma(x,y), meters
  Vec3 du;         // dGamma/dx
  Vec3 dv;         // dGamma/dy
  Vec3 normal;     // unit normal du x dv / |du x dv|
  double measure;  // |du x dv| = sqrt(det g)
};

/// A single tensor-product NURBS patch with Cartesian control points and
/// separate positive weights (not premultiplied).
class NurbsPatch {
 public:
  /// net is row-major with the first parameter fastest:
  /// net[j2 * k1 + j1] pairs with b_{j1}(x) b_{j2}(y).
  NurbsPatch(KnotVector knots_u, KnotVector knots_v,
             std::vector<Vec3> net, std::vector<double> weights);

  int degree_u() const { return knots_u_.degree(); }
  int degree_v() const { return knots_v_.degree(); }
  const KnotVector& knots_u() const { return knots_u_; }
  const KnotVector& knots_v() const { return knots_v_; }
  int num_u() const { return knots_u_.num_basis(); }
  int num_v() const { return knots_v_.num_basis(); }
  const std::vector<Vec3>& net() const { return net_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Point only (cheaper than the full frame).
  Vec3 point(double x, double y) const;

  /// Point, tangents (quotient rule), unit normal and surface measure.
  SurfaceFrame frame(double x, double y) const;

 private:
  KnotVector knots_u_;
  KnotVector knots_v_;
  std::vector<Vec3> net_;
  std::vector<double> weights_;
};

/// A watertight (checked at space-gluing time) collection of patches.
struct MultiPatchGeometry {
  std::vector<NurbsPatch> patches;
  std::string name;

  int num_patches() const { return static_cast<int>(patches.size()); }
};

/// Div-conforming Piola transform at a frame: reference vectors push forward
/// as v = (du, dv) vhat / measure and reference divergences as densities
/// div = divhat / measure, so that surface divergence and pushforward commute.
Vec3 piola_vector(const SurfaceFrame& frame, const Vec2& ref_vector);
double piola_divergence(const SurfaceFrame& frame, double ref_div);

}  // namespace aefie

#endif  // AEFIE_NURBS_HPP_
