#include "aefie/nurbs.hpp"

#include <cmath>

namespace aefie {

NurbsPatch::NurbsPatch(KnotVector knots_u, KnotVector knots_v,
                       std::vector<Vec3> net, std::vector<double> weights)
    : knots_u_(std::move(knots_u)),
      knots_v_(std::move(knots_v)),
      net_(std::move(net)),
      weights_(std::move(weights)) {
  const size_t expected =
      static_cast<size_t>(knots_u_.num_basis()) * knots_v_.num_basis();
  if (net_.size() != expected)
    throw ValidationError("patch: control net has " + std::to_string(net_.size()) +
                          " points, knot vectors require " +
                          std::to_string(expected));
  if (weights_.size() != expected)
    throw ValidationError("patch: weight count does not match control net");
  for (double w : weights_)
    if (!(w > 0.0)) throw ValidationError("patch: weights must be positive");
}

Vec3 NurbsPatch::point(double x, double y) const {
  double bu[16], bv[16];
  const int fu = knots_u_.eval_nonzero(x, bu, nullptr);
  const int fv = knots_v_.eval_nonzero(y, bv, nullptr);
  const int pu = knots_u_.degree(), pv = knots_v_.degree();
  const int k1 = knots_u_.num_basis();

  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (int j = 0; j <= pv; ++j) {
    for (int i = 0; i <= pu; ++i) {
      const int idx = (fv + j) * k1 + (fu + i);
      const double wb = weights_[idx] * bu[i] * bv[j];
      num += wb * net_[idx];
      den += wb;
    }
  }
  return num / den;
}

SurfaceFrame NurbsPatch::frame(double x, double y) const {
  double bu[16], bv[16], du[16], dv[16];
  const int fu = knots_u_.eval_nonzero(x, bu, du);
  const int fv = knots_v_.eval_nonzero(y, bv, dv);
  const int pu = knots_u_.degree(), pv = knots_v_.degree();
  const int k1 = knots_u_.num_basis();

  // weighted numerator N(x,y), denominator W(x,y) and their derivatives
  Vec3 num = Vec3::Zero(), num_u = Vec3::Zero(), num_v = Vec3::Zero();
  double den = 0.0, den_u = 0.0, den_v = 0.0;
  for (int j = 0; j <= pv; ++j) {
    for (int i = 0; i <= pu; ++i) {
      const int idx = (fv + j) * k1 + (fu + i);
      const double w = weights_[idx];
      const Vec3& c = net_[idx];
      const double b = bu[i] * bv[j];
      const double b_u = du[i] * bv[j];
      const double b_v = bu[i] * dv[j];
      num += (w * b) * c;
      num_u += (w * b_u) * c;
      num_v += (w * b_v) * c;
      den += w * b;
      den_u += w * b_u;
      den_v += w * b_v;
    }
  }

  SurfaceFrame f;
  f.point = num / den;
  // quotient rule: (N/W)' = N'/W - N W'/W^2
  f.du = num_u / den - f.point * (den_u / den);
  f.dv = num_v / den - f.point * (den_v / den);
  const Vec3 cross = f.du.cross(f.dv);
  f.measure = cross.norm();
  if (!(f.measure > 0.0))
    throw NumericalError("degenerate surface frame at parameter (" +
                         std::to_string(x) + ", " + std::to_string(y) + ")");
  f.normal = cross / f.measure;
  return f;
}

Vec3 piola_vector(const SurfaceFrame& frame, const Vec2& ref_vector) {
  return (frame.du * ref_vector(0) + frame.dv * ref_vector(1)) / frame.measure;
}

double piola_divergence(const SurfaceFrame& frame, double ref_div) {
  return ref_div / frame.measure;
}

}  // namespace aefie
