#include "aefie/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace aefie {

namespace {

// Newton iteration on the Legendre polynomial P_n; nodes of the n-point rule
// on [-1,1] are its roots, weights 2 / ((1-x^2) P_n'(x)^2).
GaussRule1d compute_gauss(int n) {
  GaussRule1d rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-like initial guess, accurate enough for global convergence.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Map [-1,1] -> (0,1); emit in increasing order.
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const GaussRule1d& gauss_rule(int n) {
  if (n < 1 || n > 64)
    throw ValidationError("gauss_rule: point count " + std::to_string(n) +
                          " outside [1,64]");
  static std::map<int, GaussRule1d> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss(n)).first;
  return it->second;
}

std::array<int, 2> edge_corners(int edge) {
  switch (edge) {
    case kEdgeVMin: return {0, 1};
    case kEdgeUMax: return {1, 2};
    case kEdgeVMax: return {3, 2};
    default:        return {0, 3};  // kEdgeUMin
  }
}

Vec2 edge_adapted_point(int edge, double a, double b) {
  switch (edge) {
    case kEdgeVMin: return {a, b};
    case kEdgeUMax: return {1.0 - b, a};
    case kEdgeVMax: return {a, 1.0 - b};
    default:        return {b, a};  // kEdgeUMin
  }
}

Vec2 corner_adapted_point(int corner, double x1, double x2) {
  switch (corner) {
    case 0:  return {x1, x2};
    case 1:  return {1.0 - x1, x2};
    case 2:  return {1.0 - x1, 1.0 - x2};
    default: return {x1, 1.0 - x2};  // corner 3
  }
}

namespace {

constexpr double kCornerTol = 1e-9;

}  // namespace

PairClassification classify_pair(const Element& a, const Element& b) {
  PairClassification result;
  if (a.patch == b.patch && a.span_u == b.span_u && a.span_v == b.span_v) {
    result.kind = PairCase::Identical;
    return result;
  }

  // Corner matching (works within a patch and across interfaces alike).
  int match_a[2], match_b[2];
  int num_matches = 0;
  for (int i = 0; i < 4 && num_matches <= 2; ++i) {
    for (int j = 0; j < 4; ++j) {
      if ((a.corners[i] - b.corners[j]).norm() < kCornerTol) {
        if (num_matches < 2) {
          match_a[num_matches] = i;
          match_b[num_matches] = j;
        }
        ++num_matches;
        break;
      }
    }
  }
  if (num_matches > 2)
    throw ValidationError("degenerate mesh: elements share more than two corners");

  if (num_matches == 2) {
    int edge_a = -1, edge_b = -1;
    for (int e = 0; e < 4; ++e) {
      const auto ca = edge_corners(e);
      if ((ca[0] == match_a[0] && ca[1] == match_a[1]) ||
          (ca[0] == match_a[1] && ca[1] == match_a[0]))
        edge_a = e;
      const auto cb = edge_corners(e);
      if ((cb[0] == match_b[0] && cb[1] == match_b[1]) ||
          (cb[0] == match_b[1] && cb[1] == match_b[0]))
        edge_b = e;
    }
    if (edge_a < 0 || edge_b < 0)
      throw ValidationError("degenerate mesh: shared corners are not an edge");
    result.kind = PairCase::EdgeAdjacent;
    result.edge_a = edge_a;
    result.edge_b = edge_b;
    // Reversed iff the start corner of edge_a pairs with the end corner of
    // edge_b.
    const int start_a = edge_corners(edge_a)[0];
    const int partner =
        (match_a[0] == start_a) ? match_b[0] : match_b[1];
    result.reversed = (partner == edge_corners(edge_b)[1]);
    return result;
  }

  if (num_matches == 1) {
    result.kind = PairCase::VertexAdjacent;
    result.corner_a = match_a[0];
    result.corner_b = match_b[0];
    return result;
  }

  // Distance over corners plus centers.
  double d = (a.center - b.center).norm();
  for (int i = 0; i < 4; ++i) {
    d = std::min(d, (a.center - b.corners[i]).norm());
    d = std::min(d, (a.corners[i] - b.center).norm());
    for (int j = 0; j < 4; ++j)
      d = std::min(d, (a.corners[i] - b.corners[j]).norm());
  }
  result.distance = d;
  result.kind = d < std::max(a.diameter, b.diameter) ? PairCase::Near : PairCase::Far;
  return result;
}

int select_degree(double d, double h, int q0, double alpha) {
  if (d >= h) return q0;
  // Grade up as the gap closes; the cap keeps the degree finite for touching
  // pairs (those are normally handled by the singular rules anyway).
  const double ratio = h / std::max(d, h / 4096.0);
  const int bump = static_cast<int>(std::ceil(alpha * std::log2(ratio)));
  return q0 + std::max(0, bump);
}

namespace {

// --- singular rule construction ---------------------------------------------
//
// All three adjacent cases reduce the four-dimensional integral over the
// product of two reference squares to a sum of tensor subdomains on which the
// pulled-back 1/|x-y| kernel is smooth: the parametrization concentrates the
// vanishing of the Jacobian at the shared set.

// Identical: substitute z = y - x.  For fixed z the x-cell is a rectangle of
// measure (1-|z1|)(1-|z2|); each sign quadrant of z carries a corner
// singularity at z = 0, removed by splitting into the two triangles
// |z2| <= |z1| and |z1| < |z2| with a linear scaling of Jacobian |z|_max.
// 4 quadrants x 2 triangles = 8 subdomains.
TensorRule4D build_identical(const GaussRule1d& g) {
  TensorRule4D rule;
  const int q = static_cast<int>(g.points.size());
  rule.points.reserve(8 * q * q * q * q);
  for (int sign1 = 0; sign1 < 2; ++sign1) {
    for (int sign2 = 0; sign2 < 2; ++sign2) {
      const double s1 = sign1 ? -1.0 : 1.0;
      const double s2 = sign2 ? -1.0 : 1.0;
      for (int tri = 0; tri < 2; ++tri) {
        for (int i1 = 0; i1 < q; ++i1) {
          for (int i2 = 0; i2 < q; ++i2) {
            const double w = g.points[i1];
            const double t = g.points[i2];
            const double z1 = tri == 0 ? w : w * t;
            const double z2 = tri == 0 ? w * t : w;
            const double duffy = g.weights[i1] * g.weights[i2] * w;
            for (int i3 = 0; i3 < q; ++i3) {
              for (int i4 = 0; i4 < q; ++i4) {
                QuadPoint4 p;
                p.x1 = (1.0 - z1) * g.points[i3] + (s1 < 0 ? z1 : 0.0);
                p.x2 = (1.0 - z2) * g.points[i4] + (s2 < 0 ? z2 : 0.0);
                p.y1 = p.x1 + s1 * z1;
                p.y2 = p.x2 + s2 * z2;
                p.jacobian = w * (1.0 - z1) * (1.0 - z2);
                p.weight = duffy * g.weights[i3] * g.weights[i4] *
                           (1.0 - z1) * (1.0 - z2);
                rule.points.push_back(p);
              }
            }
          }
        }
      }
    }
  }
  return rule;
}

// EdgeAdjacent: coordinates (a_x, b_x) and (a_y, b_y) with the common edge at
// b = 0 and a matched across it.  Substitute u = a_y - a_x; the kernel is
// singular at (|u|, b_x, b_y) = 0, a three-dimensional corner handled by a
// largest-coordinate split (Jacobian rho^2).  2 signs x 3 faces = 6
// subdomains.
TensorRule4D build_edge(const GaussRule1d& g) {
  TensorRule4D rule;
  const int q = static_cast<int>(g.points.size());
  rule.points.reserve(6 * q * q * q * q);
  for (int sign = 0; sign < 2; ++sign) {
    const double s = sign ? -1.0 : 1.0;
    for (int face = 0; face < 3; ++face) {
      for (int i1 = 0; i1 < q; ++i1) {
        for (int i2 = 0; i2 < q; ++i2) {
          for (int i3 = 0; i3 < q; ++i3) {
            const double rho = g.points[i1];
            const double e1 = g.points[i2];
            const double e2 = g.points[i3];
            double uabs, bx, by;
            switch (face) {
              case 0:  uabs = rho;      bx = rho * e1; by = rho * e2; break;
              case 1:  uabs = rho * e1; bx = rho;      by = rho * e2; break;
              default: uabs = rho * e1; bx = rho * e2; by = rho;      break;
            }
            const double base = g.weights[i1] * g.weights[i2] * g.weights[i3] *
                                rho * rho * (1.0 - uabs);
            for (int i4 = 0; i4 < q; ++i4) {
              QuadPoint4 p;
              p.x1 = (1.0 - uabs) * g.points[i4] + (s < 0 ? uabs : 0.0);
              p.x2 = bx;
              p.y1 = p.x1 + s * uabs;
              p.y2 = by;
              p.jacobian = rho * rho * (1.0 - uabs);
              p.weight = base * g.weights[i4];
              rule.points.push_back(p);
            }
          }
        }
      }
    }
  }
  return rule;
}

// VertexAdjacent: both squares have the shared corner at the origin; the
// kernel is singular only there, a four-dimensional corner handled by a
// largest-coordinate split (Jacobian rho^3).  4 subdomains.
TensorRule4D build_vertex(const GaussRule1d& g) {
  TensorRule4D rule;
  const int q = static_cast<int>(g.points.size());
  rule.points.reserve(4 * q * q * q * q);
  for (int face = 0; face < 4; ++face) {
    for (int i1 = 0; i1 < q; ++i1) {
      for (int i2 = 0; i2 < q; ++i2) {
        for (int i3 = 0; i3 < q; ++i3) {
          for (int i4 = 0; i4 < q; ++i4) {
            const double rho = g.points[i1];
            const double e[3] = {g.points[i2], g.points[i3], g.points[i4]};
            double c[4];
            int k = 0;
            for (int d = 0; d < 4; ++d) c[d] = (d == face) ? rho : rho * e[k++];
            QuadPoint4 p;
            p.x1 = c[0];
            p.x2 = c[1];
            p.y1 = c[2];
            p.y2 = c[3];
            p.jacobian = rho * rho * rho;
            p.weight = g.weights[i1] * g.weights[i2] * g.weights[i3] *
                       g.weights[i4] * rho * rho * rho;
            rule.points.push_back(p);
          }
        }
      }
    }
  }
  return rule;
}

}  // namespace

int singular_subdomains(PairCase pair_case) {
  switch (pair_case) {
    case PairCase::Identical:      return 8;
    case PairCase::EdgeAdjacent:   return 6;
    case PairCase::VertexAdjacent: return 4;
    default:
      throw ValidationError("singular_subdomains: pair is not adjacent");
  }
}

const TensorRule4D& singular_rule(PairCase pair_case, int q) {
  if (pair_case != PairCase::Identical && pair_case != PairCase::EdgeAdjacent &&
      pair_case != PairCase::VertexAdjacent)
    throw ValidationError("singular_rule: pair is not adjacent");
  static std::map<std::pair<int, int>, TensorRule4D> cache;
  static std::mutex mutex;
  const std::pair<int, int> key{static_cast<int>(pair_case), q};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const GaussRule1d& g = gauss_rule(q);
    TensorRule4D rule;
    switch (pair_case) {
      case PairCase::Identical:    rule = build_identical(g); break;
      case PairCase::EdgeAdjacent: rule = build_edge(g); break;
      default:                     rule = build_vertex(g); break;
    }
    it = cache.emplace(key, std::move(rule)).first;
  }
  return it->second;
}

}  // namespace aefie
