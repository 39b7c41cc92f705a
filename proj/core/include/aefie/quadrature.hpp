#ifndef AEFIE_QUADRATURE_HPP_
#define AEFIE_QUADRATURE_HPP_

#include <vector>

#include "aefie/common.hpp"
#include "aefie/spaces.hpp"

namespace aefie {

/// Gauss-Legendre rule mapped to (0,1).
struct GaussRule1d {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule on (0,1), 1 <= n <= 64.  The returned
/// reference stays valid for the program lifetime; lookups are thread-safe.
const GaussRule1d& gauss_rule(int n);

/// Mutual position of two elements of a discretization.
enum class PairCase { Identical, EdgeAdjacent, VertexAdjacent, Near, Far };

/// Classification result; the adjacency fields describe how the canonical
/// singular coordinates map onto the two elements.
struct PairClassification {
  PairCase kind;
  int edge_a = -1, edge_b = -1;  // EdgeAdjacent: local edges forming the interface
  bool reversed = false;         // edge parameters run in opposite directions
  int corner_a = -1, corner_b = -1;  // VertexAdjacent: the shared corner
  double distance = 0.0;  // min sampled point distance (Near/Far only)
};

/// Detects the mutual position of two elements.  Identical means the same
/// (patch, span) cell; edge and vertex adjacency are found by matching
/// physical corner points to 1e-9 m, which also works across patch
/// boundaries; otherwise the pair is Near (closer than the larger element
/// diameter) or Far.
PairClassification classify_pair(const Element& a, const Element& b);

/// Points per direction for a regular pair at distance d between elements of
/// diameter h: the base degree q0, increased logarithmically as the pair gets
/// closer (alpha doublings per halving of d below h, capped at d = h/4096).
int select_degree(double d, double h, int q0, double alpha);

/// One node of a rule on the product of two reference squares.
struct QuadPoint4 {
  double x1, x2;  // point in the test element (canonical coordinates)
  double y1, y2;  // point in the trial element (canonical coordinates)
  double weight;    // full quadrature weight (Gauss weights times jacobian)
  double jacobian;  // coordinate-transform jacobian alone; vanishes fast
                    // enough at the shared set to bound 1/|x-y|
};

struct TensorRule4D {
  std::vector<QuadPoint4> points;
};

/// Cached singular rule for an adjacent pair, built from the q-point Gauss
/// rule.  The coordinates are canonical: for Identical both squares coincide;
/// for EdgeAdjacent (x1, x2) = (a, b) with the shared edge at b = 0 and edge
/// parameter a running identically on both sides; for VertexAdjacent the
/// shared corner sits at the origin of both squares.  Callers reorient with
/// edge_adapted_point / corner_adapted_point.  Weights are positive and the
/// transformed 1/|x-y| integrand is bounded.  Near/Far is a misuse error.
const TensorRule4D& singular_rule(PairCase pair_case, int q);

/// Number of tensor subdomains behind a singular rule (point count is this
/// times q^4).
int singular_subdomains(PairCase pair_case);

/// Element-local coordinates of the edge-adapted point (a, b): edge parameter
/// a in [0,1], inward coordinate b with the edge at b = 0.
Vec2 edge_adapted_point(int edge, double a, double b);

/// Element-local coordinates of the corner-adapted point: the given corner
/// sits at the image of (0,0) and the two axes run along the incident edges.
Vec2 corner_adapted_point(int corner, double x1, double x2);

/// Ordered corner numbers (start, end) of an element edge, in the direction
/// of increasing edge parameter.
std::array<int, 2> edge_corners(int edge);

}  // namespace aefie

#endif  // AEFIE_QUADRATURE_HPP_
