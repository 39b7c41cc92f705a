#ifndef AEFIE_SPACES_HPP_
#define AEFIE_SPACES_HPP_

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "aefie/common.hpp"
#include "aefie/nurbs.hpp"

namespace aefie {

/// The three members of the discrete de Rham sequence on the reference square.
enum class SpaceKind { Form0, Form1, Form2 };

/// Patch edges in parameter space, numbered counterclockwise.
enum PatchEdge { kEdgeVMin = 0, kEdgeUMax = 1, kEdgeVMax = 2, kEdgeUMin = 3 };

/// A tensor-product knot-span cell of one patch.
struct Element {
  int patch;
  int span_u, span_v;          // element counters per direction
  double u0, u1, v0, v1;       // parameter rectangle
  std::array<Vec3, 4> corners; // physical images of (u0,v0),(u1,v0),(u1,v1),(u0,v1)
  Vec3 center;                 // physical image of the parameter center
  double diameter;             // max pairwise corner distance
};

/// One local shape function of an element: tensor indices within a component
/// plus its glued global index and orientation sign.
struct LocalDof {
  int global;
  double sign;
  int component;  // 0/1 for Form1, always 0 for scalar kinds
  int iu, iv;     // basis indices in the component's knot vectors
};

/// One scalar component of a space on one patch (pair of knot vectors).
struct ComponentSpace {
  KnotVector knots_u;
  KnotVector knots_v;
  int offset;  // pre-glue numbering offset of this (patch, component) block

  int dim() const { return knots_u.num_basis() * knots_v.num_basis(); }
};

/// An interface between two patch edges, detected geometrically.
struct InterfaceEdge {
  int patch_a, edge_a;
  int patch_b, edge_b;
  bool reversed;  // edge parameters run in opposite directions
};

/// Discrete spline space on a multipatch geometry: per-patch tensor-product
/// components, element list, and the glued global numbering (normal-trace
/// continuity for Form1; Form0 and Form2 stay patch-local).
class DiscreteSpace {
 public:
  static DiscreteSpace build(SpaceKind kind, const MultiPatchGeometry& geometry,
                             int degree, int level);

  SpaceKind kind() const { return kind_; }
  int degree() const { return degree_; }
  int level() const { return level_; }
  const MultiPatchGeometry& geometry() const { return *geometry_; }

  int num_dofs() const { return num_global_; }
  int num_preglue_dofs() const { return num_preglue_; }
  int num_components() const { return kind_ == SpaceKind::Form1 ? 2 : 1; }
  const ComponentSpace& component(int patch, int comp) const {
    return components_[patch * num_components() + comp];
  }
  std::vector<int> per_patch_dims() const;

  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<LocalDof>& element_dofs(int element) const {
    return element_dofs_[element];
  }
  int num_local_dofs() const { return num_local_; }

  /// Values per local dof at one patch-parameter point inside the element, in
  /// the order of element_dofs().  Form1 writes 3 doubles per dof (vhat_u,
  /// vhat_v, divhat, as patch-parameter fields); scalar kinds write 1 (the
  /// reference value).  Signs from the dof map are already folded in.
  void eval_element_basis(int element, double u, double v, double* out) const;

  /// Pre-glue index -> (global index, sign); exposed for tests.
  int preglue_global(int preglue) const { return global_of_[preglue]; }
  double preglue_sign(int preglue) const { return sign_of_[preglue]; }

  const std::vector<InterfaceEdge>& interfaces() const { return interfaces_; }
  /// True if every patch edge is part of an interface (no free boundary).
  bool closed() const { return closed_; }

 private:
  SpaceKind kind_;
  int degree_;
  int level_;
  const MultiPatchGeometry* geometry_;
  int num_local_;
  int num_preglue_;
  int num_global_;
  bool closed_;
  std::vector<ComponentSpace> components_;
  std::vector<Element> elements_;
  std::vector<std::vector<LocalDof>> element_dofs_;
  std::vector<int> global_of_;
  std::vector<double> sign_of_;
  std::vector<InterfaceEdge> interfaces_;
};

/// Geometric interface detection: samples each patch edge at the endpoints
/// plus four interior points and matches curves to 1e-9 m, both orientations.
/// Exposed separately for the topology tests.
std::vector<InterfaceEdge> detect_interfaces(const MultiPatchGeometry& geometry);

}  // namespace aefie

#endif  // AEFIE_SPACES_HPP_
