#include "aefie/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aefie {

namespace {

// Parameter point of edge `e` at edge coordinate t in [0,1].
Vec2 edge_parameter_point(int e, double t) {
  switch (e) {
    case kEdgeVMin: return {t, 0.0};
    case kEdgeUMax: return {1.0, t};
    case kEdgeVMax: return {t, 1.0};
    default:        return {0.0, t};  // kEdgeUMin
  }
}

// Sign of the outward reference normal-trace of the edge's through component:
// the u component points out of the patch at u=1 and into it at u=0, and
// likewise for v.
double outflux_sign(int e) {
  return (e == kEdgeUMax || e == kEdgeVMax) ? 1.0 : -1.0;
}

constexpr int kEdgeSamples = 6;
constexpr double kMatchTol = 1e-9;

std::array<Vec3, kEdgeSamples> sample_edge(const NurbsPatch& patch, int e) {
  std::array<Vec3, kEdgeSamples> points;
  for (int i = 0; i < kEdgeSamples; ++i) {
    const double t = static_cast<double>(i) / (kEdgeSamples - 1);
    const Vec2 uv = edge_parameter_point(e, t);
    points[i] = patch.point(uv[0], uv[1]);
  }
  return points;
}

bool curves_match(const std::array<Vec3, kEdgeSamples>& a,
                  const std::array<Vec3, kEdgeSamples>& b, bool reversed) {
  for (int i = 0; i < kEdgeSamples; ++i) {
    const int j = reversed ? kEdgeSamples - 1 - i : i;
    if ((a[i] - b[j]).norm() > kMatchTol) return false;
  }
  return true;
}

}  // namespace

std::vector<InterfaceEdge> detect_interfaces(const MultiPatchGeometry& geometry) {
  const int num_patches = geometry.num_patches();
  std::vector<std::array<Vec3, kEdgeSamples>> traces(4 * num_patches);
  for (int p = 0; p < num_patches; ++p)
    for (int e = 0; e < 4; ++e) traces[4 * p + e] = sample_edge(geometry.patches[p], e);

  std::vector<InterfaceEdge> interfaces;
  std::vector<int> match_count(4 * num_patches, 0);
  for (int ia = 0; ia < 4 * num_patches; ++ia) {
    for (int ib = ia + 1; ib < 4 * num_patches; ++ib) {
      bool forward = curves_match(traces[ia], traces[ib], false);
      bool backward = !forward && curves_match(traces[ia], traces[ib], true);
      if (!forward && !backward) continue;
      interfaces.push_back({ia / 4, ia % 4, ib / 4, ib % 4, backward});
      ++match_count[ia];
      ++match_count[ib];
    }
  }
  for (int i = 0; i < 4 * num_patches; ++i) {
    if (match_count[i] > 1)
      throw ValidationError("patch " + std::to_string(i / 4) + " edge " +
                            std::to_string(i % 4) +
                            " matches more than one other edge");
  }
  return interfaces;
}

namespace {

// Knot vectors of one component of the space on one patch.
std::pair<KnotVector, KnotVector> component_knots(SpaceKind kind, int comp,
                                                  int degree, int level) {
  const KnotVector full = KnotVector::uniform_open(degree, level);
  const KnotVector reduced = full.truncated();
  switch (kind) {
    case SpaceKind::Form0: return {full, full};
    case SpaceKind::Form1:
      return comp == 0 ? std::pair{full, reduced} : std::pair{reduced, full};
    default: return {reduced, reduced};
  }
}

// Pre-glue indices of the edge dofs carrying the normal trace on edge `e`,
// ordered by increasing edge parameter.
std::vector<int> edge_dof_list(const ComponentSpace& comp0,
                               const ComponentSpace& comp1, int e) {
  const bool u_edge = (e == kEdgeUMin || e == kEdgeUMax);
  const ComponentSpace& comp = u_edge ? comp0 : comp1;
  const int k1 = comp.knots_u.num_basis();
  const int k2 = comp.knots_v.num_basis();
  std::vector<int> dofs;
  if (u_edge) {
    const int iu = (e == kEdgeUMax) ? k1 - 1 : 0;
    dofs.reserve(k2);
    for (int j = 0; j < k2; ++j) dofs.push_back(comp.offset + j * k1 + iu);
  } else {
    const int iv = (e == kEdgeVMax) ? k2 - 1 : 0;
    dofs.reserve(k1);
    for (int j = 0; j < k1; ++j) dofs.push_back(comp.offset + iv * k1 + j);
  }
  return dofs;
}

}  // namespace

DiscreteSpace DiscreteSpace::build(SpaceKind kind,
                                   const MultiPatchGeometry& geometry,
                                   int degree, int level) {
  if (degree < 1) throw ValidationError("space degree must be at least 1");
  if (level < 0) throw ValidationError("refinement level must be nonnegative");

  DiscreteSpace space;
  space.kind_ = kind;
  space.degree_ = degree;
  space.level_ = level;
  space.geometry_ = &geometry;

  const int num_patches = geometry.num_patches();
  const int num_comps = space.num_components();

  // Per-patch component spaces with pre-glue offsets (patch-major,
  // component-major, then row-major over the tensor grid, u fastest).
  space.components_.reserve(num_patches * num_comps);
  int offset = 0;
  for (int p = 0; p < num_patches; ++p) {
    for (int c = 0; c < num_comps; ++c) {
      auto [ku, kv] = component_knots(kind, c, degree, level);
      ComponentSpace comp{std::move(ku), std::move(kv), offset};
      offset += comp.dim();
      space.components_.push_back(std::move(comp));
    }
  }
  space.num_preglue_ = offset;

  // Elements: the knot-span grid is the same for every component of a patch,
  // so take it from component 0's breakpoints.
  const auto& breaks_u = space.components_[0].knots_u.breakpoints();
  const auto& breaks_v = space.components_[0].knots_v.breakpoints();
  const int nu = static_cast<int>(breaks_u.size()) - 1;
  const int nv = static_cast<int>(breaks_v.size()) - 1;
  space.elements_.reserve(num_patches * nu * nv);
  for (int p = 0; p < num_patches; ++p) {
    const NurbsPatch& patch = geometry.patches[p];
    for (int ev = 0; ev < nv; ++ev) {
      for (int eu = 0; eu < nu; ++eu) {
        Element el;
        el.patch = p;
        el.span_u = eu;
        el.span_v = ev;
        el.u0 = breaks_u[eu];
        el.u1 = breaks_u[eu + 1];
        el.v0 = breaks_v[ev];
        el.v1 = breaks_v[ev + 1];
        el.corners[0] = patch.point(el.u0, el.v0);
        el.corners[1] = patch.point(el.u1, el.v0);
        el.corners[2] = patch.point(el.u1, el.v1);
        el.corners[3] = patch.point(el.u0, el.v1);
        el.center = patch.point(0.5 * (el.u0 + el.u1), 0.5 * (el.v0 + el.v1));
        el.diameter = 0.0;
        for (int i = 0; i < 4; ++i)
          for (int j = i + 1; j < 4; ++j)
            el.diameter =
                std::max(el.diameter, (el.corners[i] - el.corners[j]).norm());
        space.elements_.push_back(std::move(el));
      }
    }
  }

  // Glued numbering.  Form1 couples the normal-trace dofs across interfaces;
  // the scalar spaces stay patch-local.
  space.global_of_.assign(space.num_preglue_, -1);
  space.sign_of_.assign(space.num_preglue_, 1.0);
  space.interfaces_ = detect_interfaces(geometry);
  space.closed_ =
      static_cast<int>(space.interfaces_.size()) * 2 == 4 * num_patches;

  std::vector<int> link_target(space.num_preglue_, -1);
  std::vector<double> link_sign(space.num_preglue_, 1.0);
  if (kind == SpaceKind::Form1) {
    for (const InterfaceEdge& iface : space.interfaces_) {
      const auto list_a =
          edge_dof_list(space.component(iface.patch_a, 0),
                        space.component(iface.patch_a, 1), iface.edge_a);
      const auto list_b =
          edge_dof_list(space.component(iface.patch_b, 0),
                        space.component(iface.patch_b, 1), iface.edge_b);
      if (list_a.size() != list_b.size())
        throw ValidationError("non-conforming interface between patch " +
                              std::to_string(iface.patch_a) + " and patch " +
                              std::to_string(iface.patch_b));
      // A coefficient shared across the interface must produce equal and
      // opposite outward fluxes, so the partner side carries -o_a * o_b.
      const double sign =
          -outflux_sign(iface.edge_a) * outflux_sign(iface.edge_b);
      const int n = static_cast<int>(list_a.size());
      for (int j = 0; j < n; ++j) {
        const int a = list_a[j];
        const int b = list_b[iface.reversed ? n - 1 - j : j];
        link_target[b] = a;
        link_sign[b] = sign;
      }
    }
  }

  int next = 0;
  for (int i = 0; i < space.num_preglue_; ++i) {
    if (link_target[i] < 0) space.global_of_[i] = next++;
  }
  for (int i = 0; i < space.num_preglue_; ++i) {
    if (link_target[i] >= 0) {
      space.global_of_[i] = space.global_of_[link_target[i]];
      space.sign_of_[i] = link_sign[i];
    }
  }
  space.num_global_ = next;

  // Per-element dof lists: component-major, then iv-major, iu fastest.
  space.num_local_ = 0;
  for (int c = 0; c < num_comps; ++c) {
    const ComponentSpace& comp = space.components_[c];
    space.num_local_ += (comp.knots_u.degree() + 1) * (comp.knots_v.degree() + 1);
  }
  space.element_dofs_.reserve(space.elements_.size());
  for (const Element& el : space.elements_) {
    std::vector<LocalDof> dofs;
    dofs.reserve(space.num_local_);
    const double um = 0.5 * (el.u0 + el.u1);
    const double vm = 0.5 * (el.v0 + el.v1);
    for (int c = 0; c < num_comps; ++c) {
      const ComponentSpace& comp = space.component(el.patch, c);
      const int k1 = comp.knots_u.num_basis();
      const int first_u = comp.knots_u.find_span(um) - comp.knots_u.degree();
      const int first_v = comp.knots_v.find_span(vm) - comp.knots_v.degree();
      for (int jv = 0; jv <= comp.knots_v.degree(); ++jv) {
        for (int ju = 0; ju <= comp.knots_u.degree(); ++ju) {
          const int iu = first_u + ju;
          const int iv = first_v + jv;
          const int preglue = comp.offset + iv * k1 + iu;
          dofs.push_back({space.global_of_[preglue], space.sign_of_[preglue],
                          c, iu, iv});
        }
      }
    }
    space.element_dofs_.push_back(std::move(dofs));
  }

  return space;
}

std::vector<int> DiscreteSpace::per_patch_dims() const {
  std::vector<int> dims(geometry_->num_patches(), 0);
  for (int p = 0; p < geometry_->num_patches(); ++p)
    for (int c = 0; c < num_components(); ++c) dims[p] += component(p, c).dim();
  return dims;
}

void DiscreteSpace::eval_element_basis(int element, double u, double v,
                                       double* out) const {
  const Element& el = elements_[element];
  const auto& dofs = element_dofs_[element];
  const int num_comps = num_components();
  double bu[kMaxDegree + 1], dbu[kMaxDegree + 1];
  double bv[kMaxDegree + 1], dbv[kMaxDegree + 1];
  int idx = 0;
  for (int c = 0; c < num_comps; ++c) {
    const ComponentSpace& comp = component(el.patch, c);
    const int pu = comp.knots_u.degree();
    const int pv = comp.knots_v.degree();
    const int first_u = comp.knots_u.eval_nonzero(u, bu, dbu);
    const int first_v = comp.knots_v.eval_nonzero(v, bv, dbv);
    const int count = (pu + 1) * (pv + 1);
    for (int k = 0; k < count; ++k, ++idx) {
      const LocalDof& dof = dofs[idx];
      const int ru = dof.iu - first_u;
      const int rv = dof.iv - first_v;
      const bool inside = (ru >= 0 && ru <= pu && rv >= 0 && rv <= pv);
      const double buu = inside ? bu[ru] : 0.0;
      const double bvv = inside ? bv[rv] : 0.0;
      if (kind_ == SpaceKind::Form1) {
        const double value = dof.sign * buu * bvv;
        if (c == 0) {
          out[3 * idx + 0] = value;
          out[3 * idx + 1] = 0.0;
          out[3 * idx + 2] = inside ? dof.sign * dbu[ru] * bvv : 0.0;
        } else {
          out[3 * idx + 0] = 0.0;
          out[3 * idx + 1] = value;
          out[3 * idx + 2] = inside ? dof.sign * buu * dbv[rv] : 0.0;
        }
      } else {
        out[idx] = dof.sign * buu * bvv;
      }
    }
  }
}

}  // namespace aefie
