#include "aefie/operators.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <thread>
#include <utility>

namespace aefie {

Complex greens_kernel(const Vec3& x, const Vec3& y, double kappa) {
  const double r = (x - y).norm();
  if (!(r > 0.0)) {
    throw NumericalError("greens_kernel: evaluation at coincident points");
  }
  const double phase = kappa * r;
  return Complex(std::cos(phase), -std::sin(phase)) / (4.0 * kPi * r);
}

namespace {

constexpr int kChunk = 1024;  // rule points per block in the singular path

/// Canonical rule point -> element-local coordinates on both sides.  The
/// singular rules place the shared feature at matching canonical positions;
/// the adapted-point maps rotate that into each element's own frame, and a
/// reversed interface flips the along-edge coordinate of the second element.
void map_rule_point(const PairClassification& cls, const QuadPoint4& pt,
                    Vec2& a, Vec2& b) {
  switch (cls.kind) {
    case PairCase::Identical:
      a = Vec2(pt.x1, pt.x2);
      b = Vec2(pt.y1, pt.y2);
      break;
    case PairCase::EdgeAdjacent: {
      a = edge_adapted_point(cls.edge_a, pt.x1, pt.x2);
      const double along = cls.reversed ? 1.0 - pt.y1 : pt.y1;
      b = edge_adapted_point(cls.edge_b, along, pt.y2);
      break;
    }
    case PairCase::VertexAdjacent:
      a = corner_adapted_point(cls.corner_a, pt.x1, pt.x2);
      b = corner_adapted_point(cls.corner_b, pt.y1, pt.y2);
      break;
    default:
      throw ValidationError("map_rule_point: called for a regular pair");
  }
}

/// Per-(element, rule degree) tables for the regular tensor rules: physical
/// positions, parameter weights (element area folded in), and the basis values
/// the two pairings need.  alpha[c] holds component c of the unnormalized
/// surface current t_u vhat_u + t_v vhat_v per local dof; the metric factors
/// of the Piola and density maps cancel against the surface measures, so no
/// Jacobians appear anywhere in the assembled integrands.
struct ElementTable {
  std::vector<Vec3> points;
  Eigen::VectorXd weights;
  std::array<Eigen::MatrixXd, 3> alpha;
  Eigen::MatrixXd phi;
};

struct PairPlan {
  int ea, eb;
  PairClassification cls;
  int degree;  // tensor degree for regular pairs, unused for singular ones
};

struct PairResult {
  Eigen::MatrixXcd L, P;
};

class KernelAssembler {
 public:
  KernelAssembler(const DiscreteSpace* form1, const DiscreteSpace* form2,
                  double frequency, const Medium& medium,
                  const AssemblyConfig& config)
      : form1_(form1),
        form2_(form2),
        config_(config),
        kappa_(wavenumber(frequency, medium)),
        mu_(medium.mu),
        inv_epsilon_(1.0 / medium.epsilon) {
    const DiscreteSpace& lead = form1_ ? *form1_ : *form2_;
    geometry_ = &lead.geometry();
    elements_ = &lead.elements();
    degree_ = lead.degree();
    check_spaces();
  }

  void run(Eigen::MatrixXcd* L, Eigen::MatrixXcd* P) {
    plan_pairs();
    build_tables();
    if (L) *L = Eigen::MatrixXcd::Zero(form1_->num_dofs(), form1_->num_dofs());
    if (P) *P = Eigen::MatrixXcd::Zero(form2_->num_dofs(), form2_->num_dofs());

    const int total = static_cast<int>(plans_.size());
    const int workers = std::max(1, config_.workers);
    if (workers == 1) {
      PairResult result;
      for (int k = 0; k < total; ++k) {
        compute_pair(plans_[k], result);
        scatter(plans_[k], result, L, P);
      }
      return;
    }

    // Batched two-phase schedule: workers fill per-pair buffers, then one
    // serial scatter in pair order.  The result is bitwise identical for any
    // worker count because each pair's arithmetic is self-contained.
    constexpr int kBatch = 256;
    std::vector<PairResult> results(kBatch);
    for (int start = 0; start < total; start += kBatch) {
      const int count = std::min(kBatch, total - start);
      std::atomic<int> next{0};
      auto work = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          compute_pair(plans_[start + i], results[i]);
        }
      };
      std::vector<std::thread> pool;
      pool.reserve(workers - 1);
      for (int w = 1; w < workers; ++w) pool.emplace_back(work);
      work();
      for (auto& t : pool) t.join();
      for (int i = 0; i < count; ++i) {
        scatter(plans_[start + i], results[i], L, P);
      }
    }
  }

 private:
  void check_spaces() const {
    if (form1_ && form1_->kind() != SpaceKind::Form1) {
      throw ValidationError("kernel blocks: current space must be Form1");
    }
    if (form2_ && form2_->kind() != SpaceKind::Form2) {
      throw ValidationError("kernel blocks: density space must be Form2");
    }
    if (form1_ && form2_) {
      const auto& ea = form1_->elements();
      const auto& eb = form2_->elements();
      bool match = ea.size() == eb.size();
      for (std::size_t i = 0; match && i < ea.size(); ++i) {
        match = ea[i].patch == eb[i].patch && ea[i].u0 == eb[i].u0 &&
                ea[i].u1 == eb[i].u1 && ea[i].v0 == eb[i].v0 &&
                ea[i].v1 == eb[i].v1;
      }
      if (!match || form1_->degree() != form2_->degree()) {
        throw ValidationError(
            "kernel blocks: spaces disagree on the element grid");
      }
    }
  }

  void plan_pairs() {
    const auto& els = *elements_;
    const int n = static_cast<int>(els.size());
    const int q0 = config_.quadrature.resolve_base(degree_);
    plans_.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
    bool singular_case[3] = {false, false, false};
    std::vector<std::map<int, ElementTable>> empty(n);
    tables_.swap(empty);
    for (int ea = 0; ea < n; ++ea) {
      for (int eb = ea; eb < n; ++eb) {
        PairPlan plan;
        plan.ea = ea;
        plan.eb = eb;
        plan.cls = classify_pair(els[ea], els[eb]);
        plan.degree = 0;
        switch (plan.cls.kind) {
          case PairCase::Identical:
            singular_case[0] = true;
            break;
          case PairCase::EdgeAdjacent:
            singular_case[1] = true;
            break;
          case PairCase::VertexAdjacent:
            singular_case[2] = true;
            break;
          default: {
            const double h = std::max(els[ea].diameter, els[eb].diameter);
            plan.degree = select_degree(plan.cls.distance, h, q0,
                                        config_.quadrature.alpha);
            tables_[ea].emplace(plan.degree, ElementTable{});
            tables_[eb].emplace(plan.degree, ElementTable{});
            break;
          }
        }
        plans_.push_back(std::move(plan));
      }
    }
    // Touch every cached rule once while still serial.
    if (singular_case[0])
      singular_rule(PairCase::Identical, config_.quadrature.singular_degree);
    if (singular_case[1])
      singular_rule(PairCase::EdgeAdjacent, config_.quadrature.singular_degree);
    if (singular_case[2])
      singular_rule(PairCase::VertexAdjacent,
                    config_.quadrature.singular_degree);
  }

  void build_tables() {
    const auto& els = *elements_;
    for (int e = 0; e < static_cast<int>(els.size()); ++e) {
      for (auto& [q, table] : tables_[e]) fill_table(e, q, table);
    }
  }

  void fill_table(int e, int q, ElementTable& table) const {
    const Element& el = (*elements_)[e];
    const NurbsPatch& patch = geometry_->patches[el.patch];
    const GaussRule1d& rule = gauss_rule(q);
    const double hu = el.u1 - el.u0;
    const double hv = el.v1 - el.v0;
    const int npts = q * q;
    table.points.resize(npts);
    table.weights.resize(npts);
    const int nj = form1_ ? form1_->num_local_dofs() : 0;
    const int np = form2_ ? form2_->num_local_dofs() : 0;
    if (form1_) {
      for (auto& mat : table.alpha) mat.resize(nj, npts);
    }
    if (form2_) table.phi.resize(np, npts);
    std::vector<double> basis(std::max(3 * nj, np));
    for (int jv = 0; jv < q; ++jv) {
      for (int ju = 0; ju < q; ++ju) {
        const int idx = jv * q + ju;
        const double u = el.u0 + hu * rule.points[ju];
        const double v = el.v0 + hv * rule.points[jv];
        const SurfaceFrame frame = patch.frame(u, v);
        table.points[idx] = frame.point;
        table.weights[idx] = rule.weights[ju] * rule.weights[jv] * hu * hv;
        if (form1_) {
          form1_->eval_element_basis(e, u, v, basis.data());
          for (int i = 0; i < nj; ++i) {
            for (int c = 0; c < 3; ++c) {
              table.alpha[c](i, idx) = frame.du[c] * basis[3 * i] +
                                       frame.dv[c] * basis[3 * i + 1];
            }
          }
        }
        if (form2_) {
          form2_->eval_element_basis(e, u, v, basis.data());
          for (int i = 0; i < np; ++i) table.phi(i, idx) = basis[i];
        }
      }
    }
  }

  void compute_pair(const PairPlan& plan, PairResult& out) const {
    switch (plan.cls.kind) {
      case PairCase::Near:
      case PairCase::Far:
        compute_regular(plan, out);
        break;
      default:
        compute_singular(plan, out);
        break;
    }
  }

  void compute_regular(const PairPlan& plan, PairResult& out) const {
    const ElementTable& ta = tables_[plan.ea].at(plan.degree);
    const ElementTable& tb = tables_[plan.eb].at(plan.degree);
    const int na = static_cast<int>(ta.points.size());
    const int nb = static_cast<int>(tb.points.size());
    Eigen::MatrixXd gre(na, nb), gim(na, nb);
    for (int s = 0; s < na; ++s) {
      for (int t = 0; t < nb; ++t) {
        const Complex g = greens_kernel(ta.points[s], tb.points[t], kappa_);
        const double w = ta.weights[s] * tb.weights[t];
        gre(s, t) = w * g.real();
        gim(s, t) = w * g.imag();
      }
    }
    if (form1_) {
      const int nj = form1_->num_local_dofs();
      Eigen::MatrixXd lre = Eigen::MatrixXd::Zero(nj, nj);
      Eigen::MatrixXd lim = Eigen::MatrixXd::Zero(nj, nj);
      for (int c = 0; c < 3; ++c) {
        lre.noalias() += ta.alpha[c] * (gre * tb.alpha[c].transpose());
        lim.noalias() += ta.alpha[c] * (gim * tb.alpha[c].transpose());
      }
      out.L.resize(nj, nj);
      out.L.real() = mu_ * lre;
      out.L.imag() = mu_ * lim;
    }
    if (form2_) {
      const int np = form2_->num_local_dofs();
      out.P.resize(np, np);
      out.P.real() = inv_epsilon_ * (ta.phi * (gre * tb.phi.transpose()));
      out.P.imag() = inv_epsilon_ * (ta.phi * (gim * tb.phi.transpose()));
    }
  }

  void compute_singular(const PairPlan& plan, PairResult& out) const {
    const auto& els = *elements_;
    const Element& ea = els[plan.ea];
    const Element& eb = els[plan.eb];
    const NurbsPatch& pa = geometry_->patches[ea.patch];
    const NurbsPatch& pb = geometry_->patches[eb.patch];
    const TensorRule4D& rule =
        singular_rule(plan.cls.kind, config_.quadrature.singular_degree);
    const double area =
        (ea.u1 - ea.u0) * (ea.v1 - ea.v0) * (eb.u1 - eb.u0) * (eb.v1 - eb.v0);

    const int nj = form1_ ? form1_->num_local_dofs() : 0;
    const int np = form2_ ? form2_->num_local_dofs() : 0;
    Eigen::MatrixXd lre, lim, pre, pim;
    std::array<Eigen::MatrixXd, 3> aa, ab;
    Eigen::MatrixXd fa, fb;
    if (form1_) {
      lre = Eigen::MatrixXd::Zero(nj, nj);
      lim = Eigen::MatrixXd::Zero(nj, nj);
      for (int c = 0; c < 3; ++c) {
        aa[c].resize(nj, kChunk);
        ab[c].resize(nj, kChunk);
      }
    }
    if (form2_) {
      pre = Eigen::MatrixXd::Zero(np, np);
      pim = Eigen::MatrixXd::Zero(np, np);
      fa.resize(np, kChunk);
      fb.resize(np, kChunk);
    }
    Eigen::VectorXd wre(kChunk), wim(kChunk);
    std::vector<double> basis(std::max(3 * nj, np));

    const int total = static_cast<int>(rule.points.size());
    for (int start = 0; start < total; start += kChunk) {
      const int m = std::min(kChunk, total - start);
      for (int k = 0; k < m; ++k) {
        const QuadPoint4& pt = rule.points[start + k];
        Vec2 xa, xb;
        map_rule_point(plan.cls, pt, xa, xb);
        const double ua = ea.u0 + (ea.u1 - ea.u0) * xa[0];
        const double va = ea.v0 + (ea.v1 - ea.v0) * xa[1];
        const double ub = eb.u0 + (eb.u1 - eb.u0) * xb[0];
        const double vb = eb.v0 + (eb.v1 - eb.v0) * xb[1];
        const SurfaceFrame fra = pa.frame(ua, va);
        const SurfaceFrame frb = pb.frame(ub, vb);
        const Complex g = greens_kernel(fra.point, frb.point, kappa_);
        const double w = pt.weight * area;
        wre[k] = w * g.real();
        wim[k] = w * g.imag();
        if (form1_) {
          form1_->eval_element_basis(plan.ea, ua, va, basis.data());
          for (int i = 0; i < nj; ++i) {
            for (int c = 0; c < 3; ++c) {
              aa[c](i, k) =
                  fra.du[c] * basis[3 * i] + fra.dv[c] * basis[3 * i + 1];
            }
          }
          form1_->eval_element_basis(plan.eb, ub, vb, basis.data());
          for (int i = 0; i < nj; ++i) {
            for (int c = 0; c < 3; ++c) {
              ab[c](i, k) =
                  frb.du[c] * basis[3 * i] + frb.dv[c] * basis[3 * i + 1];
            }
          }
        }
        if (form2_) {
          form2_->eval_element_basis(plan.ea, ua, va, basis.data());
          for (int i = 0; i < np; ++i) fa(i, k) = basis[i];
          form2_->eval_element_basis(plan.eb, ub, vb, basis.data());
          for (int i = 0; i < np; ++i) fb(i, k) = basis[i];
        }
      }
      const auto dre = wre.head(m).asDiagonal();
      const auto dim = wim.head(m).asDiagonal();
      if (form1_) {
        for (int c = 0; c < 3; ++c) {
          const auto A = aa[c].leftCols(m);
          const auto B = ab[c].leftCols(m);
          lre.noalias() += A * (dre * B.transpose());
          lim.noalias() += A * (dim * B.transpose());
        }
      }
      if (form2_) {
        const auto A = fa.leftCols(m);
        const auto B = fb.leftCols(m);
        pre.noalias() += A * (dre * B.transpose());
        pim.noalias() += A * (dim * B.transpose());
      }
    }
    if (form1_) {
      out.L.resize(nj, nj);
      out.L.real() = mu_ * lre;
      out.L.imag() = mu_ * lim;
    }
    if (form2_) {
      out.P.resize(np, np);
      out.P.real() = inv_epsilon_ * pre;
      out.P.imag() = inv_epsilon_ * pim;
    }
  }

  /// Adds the pair block and, for distinct elements, its transpose: the
  /// kernel is symmetric, so the swapped pair's block is exactly the
  /// transpose and is never recomputed.
  void scatter(const PairPlan& plan, const PairResult& result,
               Eigen::MatrixXcd* L, Eigen::MatrixXcd* P) const {
    if (L) {
      const auto& da = form1_->element_dofs(plan.ea);
      const auto& db = form1_->element_dofs(plan.eb);
      for (std::size_t i = 0; i < da.size(); ++i) {
        for (std::size_t j = 0; j < db.size(); ++j) {
          (*L)(da[i].global, db[j].global) += result.L(i, j);
        }
      }
      if (plan.ea != plan.eb) {
        for (std::size_t i = 0; i < da.size(); ++i) {
          for (std::size_t j = 0; j < db.size(); ++j) {
            (*L)(db[j].global, da[i].global) += result.L(i, j);
          }
        }
      }
    }
    if (P) {
      const auto& da = form2_->element_dofs(plan.ea);
      const auto& db = form2_->element_dofs(plan.eb);
      for (std::size_t i = 0; i < da.size(); ++i) {
        for (std::size_t j = 0; j < db.size(); ++j) {
          (*P)(da[i].global, db[j].global) += result.P(i, j);
        }
      }
      if (plan.ea != plan.eb) {
        for (std::size_t i = 0; i < da.size(); ++i) {
          for (std::size_t j = 0; j < db.size(); ++j) {
            (*P)(db[j].global, da[i].global) += result.P(i, j);
          }
        }
      }
    }
  }

  const DiscreteSpace* form1_;
  const DiscreteSpace* form2_;
  AssemblyConfig config_;
  double kappa_;
  double mu_;
  double inv_epsilon_;
  const MultiPatchGeometry* geometry_;
  const std::vector<Element>* elements_;
  int degree_;
  std::vector<PairPlan> plans_;
  std::vector<std::map<int, ElementTable>> tables_;
};

}  // namespace

void assemble_kernel_blocks(const DiscreteSpace& form1,
                            const DiscreteSpace& form2, double frequency,
                            const Medium& medium, const AssemblyConfig& config,
                            Eigen::MatrixXcd* L, Eigen::MatrixXcd* P) {
  if (!L && !P) return;
  KernelAssembler assembler(L ? &form1 : nullptr, P ? &form2 : nullptr,
                            frequency, medium, config);
  assembler.run(L, P);
}

Eigen::MatrixXcd assemble_single_layer(const DiscreteSpace& space,
                                       SingleLayerKind kind, double frequency,
                                       const Medium& medium,
                                       const AssemblyConfig& config) {
  Eigen::MatrixXcd block;
  if (kind == SingleLayerKind::VectorL) {
    KernelAssembler assembler(&space, nullptr, frequency, medium, config);
    assembler.run(&block, nullptr);
  } else {
    KernelAssembler assembler(nullptr, &space, frequency, medium, config);
    assembler.run(nullptr, &block);
  }
  return block;
}

LocalBlocks assemble_local(const DiscreteSpace& form1,
                           const DiscreteSpace& form2) {
  if (form1.kind() != SpaceKind::Form1 || form2.kind() != SpaceKind::Form2) {
    throw ValidationError("assemble_local: expects a Form1/Form2 pair");
  }
  if (form1.elements().size() != form2.elements().size() ||
      form1.degree() != form2.degree()) {
    throw ValidationError(
        "assemble_local: spaces disagree on the element grid");
  }
  LocalBlocks blocks;
  blocks.M = Eigen::MatrixXd::Zero(form2.num_dofs(), form2.num_dofs());
  blocks.S = Eigen::MatrixXd::Zero(form2.num_dofs(), form1.num_dofs());
  // The integrands are polynomial of coordinate degree < 2p in reference
  // coordinates (no rational weights appear), so p + 2 points are exact.
  const int q = form1.degree() + 2;
  const GaussRule1d& rule = gauss_rule(q);
  const int nj = form1.num_local_dofs();
  const int np = form2.num_local_dofs();
  std::vector<double> bj(3 * nj), bp(np);
  for (std::size_t e = 0; e < form1.elements().size(); ++e) {
    const Element& el = form1.elements()[e];
    const double hu = el.u1 - el.u0;
    const double hv = el.v1 - el.v0;
    const auto& dj = form1.element_dofs(static_cast<int>(e));
    const auto& dp = form2.element_dofs(static_cast<int>(e));
    for (int jv = 0; jv < q; ++jv) {
      for (int ju = 0; ju < q; ++ju) {
        const double u = el.u0 + hu * rule.points[ju];
        const double v = el.v0 + hv * rule.points[jv];
        const double w = rule.weights[ju] * rule.weights[jv] * hu * hv;
        form1.eval_element_basis(static_cast<int>(e), u, v, bj.data());
        form2.eval_element_basis(static_cast<int>(e), u, v, bp.data());
        for (int i = 0; i < np; ++i) {
          const double wi = w * bp[i];
          for (int j = 0; j < np; ++j) {
            blocks.M(dp[i].global, dp[j].global) += wi * bp[j];
          }
          for (int j = 0; j < nj; ++j) {
            blocks.S(dp[i].global, dj[j].global) += wi * bj[3 * j + 2];
          }
        }
      }
    }
  }
  return blocks;
}

Eigen::VectorXcd assemble_excitation(
    const DiscreteSpace& form1,
    const std::function<CVec3(const Vec3&)>& incident_field,
    ExcitationTrace trace, int degree) {
  if (form1.kind() != SpaceKind::Form1) {
    throw ValidationError("assemble_excitation: expects the current space");
  }
  if (!incident_field) {
    throw ValidationError("assemble_excitation: null incident field");
  }
  if (degree < 1) {
    throw ValidationError("assemble_excitation: degree must be positive");
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(form1.num_dofs());
  const GaussRule1d& rule = gauss_rule(degree);
  const int nj = form1.num_local_dofs();
  std::vector<double> basis(3 * nj);
  for (std::size_t e = 0; e < form1.elements().size(); ++e) {
    const Element& el = form1.elements()[e];
    const NurbsPatch& patch = form1.geometry().patches[el.patch];
    const double hu = el.u1 - el.u0;
    const double hv = el.v1 - el.v0;
    const auto& dofs = form1.element_dofs(static_cast<int>(e));
    for (int jv = 0; jv < degree; ++jv) {
      for (int ju = 0; ju < degree; ++ju) {
        const double u = el.u0 + hu * rule.points[ju];
        const double v2 = el.v0 + hv * rule.points[jv];
        const double w = rule.weights[ju] * rule.weights[jv] * hu * hv;
        const SurfaceFrame frame = patch.frame(u, v2);
        CVec3 field = incident_field(frame.point);
        if (trace == ExcitationTrace::Cross) {
          field = field.cross(frame.normal.cast<Complex>());
        }
        form1.eval_element_basis(static_cast<int>(e), u, v2, basis.data());
        for (int i = 0; i < nj; ++i) {
          const Vec3 current = frame.du * basis[3 * i] +
                               frame.dv * basis[3 * i + 1];
          v[dofs[i].global] += w * (field[0] * current[0] +
                                    field[1] * current[1] +
                                    field[2] * current[2]);
        }
      }
    }
  }
  return v;
}

CVec3 dipole_field(const Vec3& x, const DipoleSource& source, double frequency,
                   const Medium& medium) {
  const Vec3 d = x - source.position;
  const double r = d.norm();
  if (!(r > 0.0)) {
    throw ValidationError("dipole_field: evaluation at the source point");
  }
  const double kappa = wavenumber(frequency, medium);
  const double s = source.phase_sign;
  const Complex radial =
      Complex(std::cos(s * kappa * r), std::sin(s * kappa * r)) /
      (4.0 * kPi * medium.epsilon);
  const Vec3 n = d / r;
  const Vec3 transverse = n.cross(source.moment).cross(n);
  const Vec3 longitudinal = 3.0 * n * n.dot(source.moment) - source.moment;
  const Complex near_factor =
      1.0 / (r * r * r) - s * kImag * kappa / (r * r);
  return radial * (kappa * kappa / r * transverse.cast<Complex>() +
                   near_factor * longitudinal.cast<Complex>());
}

SystemBlocks assemble_blocks(
    const DiscreteSpace& form1, const DiscreteSpace& form2, double frequency,
    const Medium& medium, const AssemblyConfig& config,
    const std::function<CVec3(const Vec3&)>& incident_field,
    ExcitationTrace trace) {
  SystemBlocks blocks;
  assemble_kernel_blocks(form1, form2, frequency, medium, config, &blocks.L,
                         &blocks.P);
  LocalBlocks local = assemble_local(form1, form2);
  blocks.M = std::move(local.M);
  blocks.S = std::move(local.S);
  if (incident_field) {
    const int q = config.quadrature.resolve_base(form1.degree()) + 2;
    blocks.v_ex = assemble_excitation(form1, incident_field, trace, q);
  } else {
    blocks.v_ex = Eigen::VectorXcd::Zero(form1.num_dofs());
  }
  return blocks;
}

}  // namespace aefie
