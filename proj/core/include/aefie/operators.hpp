#ifndef AEFIE_OPERATORS_HPP_
#define AEFIE_OPERATORS_HPP_

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "aefie/common.hpp"
#include "aefie/quadrature.hpp"
#include "aefie/spaces.hpp"

namespace aefie {

/// Homogeneous-space kernel e^{-j kappa |x-y|} / (4 pi |x-y|).
/// Coincident points are a misuse error: singular pairs must go through the
/// regularizing rules instead.
Complex greens_kernel(const Vec3& x, const Vec3& y, double kappa);

/// Quadrature policy of the Galerkin assembly.
struct QuadratureConfig {
  int base_degree = 0;      // points per direction for far pairs; 0 = degree + 2
  double alpha = 1.0;       // logarithmic grading rate for near pairs
  int singular_degree = 10; // points per direction inside the singular rules

  int resolve_base(int space_degree) const {
    return base_degree > 0 ? base_degree : space_degree + 2;
  }
};

struct AssemblyConfig {
  QuadratureConfig quadrature;
  int workers = 1;
};

/// Which single-layer Galerkin block to assemble.
enum class SingleLayerKind { VectorL, ScalarP };

/// Kernel blocks in one sweep over element pairs: the inductive block
/// L_ij = mu * Int Int g_kappa nu_i . nu_j and the potential block
/// P_ij = (1/eps) * Int Int g_kappa phi_i phi_j, sharing kernel evaluations.
/// Either output may be null (the corresponding space reference is then
/// ignored).  Both spaces must discretize the same geometry at the same
/// refinement.  Matrices are complex symmetric; the upper element-pair
/// triangle is computed and mirrored.
void assemble_kernel_blocks(const DiscreteSpace& form1,
                            const DiscreteSpace& form2, double frequency,
                            const Medium& medium, const AssemblyConfig& config,
                            Eigen::MatrixXcd* L, Eigen::MatrixXcd* P);

/// Single-block convenience wrapper over assemble_kernel_blocks.
Eigen::MatrixXcd assemble_single_layer(const DiscreteSpace& space,
                                       SingleLayerKind kind, double frequency,
                                       const Medium& medium,
                                       const AssemblyConfig& config);

/// The frequency-independent local blocks, paired in reference coordinates
/// (the metric factors of the density and Piola maps cancel):
/// M_ij = Int phihat_i phihat_j du dv (SPD, patch-block diagonal) and
/// S_ij = Int phihat_i divhat nuhat_j du dv (the generalized incidence
/// matrix; its columns sum to zero on closed glued surfaces).
struct LocalBlocks {
  Eigen::MatrixXd M;
  Eigen::MatrixXd S;
};
LocalBlocks assemble_local(const DiscreteSpace& form1,
                           const DiscreteSpace& form2);

/// How the excitation pairs the incident field with the test functions:
/// Plain tests the field itself, Int E . nu_i; Cross tests the rotated trace,
/// Int (E x n) . nu_i.  Plain is the convention consistent with the L and P
/// pairings and is the default in the drivers; Cross is kept switchable.
enum class ExcitationTrace { Plain, Cross };

/// Excitation vector for an arbitrary incident field, one regular tensor
/// rule of `degree` points per direction per element.
Eigen::VectorXcd assemble_excitation(
    const DiscreteSpace& form1,
    const std::function<CVec3(const Vec3&)>& incident_field,
    ExcitationTrace trace, int degree);

/// Hertzian dipole source.  phase_sign selects the radial phase factor
/// e^{phase_sign * j kappa r}: -1 is the outgoing wave under the e^{+j omega t}
/// time convention and the default; +1 is the opposite convention, kept
/// switchable because the two appear in the literature and the convergence
/// experiment arbitrates (see README).
struct DipoleSource {
  Vec3 position;
  Vec3 moment;
  double phase_sign = -1.0;
};

/// Dipole E-field at x:
///   E(x) = e^{s j kappa r}/(4 pi eps) * [ kappa^2/r (n x p) x n
///          + (1/r^3 - s j kappa/r^2) (3 n (n.p) - p) ],
/// r = |x - x0|, n = (x - x0)/r, s = phase_sign.
CVec3 dipole_field(const Vec3& x, const DipoleSource& source, double frequency,
                   const Medium& medium);

/// All Galerkin blocks of the mixed current/potential system.
struct SystemBlocks {
  Eigen::MatrixXcd L;     // N_j x N_j
  Eigen::MatrixXcd P;     // N_phi x N_phi
  Eigen::MatrixXd M;      // N_phi x N_phi
  Eigen::MatrixXd S;      // N_phi x N_j
  Eigen::VectorXcd v_ex;  // N_j

  int num_currents() const { return static_cast<int>(L.rows()); }
  int num_potentials() const { return static_cast<int>(M.rows()); }
};

/// One-stop assembly of all blocks for a given excitation (pass a null
/// field for a zero right-hand side).
SystemBlocks assemble_blocks(
    const DiscreteSpace& form1, const DiscreteSpace& form2, double frequency,
    const Medium& medium, const AssemblyConfig& config,
    const std::function<CVec3(const Vec3&)>& incident_field,
    ExcitationTrace trace = ExcitationTrace::Plain);

}  // namespace aefie

#endif  // AEFIE_OPERATORS_HPP_
