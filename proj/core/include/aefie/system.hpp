#ifndef AEFIE_SYSTEM_HPP_
#define AEFIE_SYSTEM_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

#include "aefie/common.hpp"
#include "aefie/operators.hpp"
#include "aefie/spaces.hpp"

namespace aefie {

/// How condition numbers are estimated.  The dense SVD is exact but cubic in
/// the system size; the 1-norm variant combines the exact 1-norm of Z with a
/// Hager-style estimate of the 1-norm of its inverse from an LU factorization.
enum class ConditionEstimator { Svd, Norm1 };

/// Knobs of the frequency-scaled saddle-point system.
///
/// The block signs select among the algebraically equivalent sign conventions
/// for the potential unknown.  With the defaults the system reads
///   [ L         sign_s * S^T   ] [ J  ]   [ v  ]
///   [ P M^{-1}S sign_m * w^2 M ] [ X  ] = [ 0  ],
/// where the solved X relates to the scattered potential by Phi = -sign_s X.
/// Both signs must be equal for the system to stay a relabeling of the same
/// physical problem; the independent switches exist to study the alternative.
struct SystemConfig {
  double sign_s = 1.0;
  double sign_m = 1.0;
  bool deflation = true;
  ConditionEstimator estimator = ConditionEstimator::Svd;
  /// Equilibration anchor passed to compute_scaling; zero selects the
  /// self-balance frequency of the assembled operators.
  double scaling_reference = 0.0;
};

/// Two-sided diagonal equilibration with one scalar per block row and block
/// column.  Block-constant scaling keeps the low-frequency null direction
/// (0, 1) of the unscaled matrix along (0, 1), so deflation is unaffected.
struct SystemScaling {
  double row_current = 1.0;
  double row_potential = 1.0;
  double col_current = 1.0;
  double col_potential = 1.0;
};

/// Balances the block magnitudes of the system matrix on a log scale.  With
/// `reference_frequency` zero (the default) the mass block is weighted at the
/// self-balance frequency of the assembled operators; a positive value
/// anchors the balance there instead, exposing the conditioning degradation
/// below that frequency to floating-point estimators.  Either way the result
/// is frequency independent, so one scaling serves a whole sweep and the
/// reported condition numbers stay comparable between frequencies.
/// Equilibration is a diagonal relabeling of the unknowns; it never changes
/// the solution (deflated or not) and cannot mask the intrinsic dc null
/// vector.
SystemScaling compute_scaling(const SystemBlocks& blocks,
                              double reference_frequency = 0.0);

/// The assembled, equilibrated system at one frequency.  Z is the scaled
/// matrix without deflation; `a` is the deflation vector of the unscaled
/// unknowns.  `gamma` is the deflation strength trace(Z_n) / N of the
/// frequency-scaled system in medium-normalized coordinates (blocks L/mu,
/// S^T, eps P M^{-1} S, (omega/c)^2 M) -- the coordinates in which the block
/// magnitudes differ only by mesh factors, which pins the strength without
/// reference to any equilibration choice.  `deflation_coupling` is that
/// strength mapped into the equilibrated coordinates of Z; it is what
/// deflated_matrix subtracts along a a^T.
struct ScaledSystem {
  Eigen::MatrixXcd Z;
  Eigen::VectorXcd rhs;
  Eigen::VectorXd a;
  Complex gamma{0.0, 0.0};
  Complex deflation_coupling{0.0, 0.0};
  SystemScaling scaling;
  SystemConfig config;
  double frequency = 0.0;
  int num_currents = 0;
  int num_potentials = 0;
};

/// Cholesky factorization of a symmetric positive definite block-diagonal
/// matrix.  The irreducible diagonal blocks are detected from the sparsity
/// pattern and factored independently, so the cost stays linear in the number
/// of blocks; the mass matrix of a multipatch space is the intended input.
class BlockDiagonalCholesky {
 public:
  explicit BlockDiagonalCholesky(const Eigen::MatrixXd& matrix);

  /// Solves matrix * x = rhs for one or more right-hand sides.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// Block boundaries as offsets, size num_blocks() + 1.
  const std::vector<int>& offsets() const { return offsets_; }
  int num_blocks() const { return static_cast<int>(offsets_.size()) - 1; }

 private:
  std::vector<int> offsets_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
};

/// Vector of basis-function measures of the scalar space, a_i = integral of
/// the i-th partition-of-unity function over the parameter domain.  By the
/// partition of unity this equals M * 1 exactly; it spans the left coupling
/// of the low-frequency null space and drives the rank-one deflation.
Eigen::VectorXd deflation_vector(const DiscreteSpace& form2);

/// Assembles the equilibrated system matrix and right-hand side at the given
/// frequency from precomputed blocks.  No division by the frequency occurs
/// anywhere, so frequency zero is an ordinary input.  The medium enters only
/// the deflation strength: `gamma` is the trace of the system in
/// medium-normalized coordinates, making deflation independent of the
/// equilibration.
ScaledSystem build_scaled_system(const SystemBlocks& blocks, double frequency,
                                 const SystemConfig& config,
                                 const SystemScaling& scaling,
                                 const Medium& medium);

/// Returns Z - coupling * a a^T.  Subtracting the rank-one term removes the
/// constant-potential null direction at low frequency while perturbing the
/// physical solution only at discretization level, since the physical
/// potential is mean-free on a closed neutral body.
Eigen::MatrixXcd apply_deflation(const Eigen::MatrixXcd& Z,
                                 const Eigen::VectorXd& a, Complex coupling);

/// The deflated matrix of an assembled system: its Z minus the stored
/// deflation coupling along a a^T.
Eigen::MatrixXcd deflated_matrix(const ScaledSystem& system);

/// Direct solution of one assembled system.
struct SolveResult {
  /// Frequency-scaled current coefficients (the J-block of the solution).
  Eigen::VectorXcd current;
  /// Potential-block coefficients as solved; the scattered potential is
  /// -sign_s times this.
  Eigen::VectorXcd potential;
  /// Charge coefficients, recovered from P * r = -sign_s * M * X.
  Eigen::VectorXcd charge;
  /// Relative residual of the solved (possibly deflated) scaled system.
  double residual = 0.0;
  /// True when the residual meets the direct-solver accuracy contract.
  bool converged = false;
  /// Condition estimates, filled by drivers that request them.
  double cond_original = 0.0;
  double cond_deflated = 0.0;
};

/// Factors the (deflated, when enabled) matrix by partially pivoted LU,
/// solves, undoes the equilibration, and recovers the charge coefficients.
/// Throws NumericalError when the factorization encounters an exactly
/// singular pivot; a merely ill-conditioned solve is reported through the
/// residual and the converged flag instead.
SolveResult solve_direct(const ScaledSystem& system, const SystemBlocks& blocks);

/// Condition number of Z in the spectral norm (Svd) or an estimate in the
/// 1-norm (Norm1).  The SVD path refuses matrices larger than 4000 to keep
/// runtimes bounded; switch the estimator for larger systems.
double estimate_condition(const Eigen::MatrixXcd& Z, ConditionEstimator estimator);

}  // namespace aefie

#endif  // AEFIE_SYSTEM_HPP_
