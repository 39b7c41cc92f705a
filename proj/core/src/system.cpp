#include "aefie/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "aefie/quadrature.hpp"

namespace aefie {

namespace {

double block_log_norm(double max_abs) {
  return std::log10(std::max(max_abs, 1e-300));
}

void check_block_shapes(const SystemBlocks& blocks) {
  const auto nj = blocks.num_currents();
  const auto np = blocks.num_potentials();
  if (nj <= 0 || np <= 0) {
    throw ValidationError("system blocks are empty");
  }
  if (blocks.L.rows() != nj || blocks.L.cols() != nj ||
      blocks.P.rows() != np || blocks.P.cols() != np ||
      blocks.S.rows() != np || blocks.S.cols() != nj ||
      blocks.M.rows() != np || blocks.M.cols() != np ||
      blocks.v_ex.size() != nj) {
    throw ValidationError("system blocks have inconsistent shapes");
  }
}

}  // namespace

BlockDiagonalCholesky::BlockDiagonalCholesky(const Eigen::MatrixXd& matrix) {
  const int n = static_cast<int>(matrix.rows());
  if (n == 0 || matrix.cols() != n) {
    throw ValidationError("block Cholesky needs a nonempty square matrix");
  }
  offsets_.push_back(0);
  int start = 0;
  while (start < n) {
    // Grow the block until no entry couples it to later indices.
    int end = start + 1;
    for (int j = start; j < end; ++j) {
      for (int i = n - 1; i >= end; --i) {
        if (matrix(i, j) != 0.0 || matrix(j, i) != 0.0) {
          end = i + 1;
          break;
        }
      }
    }
    const int len = end - start;
    factors_.emplace_back(matrix.block(start, start, len, len));
    if (factors_.back().info() != Eigen::Success) {
      throw NumericalError("diagonal block at offset " + std::to_string(start) +
                           " is not positive definite");
    }
    offsets_.push_back(end);
    start = end;
  }
}

Eigen::MatrixXd BlockDiagonalCholesky::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != offsets_.back()) {
    throw ValidationError("block Cholesky solve: right-hand side has " +
                          std::to_string(rhs.rows()) + " rows, expected " +
                          std::to_string(offsets_.back()));
  }
  Eigen::MatrixXd out(rhs.rows(), rhs.cols());
  for (std::size_t b = 0; b + 1 < offsets_.size(); ++b) {
    const int o = offsets_[b];
    const int len = offsets_[b + 1] - o;
    out.middleRows(o, len) = factors_[b].solve(rhs.middleRows(o, len));
  }
  return out;
}

Eigen::VectorXd deflation_vector(const DiscreteSpace& form2) {
  if (form2.kind() != SpaceKind::Form2) {
    throw ValidationError("deflation vector is defined on the scalar space");
  }
  const GaussRule1d& rule = gauss_rule(form2.degree() + 2);
  const int q = static_cast<int>(rule.points.size());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(form2.num_dofs());
  std::vector<double> values(form2.num_local_dofs());
  for (std::size_t e = 0; e < form2.elements().size(); ++e) {
    const Element& el = form2.elements()[e];
    const auto& dofs = form2.element_dofs(static_cast<int>(e));
    const double hu = el.u1 - el.u0;
    const double hv = el.v1 - el.v0;
    for (int jv = 0; jv < q; ++jv) {
      for (int ju = 0; ju < q; ++ju) {
        const double u = el.u0 + rule.points[ju] * hu;
        const double v = el.v0 + rule.points[jv] * hv;
        const double w = rule.weights[ju] * rule.weights[jv] * hu * hv;
        form2.eval_element_basis(static_cast<int>(e), u, v, values.data());
        for (std::size_t k = 0; k < dofs.size(); ++k) {
          a[dofs[k].global] += w * values[k];
        }
      }
    }
  }
  return a;
}

SystemScaling compute_scaling(const SystemBlocks& blocks,
                              double reference_frequency) {
  check_block_shapes(blocks);
  if (!(reference_frequency >= 0.0) ||
      !std::isfinite(reference_frequency)) {
    throw ValidationError("scaling reference frequency must be finite and "
                          "nonnegative");
  }
  BlockDiagonalCholesky mass(blocks.M);
  const Eigen::MatrixXd t = mass.solve(blocks.S);
  const Eigen::MatrixXcd coupling = blocks.P * t.cast<Complex>();

  const double l11 = block_log_norm(blocks.L.cwiseAbs().maxCoeff());
  const double l12 = block_log_norm(blocks.S.cwiseAbs().maxCoeff());
  const double l21 = block_log_norm(coupling.cwiseAbs().maxCoeff());
  // By default the mass block enters at the self-balance frequency, i.e. the
  // electrical size at which all four block exponents become compatible.
  // That keeps the scaling frequency independent, so a deflation coupling
  // derived from the matrix trace stays on the order of the balanced blocks
  // all the way to dc instead of collapsing with w^2.  An explicit reference
  // frequency instead anchors the balance at the top of a band of interest,
  // which makes the conditioning degradation inside that band visible to
  // floating-point estimators.
  const double w_ref = angular_frequency(reference_frequency);
  const double l22 =
      reference_frequency > 0.0
          ? block_log_norm(w_ref * w_ref * blocks.M.cwiseAbs().maxCoeff())
          : l12 + l21 - l11;

  // Least-squares balance of the block exponents a_i + b_j + l_ij -> 0 with
  // the split between row and column scales fixed by symmetry.  With the
  // compatible l22 the residual vanishes: the three assembled block norms end
  // up exactly equal.
  const double shared = -(l11 + l12 + l21 + l22) / 4.0;
  const double da = ((l21 + l22) - (l11 + l12)) / 2.0;
  const double db = ((l12 + l22) - (l11 + l21)) / 2.0;

  SystemScaling scaling;
  scaling.row_current = std::pow(10.0, (shared + da) / 2.0);
  scaling.row_potential = std::pow(10.0, (shared - da) / 2.0);
  scaling.col_current = std::pow(10.0, (shared + db) / 2.0);
  scaling.col_potential = std::pow(10.0, (shared - db) / 2.0);
  return scaling;
}

ScaledSystem build_scaled_system(const SystemBlocks& blocks, double frequency,
                                 const SystemConfig& config,
                                 const SystemScaling& scaling,
                                 const Medium& medium) {
  check_block_shapes(blocks);
  if (!(frequency >= 0.0) || !std::isfinite(frequency)) {
    throw ValidationError("frequency must be finite and nonnegative");
  }
  if (!(medium.epsilon > 0.0) || !(medium.mu > 0.0) ||
      !std::isfinite(medium.epsilon) || !std::isfinite(medium.mu)) {
    throw ValidationError("medium constants must be finite and positive");
  }
  const int nj = blocks.num_currents();
  const int np = blocks.num_potentials();
  const int n = nj + np;
  const double w = angular_frequency(frequency);

  ScaledSystem system;
  system.config = config;
  system.scaling = scaling;
  system.frequency = frequency;
  system.num_currents = nj;
  system.num_potentials = np;

  BlockDiagonalCholesky mass(blocks.M);
  const Eigen::MatrixXd t = mass.solve(blocks.S);

  system.Z.resize(n, n);
  system.Z.topLeftCorner(nj, nj) = blocks.L;
  system.Z.topRightCorner(nj, np) =
      (config.sign_s * blocks.S.transpose()).cast<Complex>();
  system.Z.bottomLeftCorner(np, nj) = blocks.P * t.cast<Complex>();
  system.Z.bottomRightCorner(np, np) =
      (config.sign_m * w * w * blocks.M).cast<Complex>();

  // Two-sided block equilibration; a block-scalar scaling commutes with the
  // deflation direction, so the deflated and undeflated systems see the same
  // coordinates.
  system.Z.topRows(nj) *= scaling.row_current;
  system.Z.bottomRows(np) *= scaling.row_potential;
  system.Z.leftCols(nj) *= scaling.col_current;
  system.Z.rightCols(np) *= scaling.col_potential;

  system.rhs = Eigen::VectorXcd::Zero(n);
  system.rhs.head(nj) = scaling.row_current * blocks.v_ex;

  // Basis measures of the scalar space: by the partition of unity this equals
  // the row sums of the mass matrix exactly.
  system.a = Eigen::VectorXd::Zero(n);
  system.a.tail(np) = blocks.M.rowwise().sum();

  // Deflation strength from the medium-normalized coordinates, where the
  // blocks read L/mu, S^T, eps P M^{-1} S and sign_m (w/c)^2 M and agree up
  // to mesh factors.  Equilibration then relabels the aa^T term with the
  // same scalars as Z, so the deflated solution does not depend on it.
  system.gamma = (blocks.L.trace() / medium.mu +
                  Complex(config.sign_m * medium.epsilon * medium.mu * w * w *
                              blocks.M.trace(),
                          0.0)) /
                 Complex(static_cast<double>(n), 0.0);
  system.deflation_coupling = system.gamma * scaling.row_potential *
                              scaling.col_potential /
                              (medium.epsilon * medium.mu);
  return system;
}

Eigen::MatrixXcd apply_deflation(const Eigen::MatrixXcd& Z,
                                 const Eigen::VectorXd& a, Complex coupling) {
  const int n = static_cast<int>(Z.rows());
  if (Z.cols() != n || a.size() != n) {
    throw ValidationError("deflation: matrix and vector sizes disagree");
  }
  Eigen::MatrixXcd deflated = Z;
  const Eigen::VectorXcd ac = a.cast<Complex>();
  deflated.noalias() -= coupling * (ac * ac.transpose());
  return deflated;
}

Eigen::MatrixXcd deflated_matrix(const ScaledSystem& system) {
  return apply_deflation(system.Z, system.a, system.deflation_coupling);
}

SolveResult solve_direct(const ScaledSystem& system, const SystemBlocks& blocks) {
  check_block_shapes(blocks);
  const int nj = system.num_currents;
  const int np = system.num_potentials;
  const int n = nj + np;
  if (blocks.num_currents() != nj || blocks.num_potentials() != np) {
    throw ValidationError("solve: blocks do not match the assembled system");
  }

  const Eigen::MatrixXcd matrix =
      system.config.deflation ? deflated_matrix(system) : system.Z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(matrix);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (min_pivot == 0.0 || !std::isfinite(min_pivot)) {
    std::ostringstream message;
    message << "system matrix is singular (smallest pivot " << min_pivot << ")";
    throw NumericalError(message.str());
  }

  SolveResult result;
  const Eigen::VectorXcd y = lu.solve(system.rhs);
  const double rhs_norm = system.rhs.norm();
  const double defect = (matrix * y - system.rhs).norm();
  result.residual = rhs_norm > 0.0 ? defect / rhs_norm : defect;
  result.converged = y.allFinite() && result.residual <= 1e-10;

  result.current = system.scaling.col_current * y.head(nj);
  result.potential = system.scaling.col_potential * y.tail(np);

  // The scattered potential is -sign_s times the solved block, so the charge
  // coefficients satisfy P r = -sign_s M X.
  const Eigen::VectorXcd charge_rhs =
      Complex(-system.config.sign_s, 0.0) *
      (blocks.M.cast<Complex>() * result.potential);
  Eigen::PartialPivLU<Eigen::MatrixXcd> charge_lu(blocks.P);
  result.charge = charge_lu.solve(charge_rhs);
  if (!result.charge.allFinite()) {
    throw NumericalError("charge recovery produced non-finite coefficients");
  }
  return result;
}

double estimate_condition(const Eigen::MatrixXcd& Z,
                          ConditionEstimator estimator) {
  const int n = static_cast<int>(Z.rows());
  if (n == 0 || Z.cols() != n) {
    throw ValidationError("condition estimate needs a nonempty square matrix");
  }
  if (estimator == ConditionEstimator::Svd) {
    if (n > 4000) {
      throw ValidationError(
          "dense SVD refused for size " + std::to_string(n) +
          " > 4000; use condition_estimator = norm1 for large systems");
    }
    Eigen::VectorXd sigma;
    if (n <= 128) {
      sigma = Eigen::JacobiSVD<Eigen::MatrixXcd>(Z).singularValues();
    } else {
      sigma = Eigen::BDCSVD<Eigen::MatrixXcd>(Z).singularValues();
    }
    const double smin = sigma(n - 1);
    if (smin <= 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    return sigma(0) / smin;
  }

  // Hager-style 1-norm estimate of the inverse on top of the exact 1-norm.
  const double norm_z = Z.cwiseAbs().colwise().sum().maxCoeff();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Z);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (min_pivot == 0.0) {
    return std::numeric_limits<double>::infinity();
  }

  Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, Complex(1.0 / n, 0.0));
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const Eigen::VectorXcd y = lu.solve(x);
    const double next = y.cwiseAbs().sum();
    if (iter > 0 && next <= estimate) {
      break;
    }
    estimate = next;
    Eigen::VectorXcd xi(n);
    for (int i = 0; i < n; ++i) {
      const double mag = std::abs(y(i));
      xi(i) = mag > 0.0 ? y(i) / mag : Complex(1.0, 0.0);
    }
    const Eigen::VectorXcd z = lu.adjoint().solve(xi);
    int j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= std::real(z.dot(x))) {
      break;
    }
    x.setZero();
    x(j) = Complex(1.0, 0.0);
  }

  // Safeguard against underestimates on adversarial patterns.
  Eigen::VectorXcd probe(n);
  for (int i = 0; i < n; ++i) {
    const double mag = 1.0 + (n > 1 ? static_cast<double>(i) / (n - 1) : 0.0);
    probe(i) = Complex(i % 2 == 0 ? mag : -mag, 0.0);
  }
  const double alt = 2.0 * lu.solve(probe).cwiseAbs().sum() / (3.0 * n);
  return norm_z * std::max(estimate, alt);
}

}  // namespace aefie
