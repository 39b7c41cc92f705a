#ifndef AEFIE_DRIVERS_HPP_
#define AEFIE_DRIVERS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "aefie/io.hpp"
#include "aefie/postprocess.hpp"
#include "aefie/system.hpp"

namespace aefie {

/// Structural description of a geometry and the spaces it would carry.
struct GeometryReport {
  std::string name;
  int num_patches = 0;
  int num_interfaces = 0;
  bool closed = false;
  /// Surface area by per-element Gauss quadrature of the measure.
  double area = 0.0;
  int num_currents = 0;
  int num_potentials = 0;
  /// Human-readable lines, one block per patch plus totals.
  std::vector<std::string> lines;
};

GeometryReport run_geominfo(const MultiPatchGeometry& geometry,
                            const RunConfig& config);

/// One full solve with its field comparison against the reference dipole.
struct SolveReport {
  int num_currents = 0;
  int num_potentials = 0;
  SolveResult solution;
  FieldError error;
  std::vector<Vec3> points;
  std::vector<CVec3> field;
  std::vector<CVec3> reference;
};

/// Assembles, equilibrates, solves, and samples the scattered field at the
/// configured frequency.  Writes solution.csv, field_samples.csv,
/// summary.csv, and resolved_config.txt into config.output_directory when
/// write_outputs is set; progress goes to `log`.
SolveReport run_solve(const MultiPatchGeometry& geometry,
                      const RunConfig& config, std::ostream& log,
                      bool write_outputs = true);

/// One frequency of a stability sweep: both the deflated and the undeflated
/// system are solved, conditioned, and compared against the reference field.
struct SweepRow {
  double frequency = 0.0;
  double cond_original = 0.0;
  double cond_deflated = 0.0;
  double residual_original = 0.0;
  double residual_deflated = 0.0;
  double error_original = 0.0;
  double error_deflated = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

/// Logarithmic frequency sweep from sweep.f_max down to sweep.f_min.  The
/// equilibration is computed once from the f_max assembly so the reported
/// condition numbers are comparable across frequencies.  Writes sweep.csv
/// and resolved_config.txt when write_outputs is set.
SweepReport run_sweep(const MultiPatchGeometry& geometry,
                      const RunConfig& config, std::ostream& log,
                      bool write_outputs = true);

/// One refinement level of a convergence study.
struct ConvergenceRow {
  int degree = 0;
  int level = 0;
  double h = 0.0;
  int num_currents = 0;
  int num_potentials = 0;
  FieldError error;
  /// Observed order between this level and the previous one (NaN on the
  /// first row).
  double rate = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  /// Least-squares slope of log2(error) against the level.
  double fitted_rate = 0.0;
};

/// Solves the configured problem on every requested level and reports the
/// pointwise field errors against the reference dipole.  Writes
/// convergence.csv and resolved_config.txt when write_outputs is set.
ConvergenceReport run_convergence(const MultiPatchGeometry& geometry,
                                  const RunConfig& config, std::ostream& log,
                                  bool write_outputs = true);

}  // namespace aefie

#endif  // AEFIE_DRIVERS_HPP_
