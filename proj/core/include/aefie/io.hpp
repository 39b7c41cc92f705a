#ifndef AEFIE_IO_HPP_
#define AEFIE_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "aefie/common.hpp"
#include "aefie/nurbs.hpp"
#include "aefie/operators.hpp"
#include "aefie/system.hpp"

namespace aefie {

/// Reads a NURBS_MULTIPATCH version-1 stream.  Lines hold whitespace-matched
/// tokens; '#' starts a comment and blank lines are ignored.  Errors carry
/// the one-based line number of the offending token.
MultiPatchGeometry parse_geometry(std::istream& in, const std::string& name);

/// Opens and parses a geometry file; the geometry name is the file stem.
MultiPatchGeometry load_geometry(const std::string& path);

/// Logarithmic frequency grid of a stability sweep, f_max down to f_min.
struct SweepConfig {
  double f_max = 1.0;
  double f_min = 1.0e-9;
  int count = 10;
};

enum class ExcitationKind { Dipole, None };

/// Interior electric dipole driving the scattering problem.  `None` keeps the
/// assembled operators but zeroes the right-hand side, which is useful for
/// smoke-testing the pipeline.
struct ExcitationConfig {
  ExcitationKind kind = ExcitationKind::Dipole;
  Vec3 position{0.15, 0.1, 0.2};
  Vec3 moment{0.0, 0.0, 1.0};
  ExcitationTrace trace = ExcitationTrace::Plain;
  double phase_sign = -1.0;
};

/// Field-sampling controls shared by the solve, sweep and convergence runs.
struct PostprocessConfig {
  int num_points = 100;
  double radius = 2.0;
  int eval_degree = 0;
  double guard_factor = 1.0;
  /// The reference field is reference_sign times the incident dipole field;
  /// the default matches the shielding identity for an interior source.
  double reference_sign = -1.0;
};

/// Complete run description, parsed from a flat `key = value` file.
/// Unknown keys are hard errors so typos cannot silently fall back to
/// defaults.
struct RunConfig {
  double frequency = 3.0e6;
  int degree = 1;
  int level = 2;
  std::vector<int> convergence_levels{1, 2, 3};
  SweepConfig sweep;
  ExcitationConfig excitation;
  PostprocessConfig postprocess;
  Medium medium;
  QuadratureConfig quadrature;
  SystemConfig system;
  int workers = 1;
  std::string output_directory = ".";
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// The configuration echoed back as parseable `key = value` lines, so every
/// output directory records exactly what produced it.
std::vector<std::string> resolved_config_lines(const RunConfig& config);

/// Shortest decimal form that round-trips the value (up to 17 significant
/// digits), suitable for CSV cells.
std::string format_number(double value);

/// Writes a comma-separated table; every row must match the header width.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace aefie

#endif  // AEFIE_IO_HPP_
