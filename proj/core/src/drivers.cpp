#include "aefie/drivers.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "aefie/operators.hpp"
#include "aefie/quadrature.hpp"
#include "aefie/spaces.hpp"

namespace aefie {

namespace {

std::function<CVec3(const Vec3&)> incident_field(const RunConfig& config,
                                                 double frequency) {
  if (config.excitation.kind == ExcitationKind::None) {
    return [](const Vec3&) { return CVec3::Zero().eval(); };
  }
  DipoleSource source{config.excitation.position, config.excitation.moment,
                      config.excitation.phase_sign};
  const Medium medium = config.medium;
  return [source, frequency, medium](const Vec3& x) {
    return dipole_field(x, source, frequency, medium);
  };
}

void require_dipole(const RunConfig& config, const char* driver) {
  if (config.excitation.kind != ExcitationKind::Dipole) {
    throw ValidationError(std::string(driver) +
                          " requires a dipole excitation");
  }
}

AssemblyConfig assembly_config(const RunConfig& config) {
  AssemblyConfig assembly;
  assembly.quadrature = config.quadrature;
  assembly.workers = config.workers;
  return assembly;
}

FieldEvalConfig eval_config(const RunConfig& config) {
  FieldEvalConfig eval;
  eval.degree = config.postprocess.eval_degree;
  eval.guard_factor = config.postprocess.guard_factor;
  return eval;
}

std::vector<CVec3> reference_field(const RunConfig& config, double frequency,
                                   const std::vector<Vec3>& points) {
  const auto incident = incident_field(config, frequency);
  std::vector<CVec3> reference;
  reference.reserve(points.size());
  for (const Vec3& x : points) {
    reference.push_back(config.postprocess.reference_sign * incident(x));
  }
  return reference;
}

void ensure_output_directory(const RunConfig& config) {
  std::filesystem::create_directories(config.output_directory);
}

std::string output_path(const RunConfig& config, const std::string& file) {
  return (std::filesystem::path(config.output_directory) / file).string();
}

void write_resolved_config(const RunConfig& config) {
  const std::string path = output_path(config, "resolved_config.txt");
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open output file '" + path + "'");
  }
  for (const std::string& line : resolved_config_lines(config)) {
    out << line << '\n';
  }
}

double surface_area(const MultiPatchGeometry& geometry) {
  const GaussRule1d& rule = gauss_rule(12);
  double area = 0.0;
  for (const NurbsPatch& patch : geometry.patches) {
    for (std::size_t jv = 0; jv < rule.points.size(); ++jv) {
      for (std::size_t ju = 0; ju < rule.points.size(); ++ju) {
        const SurfaceFrame frame =
            patch.frame(rule.points[ju], rule.points[jv]);
        area += rule.weights[ju] * rule.weights[jv] * frame.measure;
      }
    }
  }
  return area;
}

/// Shared assembly + solve of one configuration; condition numbers are left
/// zero and filled by callers that want them.
struct SolveContext {
  DiscreteSpace form1;
  DiscreteSpace form2;
  SystemBlocks blocks;
  SystemScaling scaling;
  ScaledSystem system;
};

SolveContext assemble_and_scale(const MultiPatchGeometry& geometry,
                                const RunConfig& config, double frequency) {
  SolveContext context;
  context.form1 =
      DiscreteSpace::build(SpaceKind::Form1, geometry, config.degree,
                           config.level);
  context.form2 =
      DiscreteSpace::build(SpaceKind::Form2, geometry, config.degree,
                           config.level);
  context.blocks = assemble_blocks(context.form1, context.form2, frequency,
                                   config.medium, assembly_config(config),
                                   incident_field(config, frequency),
                                   config.excitation.trace);
  context.scaling =
      compute_scaling(context.blocks, config.system.scaling_reference);
  context.system = build_scaled_system(context.blocks, frequency,
                                       config.system, context.scaling,
                                       config.medium);
  return context;
}

double fit_rate(const std::vector<ConvergenceRow>& rows) {
  // Least squares of log2(error) against the level; the negated slope is the
  // observed order in the mesh size h = 2^-level.
  double sum_l = 0.0, sum_e = 0.0, sum_ll = 0.0, sum_le = 0.0;
  int count = 0;
  for (const ConvergenceRow& row : rows) {
    if (!(row.error.max_relative > 0.0) ||
        !std::isfinite(row.error.max_relative)) {
      continue;
    }
    const double level = row.level;
    const double log_error = std::log2(row.error.max_relative);
    sum_l += level;
    sum_e += log_error;
    sum_ll += level * level;
    sum_le += level * log_error;
    ++count;
  }
  if (count < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double denom = count * sum_ll - sum_l * sum_l;
  return -(count * sum_le - sum_l * sum_e) / denom;
}

}  // namespace

GeometryReport run_geominfo(const MultiPatchGeometry& geometry,
                            const RunConfig& config) {
  GeometryReport report;
  report.name = geometry.name;
  report.num_patches = geometry.num_patches();

  const auto form1 = DiscreteSpace::build(SpaceKind::Form1, geometry,
                                          config.degree, config.level);
  const auto form2 = DiscreteSpace::build(SpaceKind::Form2, geometry,
                                          config.degree, config.level);
  report.num_interfaces = static_cast<int>(form1.interfaces().size());
  report.closed = form1.closed();
  report.area = surface_area(geometry);
  report.num_currents = form1.num_dofs();
  report.num_potentials = form2.num_dofs();

  std::ostringstream head;
  head << "geometry " << report.name << ": " << report.num_patches
       << " patches, " << report.num_interfaces << " interfaces, "
       << (report.closed ? "closed" : "open") << ", area "
       << format_number(report.area);
  report.lines.push_back(head.str());
  for (int p = 0; p < geometry.num_patches(); ++p) {
    const NurbsPatch& patch = geometry.patches[p];
    std::ostringstream line;
    line << "  patch " << p << ": degrees (" << patch.degree_u() << ", "
         << patch.degree_v() << "), net " << patch.num_u() << " x "
         << patch.num_v();
    report.lines.push_back(line.str());
  }
  std::ostringstream tail;
  tail << "discretization degree " << config.degree << " level "
       << config.level << ": " << report.num_currents << " current dofs, "
       << report.num_potentials << " potential dofs, "
       << (report.num_currents + report.num_potentials) << " total";
  report.lines.push_back(tail.str());
  return report;
}

SolveReport run_solve(const MultiPatchGeometry& geometry,
                      const RunConfig& config, std::ostream& log,
                      bool write_outputs) {
  const double frequency = config.frequency;
  log << "solve: degree " << config.degree << " level " << config.level
      << " at " << format_number(frequency) << " Hz\n";
  SolveContext context = assemble_and_scale(geometry, config, frequency);

  SolveReport report;
  report.num_currents = context.system.num_currents;
  report.num_potentials = context.system.num_potentials;
  log << "solve: " << report.num_currents << " current dofs, "
      << report.num_potentials << " potential dofs\n";

  report.solution = solve_direct(context.system, context.blocks);
  report.solution.cond_original =
      estimate_condition(context.system.Z, config.system.estimator);
  report.solution.cond_deflated = estimate_condition(
      deflated_matrix(context.system), config.system.estimator);
  log << "solve: residual " << format_number(report.solution.residual)
      << (report.solution.converged ? "" : " (above the direct-solver bound)")
      << ", cond original " << format_number(report.solution.cond_original)
      << ", cond deflated " << format_number(report.solution.cond_deflated)
      << "\n";
  if (!config.system.deflation && report.solution.residual > 1e-10) {
    log << "solve: warning: undeflated solve at " << format_number(frequency)
        << " Hz is past the breakdown point (residual "
        << format_number(report.solution.residual) << ")\n";
  }

  report.points = fibonacci_sphere_points(config.postprocess.num_points,
                                          config.postprocess.radius);
  report.field = eval_scattered_field(
      context.form1, context.form2, report.solution.current,
      report.solution.charge, report.points, frequency, config.medium,
      eval_config(config));
  report.reference = reference_field(config, frequency, report.points);
  report.error = max_pointwise_error(report.field, report.reference);
  log << "solve: max field error " << format_number(report.error.max_absolute)
      << " absolute, " << format_number(report.error.max_relative)
      << " relative\n";

  if (write_outputs) {
    ensure_output_directory(config);
    write_resolved_config(config);

    std::vector<std::vector<std::string>> solution_rows;
    for (int i = 0; i < report.solution.current.size(); ++i) {
      solution_rows.push_back({std::to_string(i), "J",
                               format_number(report.solution.current[i].real()),
                               format_number(report.solution.current[i].imag())});
    }
    for (int i = 0; i < report.solution.potential.size(); ++i) {
      solution_rows.push_back(
          {std::to_string(i), "phi",
           format_number(report.solution.potential[i].real()),
           format_number(report.solution.potential[i].imag())});
    }
    write_csv(output_path(config, "solution.csv"),
              {"index", "kind", "real", "imag"}, solution_rows);

    std::vector<std::vector<std::string>> field_rows;
    for (std::size_t i = 0; i < report.points.size(); ++i) {
      const Vec3& x = report.points[i];
      const CVec3& e = report.field[i];
      const CVec3& r = report.reference[i];
      field_rows.push_back(
          {format_number(x.x()), format_number(x.y()), format_number(x.z()),
           format_number(e.x().real()), format_number(e.x().imag()),
           format_number(e.y().real()), format_number(e.y().imag()),
           format_number(e.z().real()), format_number(e.z().imag()),
           format_number(r.x().real()), format_number(r.x().imag()),
           format_number(r.y().real()), format_number(r.y().imag()),
           format_number(r.z().real()), format_number(r.z().imag()),
           format_number((e - r).norm())});
    }
    write_csv(output_path(config, "field_samples.csv"),
              {"x", "y", "z", "Ex_re", "Ex_im", "Ey_re", "Ey_im", "Ez_re",
               "Ez_im", "ref_Ex_re", "ref_Ex_im", "ref_Ey_re", "ref_Ey_im",
               "ref_Ez_re", "ref_Ez_im", "abs_error"},
              field_rows);

    write_csv(
        output_path(config, "summary.csv"),
        {"frequency_hz", "num_currents", "num_potentials", "residual",
         "converged", "cond_original", "cond_deflated", "max_abs_error",
         "max_rel_error"},
        {{format_number(frequency), std::to_string(report.num_currents),
          std::to_string(report.num_potentials),
          format_number(report.solution.residual),
          report.solution.converged ? "1" : "0",
          format_number(report.solution.cond_original),
          format_number(report.solution.cond_deflated),
          format_number(report.error.max_absolute),
          format_number(report.error.max_relative)}});
  }
  return report;
}

SweepReport run_sweep(const MultiPatchGeometry& geometry,
                      const RunConfig& config, std::ostream& log,
                      bool write_outputs) {
  require_dipole(config, "sweep");
  const SweepConfig& sweep = config.sweep;
  log << "sweep: degree " << config.degree << " level " << config.level
      << ", " << sweep.count << " frequencies from "
      << format_number(sweep.f_max) << " Hz down to "
      << format_number(sweep.f_min) << " Hz\n";

  // Assemble once at the top frequency; the frequency-independent blocks M
  // and S are reused across the sweep while the kernel blocks, excitation and
  // equilibration are rebuilt per frequency.
  SolveContext context = assemble_and_scale(geometry, config, sweep.f_max);
  const LocalBlocks local{context.blocks.M, context.blocks.S};
  const auto points = fibonacci_sphere_points(config.postprocess.num_points,
                                              config.postprocess.radius);

  SweepReport report;
  for (int i = 0; i < sweep.count; ++i) {
    const double t =
        sweep.count > 1 ? static_cast<double>(i) / (sweep.count - 1) : 0.0;
    const double frequency =
        i == 0 ? sweep.f_max
                : (i == sweep.count - 1
                       ? sweep.f_min
                       : sweep.f_max * std::pow(sweep.f_min / sweep.f_max, t));

    SystemBlocks blocks;
    blocks.M = local.M;
    blocks.S = local.S;
    assemble_kernel_blocks(context.form1, context.form2, frequency,
                           config.medium, assembly_config(config), &blocks.L,
                           &blocks.P);
    blocks.v_ex = assemble_excitation(
        context.form1, incident_field(config, frequency),
        config.excitation.trace,
        config.quadrature.resolve_base(config.degree) + 2);

    SystemConfig deflated_config = config.system;
    deflated_config.deflation = true;
    SystemConfig original_config = config.system;
    original_config.deflation = false;

    const ScaledSystem deflated = build_scaled_system(
        blocks, frequency, deflated_config, context.scaling, config.medium);
    const ScaledSystem original = build_scaled_system(
        blocks, frequency, original_config, context.scaling, config.medium);

    SweepRow row;
    row.frequency = frequency;
    row.cond_original =
        estimate_condition(original.Z, config.system.estimator);
    row.cond_deflated =
        estimate_condition(deflated_matrix(deflated), config.system.estimator);

    const SolveResult original_solution = solve_direct(original, blocks);
    const SolveResult deflated_solution = solve_direct(deflated, blocks);
    row.residual_original = original_solution.residual;
    row.residual_deflated = deflated_solution.residual;

    const auto reference = reference_field(config, frequency, points);
    const auto original_field = eval_scattered_field(
        context.form1, context.form2, original_solution.current,
        original_solution.charge, points, frequency, config.medium,
        eval_config(config));
    const auto deflated_field = eval_scattered_field(
        context.form1, context.form2, deflated_solution.current,
        deflated_solution.charge, points, frequency, config.medium,
        eval_config(config));
    row.error_original =
        max_pointwise_error(original_field, reference).max_relative;
    row.error_deflated =
        max_pointwise_error(deflated_field, reference).max_relative;
    report.rows.push_back(row);

    log << "sweep: f " << format_number(frequency) << " Hz, cond original "
        << format_number(row.cond_original) << ", cond deflated "
        << format_number(row.cond_deflated) << ", error original "
        << format_number(row.error_original) << ", error deflated "
        << format_number(row.error_deflated) << "\n";
    if (!config.system.deflation && row.residual_original > 1e-10) {
      log << "sweep: warning: undeflated solve at "
          << format_number(frequency)
          << " Hz is past the breakdown point (residual "
          << format_number(row.residual_original) << ")\n";
    }
  }

  if (write_outputs) {
    ensure_output_directory(config);
    write_resolved_config(config);
    std::vector<std::vector<std::string>> rows;
    for (const SweepRow& row : report.rows) {
      rows.push_back({format_number(row.frequency),
                      format_number(row.cond_original),
                      format_number(row.cond_deflated),
                      format_number(row.error_original),
                      format_number(row.error_deflated),
                      format_number(row.residual_original),
                      format_number(row.residual_deflated)});
    }
    write_csv(output_path(config, "sweep.csv"),
              {"frequency_hz", "cond_original", "cond_deflated",
               "max_pw_error_original", "max_pw_error_deflated",
               "residual_original", "residual_deflated"},
              rows);
  }
  return report;
}

ConvergenceReport run_convergence(const MultiPatchGeometry& geometry,
                                  const RunConfig& config, std::ostream& log,
                                  bool write_outputs) {
  require_dipole(config, "convergence");
  log << "convergence: degree " << config.degree << " at "
      << format_number(config.frequency) << " Hz, levels";
  for (const int level : config.convergence_levels) {
    log << " " << level;
  }
  log << "\n";

  ConvergenceReport report;
  for (const int level : config.convergence_levels) {
    RunConfig level_config = config;
    level_config.level = level;
    SolveContext context =
        assemble_and_scale(geometry, level_config, config.frequency);
    const SolveResult solution = solve_direct(context.system, context.blocks);

    ConvergenceRow row;
    row.degree = config.degree;
    row.level = level;
    row.h = std::pow(0.5, level);
    row.num_currents = context.system.num_currents;
    row.num_potentials = context.system.num_potentials;

    const auto points = fibonacci_sphere_points(
        config.postprocess.num_points, config.postprocess.radius);
    const auto field = eval_scattered_field(
        context.form1, context.form2, solution.current, solution.charge,
        points, config.frequency, config.medium, eval_config(config));
    const auto reference = reference_field(config, config.frequency, points);
    row.error = max_pointwise_error(field, reference);

    if (report.rows.empty()) {
      row.rate = std::numeric_limits<double>::quiet_NaN();
    } else {
      const ConvergenceRow& previous = report.rows.back();
      row.rate = std::log2(previous.error.max_relative /
                           row.error.max_relative) /
                 (row.level - previous.level);
    }
    report.rows.push_back(row);
    log << "convergence: level " << level << ", "
        << (row.num_currents + row.num_potentials) << " dofs, error "
        << format_number(row.error.max_relative) << " relative"
        << (std::isnan(row.rate)
                ? std::string()
                : ", rate " + format_number(row.rate))
        << "\n";
  }
  report.fitted_rate = fit_rate(report.rows);
  log << "convergence: fitted rate " << format_number(report.fitted_rate)
      << "\n";

  if (write_outputs) {
    ensure_output_directory(config);
    write_resolved_config(config);
    std::vector<std::vector<std::string>> rows;
    for (const ConvergenceRow& row : report.rows) {
      rows.push_back(
          {std::to_string(row.degree), std::to_string(row.level),
           format_number(row.h),
           std::to_string(row.num_currents + row.num_potentials),
           format_number(row.error.max_absolute),
           format_number(row.error.max_relative),
           std::isnan(row.rate) ? "" : format_number(row.rate)});
    }
    write_csv(output_path(config, "convergence.csv"),
              {"degree", "level", "h", "num_dofs", "max_abs_error",
               "max_rel_error", "rate"},
              rows);
  }
  return report;
}

}  // namespace aefie
