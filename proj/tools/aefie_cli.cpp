/// Command-line front end: geometry inspection, single-frequency solves,
/// frequency sweeps, and mesh-refinement studies.  All numerical results are
/// written as CSV files into the output directory; the console shows progress
/// and a short summary.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "aefie/drivers.hpp"
#include "aefie/io.hpp"

namespace {

struct CommonOptions {
  std::string geometry_path;
  std::string config_path;
  std::string output_directory;
  int workers = 0;  // 0 = keep the config value
};

/// Loads the config file (if any) and folds in command-line overrides.
aefie::RunConfig resolve_config(const CommonOptions& options) {
  aefie::RunConfig config;
  if (!options.config_path.empty()) {
    config = aefie::load_config(options.config_path);
  }
  if (options.workers > 0) {
    config.workers = options.workers;
  }
  if (!options.output_directory.empty()) {
    config.output_directory = options.output_directory;
  }
  return config;
}

void add_common_options(CLI::App& command, CommonOptions& options,
                        bool geometry_required) {
  auto* geometry = command.add_option("--geometry", options.geometry_path,
                                      "Multipatch geometry file");
  if (geometry_required) {
    geometry->required();
  }
  command.add_option("--config", options.config_path,
                     "Run configuration file (key = value lines)");
  command.add_option("--output", options.output_directory,
                     "Output directory for CSV artifacts");
  command.add_option("--workers", options.workers,
                     "Assembly worker threads (overrides the config)")
      ->check(CLI::Range(1, 64));
}

int run(int argc, char** argv) {
  CLI::App app{"Spline-based boundary-element solver for the augmented "
               "electric field integral equation"};
  app.require_subcommand(1);

  CommonOptions options;

  auto* geominfo = app.add_subcommand(
      "geominfo", "Inspect a geometry file: patches, interfaces, area, dofs");
  std::string geominfo_path;
  geominfo->add_option("geometry", geominfo_path, "Multipatch geometry file")
      ->required();
  geominfo->add_option("--config", options.config_path,
                       "Run configuration file (sets degree and level)");

  auto* solve = app.add_subcommand(
      "solve", "Assemble and solve at a single frequency, then evaluate "
               "scattered fields");
  add_common_options(*solve, options, true);

  auto* sweep = app.add_subcommand(
      "sweep", "Solve across a log-spaced frequency grid with and without "
               "deflation");
  add_common_options(*sweep, options, true);

  auto* convergence = app.add_subcommand(
      "convergence", "Refine the mesh over a list of levels and report "
                     "pointwise field errors");
  add_common_options(*convergence, options, true);

  CLI11_PARSE(app, argc, argv);

  const aefie::RunConfig config = resolve_config(options);

  if (geominfo->parsed()) {
    const aefie::MultiPatchGeometry geometry =
        aefie::load_geometry(geominfo_path);
    const aefie::GeometryReport report = aefie::run_geominfo(geometry, config);
    for (const std::string& line : report.lines) {
      std::cout << line << "\n";
    }
    return 0;
  }

  const aefie::MultiPatchGeometry geometry =
      aefie::load_geometry(options.geometry_path);
  if (solve->parsed()) {
    aefie::run_solve(geometry, config, std::cout);
  } else if (sweep->parsed()) {
    aefie::run_sweep(geometry, config, std::cout);
  } else if (convergence->parsed()) {
    aefie::run_convergence(geometry, config, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const aefie::ValidationError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  } catch (const aefie::NumericalError& error) {
    std::cerr << "numerical failure: " << error.what() << "\n";
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
