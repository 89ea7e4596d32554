// Experiment drivers: build initial states from a RunConfig, advance the
// selected model, and write diagnostics/dumps/dispersion output.
#pragma once

#include <iosfwd>
#include <string>

#include "tfe/config.hpp"
#include "tfe/diagnostics.hpp"
#include "tfe/euler2d.hpp"
#include "tfe/swe_linear.hpp"
#include "tfe/swe_nonlinear.hpp"

namespace tfe {

struct RunResult {
  int steps_completed = 0;
  std::string diagnostics_path;
  DiagnosticsRecord first;
  DiagnosticsRecord last;
};

// Initial-condition builders (also used by the dump subcommand and tests).
Field initial_omega(const RunConfig& cfg, const SpacePtr& v0);
LinearState initial_linear(const RunConfig& cfg, const LinearSWE& model);
SweState initial_nonlinear(const RunConfig& cfg, const NonlinearSWE& model);

// Parameter plumbing shared by the drivers.
SweParams nonlinear_params(const RunConfig& cfg, const PeriodicQuadMesh& mesh);
LinearParams linear_params(const RunConfig& cfg);

// Time loop + diagnostics CSV (+ optional field dumps every dump_interval
// steps).  output_dir overrides cfg.output_directory when non-empty.
RunResult run_experiment(const RunConfig& cfg,
                         const std::string& output_dir = "");

// CSV rows kx,ky,omega1,omega2,omega3 over the configured wavenumber grid.
void write_dispersion_csv(const RunConfig& cfg, std::ostream& out);

// Write the initial fields of the configured model to the output directory
// without time stepping; returns the written paths, one per file.
std::vector<std::string> dump_initial_fields(const RunConfig& cfg,
                                             const std::string& output_dir = "");

}  // namespace tfe
