// Command line driver: run experiments, verify invariants, sweep the
// dispersion relation, and dump initial fields.
//
// Exit codes: 0 success; 1 failed verification; 2 configuration or usage
// error; 3 solver failure; 4 invariant violation (e.g. non-positive depth).
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tfe/config.hpp"
#include "tfe/runner.hpp"
#include "tfe/solvers.hpp"
#include "tfe/verify.hpp"

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitInvariant = 4;

std::string resolve_output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv("TFE_OUTPUT_DIR");
  return env != nullptr ? std::string(env) : std::string();
}

int cmd_run(const std::string& config_path, const std::string& outdir) {
  const tfe::RunConfig cfg = tfe::RunConfig::from_file(config_path);
  const tfe::RunResult result = tfe::run_experiment(cfg, outdir);
  std::cout << "wrote " << result.diagnostics_path << " ("
            << result.steps_completed << " steps)\n";
  return 0;
}

int cmd_verify(bool inject_div_fault) {
  tfe::VerifyOptions opts;
  opts.inject_div_fault = inject_div_fault;
  const auto checks = tfe::run_verification(opts);
  tfe::print_verification_table(checks, std::cout);
  return tfe::all_passed(checks) ? 0 : kExitVerifyFailed;
}

int cmd_dispersion(const std::string& config_path, const std::string& outfile) {
  const tfe::RunConfig cfg = tfe::RunConfig::from_file(config_path);
  if (outfile.empty()) {
    tfe::write_dispersion_csv(cfg, std::cout);
  } else {
    std::ofstream out(outfile, std::ios::trunc);
    if (!out)
      throw tfe::ConfigError("cannot open output file '" + outfile + "'");
    tfe::write_dispersion_csv(cfg, out);
    std::cout << "wrote " << outfile << "\n";
  }
  return 0;
}

int cmd_dump(const std::string& config_path, const std::string& outdir) {
  const tfe::RunConfig cfg = tfe::RunConfig::from_file(config_path);
  for (const std::string& path : tfe::dump_initial_fields(cfg, outdir))
    std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torusfe: compatible finite elements on the periodic plane"};
  app.require_subcommand(1);

  std::string run_config, run_outdir;
  CLI::App* run = app.add_subcommand("run", "advance a configured experiment");
  run->add_option("config", run_config, "configuration file")->required();
  run->add_option("--output-dir", run_outdir,
                  "override the configured output directory");

  bool inject_div_fault = false;
  CLI::App* verify =
      app.add_subcommand("verify", "run the built-in invariant checks");
  verify->add_flag("--inject-div-fault", inject_div_fault)->group("");

  std::string disp_config, disp_out;
  CLI::App* dispersion = app.add_subcommand(
      "dispersion", "tabulate the discrete wave frequencies over a k-grid");
  dispersion->add_option("config", disp_config, "configuration file")
      ->required();
  dispersion->add_option("-o,--output", disp_out,
                         "write CSV here instead of stdout");

  std::string dump_config, dump_outdir;
  CLI::App* dump = app.add_subcommand(
      "dump", "write the configured initial fields without time stepping");
  dump->add_option("config", dump_config, "configuration file")->required();
  dump->add_option("--output-dir", dump_outdir,
                   "override the configured output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, resolve_output_dir(run_outdir));
    if (verify->parsed()) return cmd_verify(inject_div_fault);
    if (dispersion->parsed()) return cmd_dispersion(disp_config, disp_out);
    if (dump->parsed()) return cmd_dump(dump_config, resolve_output_dir(dump_outdir));
  } catch (const tfe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tfe::ExpressionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tfe::SolveError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::domain_error& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return 0;
}
