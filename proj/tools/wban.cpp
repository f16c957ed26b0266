#include <iostream>

#include <CLI11.hpp>

#include "wban/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wireless body area network simulator"};
  app.require_subcommand(1);

  wban::RunConfig run_cfg;
  std::uint64_t seed = 0;
  std::string report = "table";
  auto* run = app.add_subcommand("run", "Run a scenario (or a directory of scenarios)");
  run->add_option("--scenario", run_cfg.scenario, "Scenario JSON file or batch directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", run_cfg.out_dir, "Output directory")->capture_default_str();
  run->add_option("--report", report, "Summary format")
      ->check(CLI::IsMember({"table", "structured"}))
      ->capture_default_str();
  run->add_option("-j,--jobs", run_cfg.jobs, "Worker threads for batch runs");
  run->add_flag("-v,--verbose", run_cfg.verbosity, "More output");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", validate_path, "Scenario JSON file")->required();

  auto* selftest = app.add_subcommand("selftest", "Run the built-in conformance suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the internal-error code.
    return app.exit(e) == 0 ? 0 : wban::kExitInternal;
  }

  if (*run) {
    if (*seed_opt) run_cfg.seed = seed;
    run_cfg.report = report == "structured" ? wban::ReportFormat::kStructured : wban::ReportFormat::kTable;
    return wban::cmd_run(run_cfg, std::cout, std::cerr);
  }
  if (*validate) return wban::cmd_validate(validate_path, std::cout, std::cerr);
  if (*selftest) return wban::cmd_selftest(std::cout);
  return wban::kExitInternal;
}
