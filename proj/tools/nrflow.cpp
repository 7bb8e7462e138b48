// Command-line driver: run, sweep, validate, diagnose.
//
// Every flag can also be set through an environment variable with the
// NRFLOW_ prefix (NRFLOW_CONFIG, NRFLOW_OUT, NRFLOW_HORIZON, NRFLOW_SEED,
// NRFLOW_THREADS). Command-line flags win over the environment.

#include <iostream>
#include <optional>

#include <omp.h>

#include <CLI11.hpp>

#include "nrflow/commands.hpp"

int main(int argc, char** argv) {
  using namespace nrflow;

  CLI::App app{"Non-isothermal reactive two-phase porous-medium flow solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", config_path, "JSON configuration file (empty or absent means defaults)")
        ->envname("NRFLOW_CONFIG");
    if (needs_out) sub->add_option("--out", out_dir, "Output directory")->envname("NRFLOW_OUT");
    sub->add_option("--horizon", horizon, "Final time")->envname("NRFLOW_HORIZON");
    sub->add_option("--seed", seed, "Seed of the initial perturbation noise")->envname("NRFLOW_SEED");
    sub->add_option("--threads", threads, "OpenMP threads for assembly")->envname("NRFLOW_THREADS");
  };

  auto* run = app.add_subcommand("run", "Single simulation: fields and diagnostics CSV");
  add_common(run, true);
  auto* sweep = app.add_subcommand("sweep", "Parameter ladder over tau, eps and delta");
  add_common(sweep, true);
  auto* validate = app.add_subcommand("validate", "Hypothesis report for the configuration");
  add_common(validate, false);
  std::string run_dir;
  auto* diagnose = app.add_subcommand("diagnose", "Recompute diagnostics from stored field dumps");
  diagnose->add_option("run_dir", run_dir, "Directory written by `run`")->required();

  CLI11_PARSE(app, argc, argv);

  if (diagnose->parsed()) return cmd_diagnose(run_dir, std::cout);

  const bool checked = !validate->parsed();
  RunConfig cfg;
  try {
    cfg = config_path.empty() ? parse_config("", checked) : load_config(config_path, checked);
    if (horizon) cfg.horizon = *horizon;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (checked) {
      const auto rep = validate_config(cfg);
      if (!rep.all_pass()) throw ConfigError("invalid overrides: check " + rep.failures().front());
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  cfg.scheme.exec = cfg.threads > 1 ? Exec::Parallel : Exec::Serial;
  omp_set_num_threads(cfg.threads);

  if (validate->parsed()) return cmd_validate(cfg, std::cout);
  if (out_dir.empty()) out_dir = cfg.output.directory;
  if (run->parsed()) return cmd_run(cfg, out_dir, std::cout);
  return cmd_sweep(cfg, out_dir, std::cout);
}
