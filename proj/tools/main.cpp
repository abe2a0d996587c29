#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "rsspde/config.hpp"
#include "rsspde/runner.hpp"

namespace {

struct SubcommandSpec {
  rsspde::ExperimentKind kind;
  const char* description;
};

const SubcommandSpec kSubcommands[] = {
    {rsspde::ExperimentKind::kSimulate, "integrate an ensemble and write path/event CSVs"},
    {rsspde::ExperimentKind::kCheck, "verify the model's structural conditions on random states"},
    {rsspde::ExperimentKind::kLyapunov, "drift-residual, occupation, and dissipativity profiles"},
    {rsspde::ExperimentKind::kPeriodic, "two-sample tests for a period-stationary law"},
    {rsspde::ExperimentKind::kErgoAvg, "replica-resolved time averages of an observable"},
    {rsspde::ExperimentKind::kCouple, "coupled pairs: coupling times and density reweighting"},
    {rsspde::ExperimentKind::kSteer, "steered control probe toward a target state"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral simulator and verification harness for regime-switching SPDEs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int64_t seed = -1;
  int workers = -1;

  rsspde::ExperimentKind chosen = rsspde::ExperimentKind::kSimulate;
  for (const SubcommandSpec& spec : kSubcommands) {
    CLI::App* sub = app.add_subcommand(rsspde::experiment_name(spec.kind), spec.description);
    sub->add_option("config", config_path, "path to the run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "override the output directory");
    sub->add_option("--seed", seed, "override the seed");
    sub->add_option("--workers", workers, "override the worker count");
    sub->callback([&chosen, kind = spec.kind] { chosen = kind; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    rsspde::RunConfig cfg = rsspde::load_config_file(config_path);
    if (cfg.experiment != chosen) {
      throw rsspde::ConfigError(std::string("config requests experiment '") +
                                rsspde::experiment_name(cfg.experiment) +
                                "' but the subcommand is '" + rsspde::experiment_name(chosen) +
                                "'");
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    if (workers >= 0) cfg.workers = workers;

    rsspde::RunOutcome outcome = rsspde::run_experiment(cfg);
    std::cout << outcome.summary;
    std::cout << "artifacts in " << cfg.out_dir << "\n";
    return outcome.exit_code;
  } catch (const rsspde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
