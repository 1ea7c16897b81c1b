#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "paraspec/commands.hpp"
#include "paraspec/errors.hpp"

using namespace paraspec;

int main(int argc, char** argv) {
  CLI::App app{"paraspec: spectral experiments for parabolic flows and maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (INI)");
    if (need_config) opt->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--workers", workers, "worker threads (default: PARASPEC_WORKERS or 1)")
        ->check(CLI::Range(1, 1024));
    sub->add_option("--out", out_dir, "run directory");
  };
  auto* simulate = app.add_subcommand("simulate", "write sampled orbits");
  auto* correlate = app.add_subcommand("correlate", "estimate the correlation series");
  auto* conditions = app.add_subcommand("conditions", "evaluate the commutator conditions");
  auto* spectrum = app.add_subcommand("spectrum", "spectral diagnostics from correlation.csv");
  auto* report = app.add_subcommand("report", "summarize a run directory");
  for (auto* s : {simulate, correlate, conditions, spectrum}) add_common(s, true);
  add_common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (report->parsed()) {
      std::filesystem::path dir = out_dir;
      if (dir.empty()) {
        if (config_path.empty()) throw InvalidSpec("report needs --out or --config");
        const ExperimentConfig c = load_config(config_path);
        dir = c.output_dir.empty() ? std::filesystem::path("runs") / to_string(c.scenario) : std::filesystem::path(c.output_dir);
      }
      for (const auto& f : cmd_report(dir).files) std::cout << (dir / f).string() << "\n";
      return 0;
    }
    RunContext ctx;
    ctx.config = load_config(config_path);
    if (seed) ctx.config.seed = *seed;
    ctx.workers = workers ? *workers : default_workers();
    ctx.out = !out_dir.empty()                   ? std::filesystem::path(out_dir)
              : !ctx.config.output_dir.empty() ? std::filesystem::path(ctx.config.output_dir)
                                               : std::filesystem::path("runs") / to_string(ctx.config.scenario);
    CommandOutput out;
    if (simulate->parsed()) out = cmd_simulate(ctx);
    if (correlate->parsed()) out = cmd_correlate(ctx);
    if (conditions->parsed()) out = cmd_conditions(ctx);
    if (spectrum->parsed()) out = cmd_spectrum(ctx);
    for (const auto& f : out.files) std::cout << (ctx.out / f).string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";  // "<Kind>: message"
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
