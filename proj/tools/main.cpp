// nlgrad <identities|minimize|poincare|sweep> --config <path> [--out dir] [--threads N] [--seed S]
//
// Exit status: 0 when every configured tolerance passes, 1 on a runtime
// failure or a failed tolerance, 2 on a malformed config or command line.

#include <iostream>

#include <CLI11.hpp>

#include "nlgrad_app/config.hpp"
#include "nlgrad_app/runner.hpp"

int main(int argc, char** argv) {
  using namespace nlgrad::app;

  CLI::App cli{"Truncated nonlocal gradient calculus: identity checks, minimization, Poincare estimates"};
  cli.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  long long seed = -1;
  for (const auto& name : commands()) {
    auto* sub = cli.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = cli.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, command);
  } catch (const ConfigError& e) {
    std::cerr << "nlgrad: config error in " << e.what() << "\n";
    return 2;
  }
  if (threads > 0) cfg.threads = threads;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (!out_dir.empty()) cfg.output = out_dir;
  refresh_hash(cfg);

  try {
    std::cout << "nlgrad " << command << " -> " << cfg.output.string() << "\n";
    const RunResult res = run(cfg, cfg.output, std::cout);
    std::cout << res.summary << "\n";
    for (const auto& f : res.files) std::cout << "  wrote " << f.string() << "\n";
    if (!res.pass) {
      std::cerr << "nlgrad: stage 'verify': configured tolerances not met\n";
      return 1;
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "nlgrad: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "nlgrad: stage 'run': " << e.what() << "\n";
  }
  return 1;
}
