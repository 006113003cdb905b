// qmem command-line front end.
//
//   qmem <experiment> [--config FILE] [--seed N] [--out DIR] [--threads N]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "qmem/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"qmem: collapse-model and open-system dynamics with memory diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(QMEM_VERSION));

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::size_t threads = 1;

  for (auto kind : qmem::kAllExperiments) {
    auto* sub = app.add_subcommand(std::string(qmem::to_string(kind)));
    sub->add_option("--config", config_path, "Experiment configuration file");
    sub->add_option("--seed", seed, "Base seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qmem::kExitConfigError;
  }

  const auto kind = *qmem::parse_experiment_kind(app.get_subcommands().front()->get_name());
  const auto* sub = app.get_subcommands().front();

  qmem::ExperimentConfig cfg(kind);
  qmem::RunOptions opts;
  opts.out_dir = out_dir;
  opts.threads = threads;
  if (sub->count("--seed")) opts.seed = seed;

  if (!config_path.empty()) {
    try {
      cfg = qmem::load_config(config_path, kind);
    } catch (const qmem::ConfigError& e) {
      // still leave a manifest behind
      std::cerr << config_path << ": " << e.what() << '\n';
      qmem::RunResult failed;
      failed.exit_code = qmem::kExitConfigError;
      failed.message = e.what();
      std::error_code ec;
      std::filesystem::create_directories(opts.out_dir, ec);
      qmem::detail::write_manifest(opts.out_dir, qmem::ExperimentConfig(kind), opts.seed.value_or(0), threads, failed, 0.0);
      return qmem::kExitConfigError;
    }
  }

  const qmem::RunResult r = qmem::run_experiment(cfg, opts);
  for (const auto& note : r.notes) std::cerr << "warning: " << note << '\n';
  if (r.exit_code != qmem::kExitOk) {
    std::cerr << (config_path.empty() ? std::string("qmem") : config_path) << ": " << r.message << '\n';
    return r.exit_code;
  }
  for (const auto& f : r.outputs) std::cout << (std::filesystem::path(out_dir) / f).string() << '\n';
  std::cout << (std::filesystem::path(out_dir) / "manifest.txt").string() << '\n';
  return qmem::kExitOk;
}
