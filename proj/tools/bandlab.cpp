// bandlab: run one experiment from a config file and write its report.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "bandlab/config.hpp"
#include "bandlab/experiments.hpp"
#include "bandlab/linalg.hpp"

int main(int argc, char** argv) {
  using namespace bandlab;

  CLI::App app{"Block band matrix experiments"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool reduce = false;
  unsigned workers = 1;

  for (const auto& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "flat key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--workers", workers, "sample worker threads")->check(CLI::PositiveNumber);
    if (name == "qdiff") sub->add_flag("--reduce", reduce, "one row per block offset instead of per block pair");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  use_single_threaded_blas();
  try {
    ExperimentConfig config = load_config(experiment, config_path);
    if (out_dir) config.out = *out_dir;
    if (seed) config.seed = *seed;
    config.reduce = reduce;
    config.workers = workers;

    const Report report = run_experiment(config);
    emit_report(report, config.out);
    for (const auto& a : report.aggregates)
      std::cout << a.name << " = " << a.value << (a.cmp == Comparison::none ? "" : a.pass ? "  pass" : "  FAIL")
                << '\n';
    if (!report.failures.empty()) std::cout << report.failures.size() << " sample(s) failed, see report.json\n";
    const int rc = exit_code(report);
    std::cout << experiment << ": " << (rc == 0 ? "pass" : rc == 3 ? "empty sample set" : "fail") << " ("
              << config.out.string() << ")\n";
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bandlab: " << e.what() << '\n';
    return 1;
  }
}
