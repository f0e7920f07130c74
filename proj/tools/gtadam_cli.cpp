// gtadam: command-line front end for the simulator.
//
//   gtadam run <config> [--threads k] [--output dir]
//   gtadam certify <config> [--out file]
//   gtadam validate <config>
//   gtadam lemmas <config> [--threads k] [--out file]

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "gtadam/config.hpp"
#include "gtadam/error.hpp"
#include "gtadam/runner.hpp"

namespace {

void emit(const nlohmann::json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    gtadam::write_text_file(out_path, text);
    std::cerr << "wrote " << out_path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed online optimization simulator (GTAdam, GT, DGD, Adam)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string output_dir;
  int threads = 1;

  auto* run = app.add_subcommand("run", "run all trials and write metrics.csv / aggregate.json");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--threads", threads, "trials run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--output", output_dir, "output directory (overrides config)");

  auto* certify = app.add_subcommand("certify", "bound-matrix certificate for a quadratic stream");
  certify->add_option("config", config_path, "experiment config (JSON)")->required();
  certify->add_option("--out", out_path, "write the JSON report here instead of stdout");

  auto* validate = app.add_subcommand("validate", "check config and generated networks");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();

  auto* lemmas = app.add_subcommand("lemmas", "run every inequality monitor on GTAdam runs");
  lemmas->add_option("config", config_path, "experiment config (JSON)")->required();
  lemmas->add_option("--threads", threads, "trials run in parallel")->check(CLI::PositiveNumber);
  lemmas->add_option("--out", out_path, "write the JSON report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    const gtadam::ExperimentConfig cfg = gtadam::load_config_file(config_path);

    if (run->parsed()) {
      gtadam::RunOptions opts;
      opts.threads = threads;
      if (!output_dir.empty()) opts.output_dir = output_dir;
      const auto summary = gtadam::run_experiment(cfg, opts);
      std::cerr << "wrote " << summary.csv_path.string() << " and "
                << summary.aggregate_path.string() << "\n";
      return 0;
    }
    if (certify->parsed()) {
      emit(gtadam::emit_certificate(cfg), out_path);
      return 0;
    }
    if (validate->parsed()) {
      bool ok = false;
      emit(gtadam::validate_experiment(cfg, &ok), "");
      return ok ? 0 : static_cast<int>(gtadam::ErrorCategory::kValidation);
    }
    if (lemmas->parsed()) {
      const auto result = gtadam::run_lemma_suite(cfg, threads);
      emit(result.report, out_path);
      if (result.violations > 0) {
        std::cerr << result.violations << " inequality violations\n";
        return 1;
      }
      return 0;
    }
  } catch (const gtadam::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
