#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtadam/config.hpp"
#include "gtadam/metrics.hpp"
#include "gtadam/network.hpp"

namespace gtadam {

/// Everything one Monte Carlo trial needs; all algorithms share it.
struct TrialSetup {
  int trial = 0;
  std::uint64_t seed = 0;
  Network network;
  std::unique_ptr<CostStream> stream;
  std::vector<Vec> x0;
  /// x*_t (quadratic, logistic) or the true source theta_t (localization),
  /// for t = 0..T. Empty unless requested.
  std::vector<Vec> references;
};

/// seed = base_seed + trial; network, stream and initial points use
/// independent streams derived from it.
TrialSetup build_trial(const ExperimentConfig& cfg, int trial, bool with_references = true);

/// alpha_max of the bound model when the stream has exact constants.
std::optional<double> exact_alpha_max(const ExperimentConfig& cfg, const CostStream& stream);

/// Rows for every configured algorithm (config order), t = 0..T each.
std::vector<MetricRow> run_trial(const ExperimentConfig& cfg, int trial);

std::string csv_header();
std::string csv_line(const MetricRow& row, const std::vector<std::string>& metrics);

/// Per-iteration mean and population std across trials, per algorithm.
nlohmann::json aggregate_json(const ExperimentConfig& cfg,
                              const std::vector<std::vector<MetricRow>>& trials);

struct RunOptions {
  int threads = 1;
  /// Overrides cfg.output.
  std::optional<std::filesystem::path> output_dir;
  bool write_files = true;
};

struct RunSummary {
  std::filesystem::path csv_path;
  std::filesystem::path aggregate_path;
  std::vector<std::vector<MetricRow>> trials;
};

/// Runs all trials (up to `threads` at once) and writes metrics.csv and
/// aggregate.json into the output directory, in trial order.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Certificate for trial 0 of an exact-constants stream, using the GTAdam
/// step size. Throws ValidationError for other streams.
nlohmann::json emit_certificate(const ExperimentConfig& cfg);

struct LemmaSuiteResult {
  nlohmann::json report;
  std::size_t violations = 0;
};

/// Lemma 1-7 monitors plus the recursion and norm-bound checks on GTAdam
/// trajectories of every trial.
LemmaSuiteResult run_lemma_suite(const ExperimentConfig& cfg, int threads = 1);

/// Network invariants of every trial plus trial-0 stream constants.
nlohmann::json validate_experiment(const ExperimentConfig& cfg, bool* all_valid = nullptr);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gtadam
