#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtadam/algorithms.hpp"
#include "gtadam/costs.hpp"

namespace gtadam {

struct NetworkSpec {
  int n = 10;
  double edge_prob = 0.5;
};

enum class StreamType { kQuadratic, kLogistic, kLocalization };

struct LogisticSpec {
  int points_per_agent = 50;
  double regularization = 1.0;
  double spread = 5.0;
  double radius = 1.0;
  double time_scale = 100.0;
};

struct LocalizationSpec {
  double spread = 10.0;
  double radius = 0.5;
  double amplitude = 100.0;
  double attenuation = 1.0;
  double noise_variance = 1e-3;
  double time_scale = 200.0;
};

struct StreamSpec {
  StreamType type = StreamType::kQuadratic;
  QuadraticSpec quadratic;  // n_agents is taken from the network spec
  LogisticSpec logistic;
  LocalizationSpec localization;
};

/// Step size given directly or as a fraction of alpha_max (quadratic only).
struct AlgoSpec {
  Algorithm algorithm = Algorithm::kGTAdam;
  double alpha = 0.01;
  std::optional<double> alpha_fraction;
};

struct InitSpec {
  /// "origin" or "gaussian" (N(0, scale^2) per coordinate, per agent).
  std::string type = "origin";
  double scale = 3.0;
};

struct ExperimentConfig {
  std::string experiment;
  int horizon = 2000;
  int trials = 1;
  std::uint64_t base_seed = 0;
  NetworkSpec network;
  StreamSpec stream;
  /// Run order: gtadam, gt, dgd, adam (those present).
  std::vector<AlgoSpec> algorithms;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double sat = 1e6;
  /// Selected CSV metric columns; unselected columns are left empty.
  std::vector<std::string> metrics;
  InitSpec init;
  std::string output;
};

/// All metric column names that may appear in "metrics".
const std::vector<std::string>& metric_names();

/// Parses and validates a JSON document. Unknown keys and out-of-range
/// values throw ValidationError naming the field.
ExperimentConfig load_config(const nlohmann::json& doc);
ExperimentConfig load_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Full document with every default spelled out.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Parameters for one algorithm. alpha_max is needed only when the spec
/// uses alpha_fraction.
AlgoParams params_for(const ExperimentConfig& cfg, const AlgoSpec& spec,
                      std::optional<double> alpha_max = std::nullopt);

const AlgoSpec* find_algorithm(const ExperimentConfig& cfg, Algorithm algo);

std::string_view stream_type_name(StreamType type) noexcept;

}  // namespace gtadam
