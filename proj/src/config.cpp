#include "gtadam/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gtadam/error.hpp"

namespace gtadam {

namespace {

using nlohmann::json;

template <typename T>
std::string show(const T& value) {
  std::ostringstream os;
  os << value;
  return os.str();
}

template <typename T>
void require(bool ok, const std::string& field, const char* bound, const T& value) {
  if (!ok) {
    throw ValidationError(field + " out of range: must be " + bound + " (got " + show(value) + ")");
  }
}

// Reads fields of one JSON object and rejects the keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(label() + " must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    if (!has(key)) throw ValidationError("missing required field " + field(key));
    return convert<T>(key);
  }

  const json& child(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& item : obj_.items()) {
      if (!used_.count(item.key())) unknown.push_back(field(item.key()));
    }
    if (unknown.empty()) return;
    std::string msg = "unknown keys in config:";
    for (const auto& k : unknown) msg += " " + k;
    throw ValidationError(msg);
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  template <typename T>
  T convert(const std::string& key) {
    const json& v = obj_.at(key);
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ValidationError(field(key) + " must be a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ValidationError(field(key) + " must be an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() &&
          v.get<std::int64_t>() < 0) {
        throw ValidationError(field(key) + " must be non-negative");
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ValidationError(field(key) + " must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ValidationError(field(key) + " must be a string");
    }
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(field(key) + ": " + e.what());
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void read_quadratic(ObjectReader& r, QuadraticSpec& q) {
  q.dim = r.get("dim", q.dim);
  q.strong_convexity = r.get("strong_convexity", q.strong_convexity);
  q.lipschitz = r.get("lipschitz", q.lipschitz);
  q.identical_curvature = r.get("identical_curvature", q.identical_curvature);
  q.diagonal = r.get("diagonal", q.diagonal);
  q.center_scale = r.get("center_scale", q.center_scale);
  const std::string drift = r.get<std::string>("drift", "static");
  if (drift == "static") {
    q.drift = Drift::kStatic;
  } else if (drift == "sinusoidal") {
    q.drift = Drift::kSinusoidal;
  } else {
    throw ValidationError(r.field("drift") + " must be \"static\" or \"sinusoidal\"");
  }
  q.amplitude = r.get("amplitude", q.amplitude);
  q.frequency = r.get("frequency", q.frequency);
  q.bound_horizon = r.get("bound_horizon", q.bound_horizon);

  require(q.dim >= 1, r.field("dim"), ">= 1", q.dim);
  require(q.strong_convexity > 0.0, r.field("strong_convexity"), "> 0", q.strong_convexity);
  require(q.lipschitz >= q.strong_convexity, r.field("lipschitz"), ">= strong_convexity",
          q.lipschitz);
  require(q.center_scale >= 0.0, r.field("center_scale"), ">= 0", q.center_scale);
  require(q.amplitude >= 0.0, r.field("amplitude"), ">= 0", q.amplitude);
  require(std::isfinite(q.frequency), r.field("frequency"), "finite", q.frequency);
  require(q.bound_horizon >= 1, r.field("bound_horizon"), ">= 1", q.bound_horizon);
}

void read_logistic(ObjectReader& r, LogisticSpec& l) {
  l.points_per_agent = r.get("points_per_agent", l.points_per_agent);
  l.regularization = r.get("regularization", l.regularization);
  l.spread = r.get("spread", l.spread);
  l.radius = r.get("radius", l.radius);
  l.time_scale = r.get("time_scale", l.time_scale);
  require(l.points_per_agent >= 1, r.field("points_per_agent"), ">= 1", l.points_per_agent);
  require(l.regularization > 0.0, r.field("regularization"), "> 0", l.regularization);
  require(l.spread > 0.0, r.field("spread"), "> 0", l.spread);
  require(l.radius >= 0.0, r.field("radius"), ">= 0", l.radius);
  require(l.time_scale > 0.0, r.field("time_scale"), "> 0", l.time_scale);
}

void read_localization(ObjectReader& r, LocalizationSpec& l) {
  l.spread = r.get("spread", l.spread);
  l.radius = r.get("radius", l.radius);
  l.amplitude = r.get("amplitude", l.amplitude);
  l.attenuation = r.get("attenuation", l.attenuation);
  l.noise_variance = r.get("noise_variance", l.noise_variance);
  l.time_scale = r.get("time_scale", l.time_scale);
  require(l.spread > 0.0, r.field("spread"), "> 0", l.spread);
  require(l.radius >= 0.0, r.field("radius"), ">= 0", l.radius);
  require(l.amplitude > 0.0, r.field("amplitude"), "> 0", l.amplitude);
  require(l.attenuation >= 1.0, r.field("attenuation"), ">= 1", l.attenuation);
  require(l.noise_variance >= 0.0, r.field("noise_variance"), ">= 0", l.noise_variance);
  require(l.time_scale > 0.0, r.field("time_scale"), "> 0", l.time_scale);
}

}  // namespace

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"cost",       "opt_cost",     "rel_err",
                                                 "regret_sum", "avg_regret",   "consensus_err",
                                                 "tracking_err", "y"};
  return names;
}

std::string_view stream_type_name(StreamType type) noexcept {
  switch (type) {
    case StreamType::kQuadratic: return "quadratic";
    case StreamType::kLogistic: return "logistic";
    case StreamType::kLocalization: return "localization";
  }
  return "unknown";
}

ExperimentConfig load_config(const json& doc) {
  ExperimentConfig cfg;
  ObjectReader root(doc, "");
  cfg.experiment = root.required<std::string>("experiment");
  cfg.horizon = root.required<int>("T");
  cfg.trials = root.get("trials", cfg.trials);
  cfg.base_seed = root.get<std::uint64_t>("base_seed", cfg.base_seed);
  require(!cfg.experiment.empty(), "experiment", "non-empty", "\"\"");
  require(cfg.horizon >= 1, "T", ">= 1", cfg.horizon);
  require(cfg.trials >= 1, "trials", ">= 1", cfg.trials);

  if (!root.has("network")) throw ValidationError("missing required field network");
  {
    ObjectReader net(root.child("network"), "network");
    cfg.network.n = net.get("n", cfg.network.n);
    cfg.network.edge_prob = net.get("edge_prob", cfg.network.edge_prob);
    net.finish();
    require(cfg.network.n >= 2, "network.n", ">= 2", cfg.network.n);
    require(cfg.network.edge_prob > 0.0 && cfg.network.edge_prob <= 1.0, "network.edge_prob",
            "in (0, 1]", cfg.network.edge_prob);
  }

  if (!root.has("stream")) throw ValidationError("missing required field stream");
  {
    ObjectReader st(root.child("stream"), "stream");
    const auto type = st.required<std::string>("type");
    if (type == "quadratic") {
      cfg.stream.type = StreamType::kQuadratic;
      read_quadratic(st, cfg.stream.quadratic);
    } else if (type == "logistic") {
      cfg.stream.type = StreamType::kLogistic;
      read_logistic(st, cfg.stream.logistic);
    } else if (type == "localization") {
      cfg.stream.type = StreamType::kLocalization;
      read_localization(st, cfg.stream.localization);
    } else {
      throw ValidationError("stream.type must be quadratic, logistic or localization (got \"" +
                            type + "\")");
    }
    st.finish();
    cfg.stream.quadratic.n_agents = cfg.network.n;
  }

  if (root.has("algorithms")) {
    ObjectReader algos(root.child("algorithms"), "algorithms");
    for (Algorithm a : {Algorithm::kGTAdam, Algorithm::kGT, Algorithm::kDGD, Algorithm::kAdam}) {
      const std::string name(algorithm_name(a));
      if (!algos.has(name)) continue;
      ObjectReader one(algos.child(name), "algorithms." + name);
      AlgoSpec spec;
      spec.algorithm = a;
      const bool has_alpha = one.has("alpha");
      const bool has_fraction = one.has("alpha_fraction");
      if (has_alpha && has_fraction) {
        throw ValidationError(one.field("alpha") + " and alpha_fraction are mutually exclusive");
      }
      if (has_alpha) {
        spec.alpha = one.get("alpha", spec.alpha);
        require(spec.alpha > 0.0, one.field("alpha"), "> 0", spec.alpha);
      }
      if (has_fraction) {
        spec.alpha_fraction = one.get("alpha_fraction", 0.0);
        require(*spec.alpha_fraction > 0.0, one.field("alpha_fraction"), "> 0",
                *spec.alpha_fraction);
        if (cfg.stream.type != StreamType::kQuadratic) {
          throw ValidationError(one.field("alpha_fraction") + " needs a quadratic stream");
        }
      }
      one.finish();
      cfg.algorithms.push_back(spec);
    }
    algos.finish();
    if (cfg.algorithms.empty()) throw ValidationError("algorithms must name at least one method");
  } else {
    for (Algorithm a : {Algorithm::kGTAdam, Algorithm::kGT, Algorithm::kDGD}) {
      AlgoSpec spec;
      spec.algorithm = a;
      cfg.algorithms.push_back(spec);
    }
  }

  cfg.beta1 = root.get("beta1", cfg.beta1);
  cfg.beta2 = root.get("beta2", cfg.beta2);
  cfg.eps = root.get("eps", cfg.eps);
  cfg.sat = root.get("sat", cfg.sat);
  require(cfg.beta1 > 0.0 && cfg.beta1 < 1.0, "beta1", "in (0, 1)", cfg.beta1);
  require(cfg.beta2 > 0.0 && cfg.beta2 < 1.0, "beta2", "in (0, 1)", cfg.beta2);
  require(cfg.eps > 0.0, "eps", "> 0", cfg.eps);
  require(cfg.sat > 0.0, "sat", "> 0", cfg.sat);

  if (root.has("metrics")) {
    const json& m = root.child("metrics");
    if (!m.is_array()) throw ValidationError("metrics must be an array of column names");
    for (const auto& item : m) {
      if (!item.is_string()) throw ValidationError("metrics entries must be strings");
      const auto name = item.get<std::string>();
      const auto& all = metric_names();
      if (std::find(all.begin(), all.end(), name) == all.end()) {
        throw ValidationError("metrics: unknown column \"" + name + "\"");
      }
      cfg.metrics.push_back(name);
    }
  } else {
    cfg.metrics = metric_names();
  }

  if (root.has("init")) {
    ObjectReader init(root.child("init"), "init");
    cfg.init.type = init.get<std::string>("type", cfg.init.type);
    cfg.init.scale = init.get("scale", cfg.init.scale);
    init.finish();
    if (cfg.init.type != "origin" && cfg.init.type != "gaussian") {
      throw ValidationError("init.type must be \"origin\" or \"gaussian\"");
    }
    require(cfg.init.scale >= 0.0, "init.scale", ">= 0", cfg.init.scale);
  }

  cfg.output = root.get<std::string>("output", "results/" + cfg.experiment);
  root.finish();
  return cfg;
}

ExperimentConfig load_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return load_config(doc);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return load_config_text(buf.str());
}

json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["experiment"] = cfg.experiment;
  doc["T"] = cfg.horizon;
  doc["trials"] = cfg.trials;
  doc["base_seed"] = cfg.base_seed;
  doc["network"] = {{"n", cfg.network.n}, {"edge_prob", cfg.network.edge_prob}};

  json st;
  st["type"] = std::string(stream_type_name(cfg.stream.type));
  switch (cfg.stream.type) {
    case StreamType::kQuadratic: {
      const auto& q = cfg.stream.quadratic;
      st["dim"] = q.dim;
      st["strong_convexity"] = q.strong_convexity;
      st["lipschitz"] = q.lipschitz;
      st["identical_curvature"] = q.identical_curvature;
      st["diagonal"] = q.diagonal;
      st["center_scale"] = q.center_scale;
      st["drift"] = q.drift == Drift::kStatic ? "static" : "sinusoidal";
      st["amplitude"] = q.amplitude;
      st["frequency"] = q.frequency;
      st["bound_horizon"] = q.bound_horizon;
      break;
    }
    case StreamType::kLogistic: {
      const auto& l = cfg.stream.logistic;
      st["points_per_agent"] = l.points_per_agent;
      st["regularization"] = l.regularization;
      st["spread"] = l.spread;
      st["radius"] = l.radius;
      st["time_scale"] = l.time_scale;
      break;
    }
    case StreamType::kLocalization: {
      const auto& l = cfg.stream.localization;
      st["spread"] = l.spread;
      st["radius"] = l.radius;
      st["amplitude"] = l.amplitude;
      st["attenuation"] = l.attenuation;
      st["noise_variance"] = l.noise_variance;
      st["time_scale"] = l.time_scale;
      break;
    }
  }
  doc["stream"] = std::move(st);

  json algos = json::object();
  for (const auto& a : cfg.algorithms) {
    json one;
    if (a.alpha_fraction) {
      one["alpha_fraction"] = *a.alpha_fraction;
    } else {
      one["alpha"] = a.alpha;
    }
    algos[std::string(algorithm_name(a.algorithm))] = std::move(one);
  }
  doc["algorithms"] = std::move(algos);
  doc["beta1"] = cfg.beta1;
  doc["beta2"] = cfg.beta2;
  doc["eps"] = cfg.eps;
  doc["sat"] = cfg.sat;
  doc["metrics"] = cfg.metrics;
  doc["init"] = {{"type", cfg.init.type}, {"scale", cfg.init.scale}};
  doc["output"] = cfg.output;
  return doc;
}

AlgoParams params_for(const ExperimentConfig& cfg, const AlgoSpec& spec,
                      std::optional<double> alpha_max) {
  AlgoParams p;
  p.beta1 = cfg.beta1;
  p.beta2 = cfg.beta2;
  p.eps = cfg.eps;
  p.sat = cfg.sat;
  if (spec.alpha_fraction) {
    if (!alpha_max) throw ValidationError("alpha_fraction needs alpha_max from exact constants");
    p.alpha = *spec.alpha_fraction * *alpha_max;
  } else {
    p.alpha = spec.alpha;
  }
  p.validate();
  return p;
}

const AlgoSpec* find_algorithm(const ExperimentConfig& cfg, Algorithm algo) {
  for (const auto& a : cfg.algorithms) {
    if (a.algorithm == algo) return &a;
  }
  return nullptr;
}

}  // namespace gtadam
