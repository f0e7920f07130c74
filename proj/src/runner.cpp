#include "gtadam/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "gtadam/analysis.hpp"
#include "gtadam/error.hpp"

namespace gtadam {

namespace {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Runs work(k) for k < count on up to `threads` workers and hands results to
// sink(k, result) strictly in index order on the calling thread.
template <typename R, typename Work, typename Sink>
void ordered_parallel(int count, int threads, Work work, Sink sink) {
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<char> done(static_cast<std::size_t>(count), 0);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<int> next{0};

  auto worker = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= count) return;
      std::optional<R> result;
      std::exception_ptr err;
      try {
        result.emplace(work(k));
      } catch (...) {
        err = std::current_exception();
      }
      {
        std::lock_guard lock(mu);
        slots[static_cast<std::size_t>(k)] = std::move(result);
        errors[static_cast<std::size_t>(k)] = err;
        done[static_cast<std::size_t>(k)] = 1;
      }
      cv.notify_all();
    }
  };

  std::exception_ptr failure;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    try {
      for (int k = 0; k < count; ++k) {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return done[static_cast<std::size_t>(k)] != 0; });
        if (errors[static_cast<std::size_t>(k)]) std::rethrow_exception(errors[static_cast<std::size_t>(k)]);
        R value = std::move(*slots[static_cast<std::size_t>(k)]);
        slots[static_cast<std::size_t>(k)].reset();
        lock.unlock();
        sink(k, std::move(value));
      }
    } catch (...) {
      next.store(count);
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::unique_ptr<CostStream> make_stream(const ExperimentConfig& cfg, std::uint64_t seed) {
  const int n = cfg.network.n;
  switch (cfg.stream.type) {
    case StreamType::kQuadratic: {
      QuadraticSpec spec = cfg.stream.quadratic;
      spec.n_agents = n;
      return make_quadratic_stream(spec, seed);
    }
    case StreamType::kLogistic: {
      const auto& l = cfg.stream.logistic;
      LogisticData data = generate_logistic_data(n, l.points_per_agent, l.spread, seed);
      data.radius = l.radius;
      data.regularization = l.regularization;
      data.time_scale = l.time_scale;
      return std::make_unique<LogisticStream>(std::move(data));
    }
    case StreamType::kLocalization: {
      const auto& l = cfg.stream.localization;
      LocalizationSetup setup = generate_localization_setup(n, l.spread, seed);
      setup.radius = l.radius;
      setup.amplitude = l.amplitude;
      setup.attenuation = l.attenuation;
      setup.noise_variance = l.noise_variance;
      setup.time_scale = l.time_scale;
      return std::make_unique<LocalizationStream>(std::move(setup));
    }
  }
  throw ValidationError("unknown stream type");
}

json violation_json(const std::vector<Violation>& v) {
  json out;
  out["violations"] = v.size();
  if (!v.empty()) {
    out["first"] = {{"t", v.front().t}, {"index", v.front().index}, {"lhs", v.front().lhs},
                    {"rhs", v.front().rhs}};
  }
  return out;
}

AlgoParams gtadam_params(const ExperimentConfig& cfg, const CostStream& stream) {
  const AlgoSpec* spec = find_algorithm(cfg, Algorithm::kGTAdam);
  if (spec == nullptr) throw ValidationError("config has no gtadam entry");
  return params_for(cfg, *spec, exact_alpha_max(cfg, stream));
}

void require_quadratic(const ExperimentConfig& cfg) {
  if (cfg.stream.type != StreamType::kQuadratic) {
    throw ValidationError("constants not exact: certificates and monitors need a quadratic stream");
  }
}

}  // namespace

TrialSetup build_trial(const ExperimentConfig& cfg, int trial, bool with_references) {
  TrialSetup s;
  s.trial = trial;
  s.seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  s.network = gen_erdos_renyi(cfg.network.n, cfg.network.edge_prob, s.seed);
  s.stream = make_stream(cfg, derive_seed(s.seed, 1));

  const int dim = s.stream->dim();
  s.x0.assign(static_cast<std::size_t>(cfg.network.n), Vec::Zero(dim));
  if (cfg.init.type == "gaussian") {
    std::mt19937_64 rng(derive_seed(s.seed, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& x : s.x0) {
      for (int j = 0; j < dim; ++j) x(j) = cfg.init.scale * gauss(rng);
    }
  }

  if (with_references) {
    s.references.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
    if (const auto* loc = dynamic_cast<const LocalizationStream*>(s.stream.get())) {
      for (int t = 0; t <= cfg.horizon; ++t) s.references.emplace_back(loc->source(t));
    } else {
      Vec warm = Vec::Zero(dim);
      for (int t = 0; t <= cfg.horizon; ++t) {
        warm = compute_minimizer(*s.stream, t, 0.0, 200, &warm);
        s.references.push_back(warm);
      }
    }
  }
  return s;
}

std::optional<double> exact_alpha_max(const ExperimentConfig& cfg, const CostStream& stream) {
  const StreamConstants& c = stream.constants();
  if (!c.exact) return std::nullopt;
  BoundInputs in;
  in.lipschitz = c.lipschitz;
  in.strong_convexity = c.strong_convexity;
  in.beta1 = cfg.beta1;
  in.eps = cfg.eps;
  in.sat = cfg.sat;
  return step_threshold(in);
}

std::vector<MetricRow> run_trial(const ExperimentConfig& cfg, int trial) {
  const TrialSetup setup = build_trial(cfg, trial, true);
  const auto amax = exact_alpha_max(cfg, *setup.stream);
  std::vector<MetricRow> rows;
  rows.reserve(cfg.algorithms.size() * (static_cast<std::size_t>(cfg.horizon) + 1));
  for (const AlgoSpec& spec : cfg.algorithms) {
    const AlgoParams params = params_for(cfg, spec, amax);
    const std::string name(algorithm_name(spec.algorithm));
    double regret = 0.0;
    RecordOptions rec;
    rec.keep_snapshots = false;
    rec.observer = [&](int t, const States& states) {
      rows.push_back(metric_row(states, *setup.stream, t,
                                setup.references[static_cast<std::size_t>(t)], regret, name,
                                trial));
      regret = rows.back().regret_sum;
    };
    run_trajectory(spec.algorithm, *setup.stream, setup.network, params, cfg.horizon, setup.x0,
                   rec);
  }
  return rows;
}

std::string csv_header() {
  return "t,algo,trial,cost,opt_cost,rel_err,regret_sum,avg_regret,consensus_err,tracking_err,"
         "y1,y2,y3,y4,y5,y6";
}

std::string csv_line(const MetricRow& row, const std::vector<std::string>& metrics) {
  auto selected = [&](const char* name) {
    return std::find(metrics.begin(), metrics.end(), name) != metrics.end();
  };
  std::string line = std::to_string(row.t) + "," + row.algo + "," + std::to_string(row.trial);
  auto field = [&](const char* name, double value) {
    line += ',';
    if (selected(name)) line += format_double(value);
  };
  field("cost", row.cost);
  field("opt_cost", row.opt_cost);
  field("rel_err", row.rel_err);
  field("regret_sum", row.regret_sum);
  field("avg_regret", row.avg_regret);
  field("consensus_err", row.consensus_err);
  field("tracking_err", row.tracking_err);
  for (int k = 0; k < 6; ++k) field("y", row.y(k));
  return line;
}

json aggregate_json(const ExperimentConfig& cfg, const std::vector<std::vector<MetricRow>>& trials) {
  const std::size_t len = static_cast<std::size_t>(cfg.horizon) + 1;
  const double count = static_cast<double>(trials.size());
  json doc;
  doc["experiment"] = cfg.experiment;
  doc["trials"] = trials.size();
  doc["T"] = cfg.horizon;
  json algos = json::object();

  std::vector<std::pair<std::string, double MetricRow::*>> scalar = {
      {"cost", &MetricRow::cost},
      {"opt_cost", &MetricRow::opt_cost},
      {"rel_err", &MetricRow::rel_err},
      {"regret_sum", &MetricRow::regret_sum},
      {"avg_regret", &MetricRow::avg_regret},
      {"consensus_err", &MetricRow::consensus_err},
      {"tracking_err", &MetricRow::tracking_err}};
  auto selected = [&](const std::string& name) {
    return std::find(cfg.metrics.begin(), cfg.metrics.end(), name) != cfg.metrics.end();
  };

  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    json entry;
    std::vector<int> ts(len);
    for (std::size_t t = 0; t < len; ++t) ts[t] = static_cast<int>(t);
    entry["t"] = ts;
    auto summarize = [&](auto getter) {
      std::vector<double> mean(len, 0.0);
      std::vector<double> sd(len, 0.0);
      for (std::size_t t = 0; t < len; ++t) {
        double s = 0.0;
        for (const auto& rows : trials) s += getter(rows.at(a * len + t));
        const double mu = s / count;
        double ss = 0.0;
        for (const auto& rows : trials) {
          const double d = getter(rows.at(a * len + t)) - mu;
          ss += d * d;
        }
        mean[t] = mu;
        sd[t] = std::sqrt(ss / count);
      }
      return json{{"mean", mean}, {"std", sd}};
    };
    for (const auto& [name, member] : scalar) {
      if (!selected(name)) continue;
      entry[name] = summarize([m = member](const MetricRow& r) { return r.*m; });
    }
    if (selected("y")) {
      for (int k = 0; k < 6; ++k) {
        entry["y" + std::to_string(k + 1)] = summarize([k](const MetricRow& r) { return r.y(k); });
      }
    }
    algos[std::string(algorithm_name(cfg.algorithms[a].algorithm))] = std::move(entry);
  }
  doc["algorithms"] = std::move(algos);
  return doc;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), "cannot create directory: " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  RunSummary summary;
  const std::filesystem::path dir = options.output_dir.value_or(std::filesystem::path(cfg.output));
  summary.csv_path = dir / "metrics.csv";
  summary.aggregate_path = dir / "aggregate.json";

  std::ofstream csv;
  if (options.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
    csv.open(summary.csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError(summary.csv_path.string(), "cannot open for writing");
    csv << csv_header() << '\n';
  }

  summary.trials.reserve(static_cast<std::size_t>(cfg.trials));
  ordered_parallel<std::vector<MetricRow>>(
      cfg.trials, options.threads, [&](int k) { return run_trial(cfg, k); },
      [&](int, std::vector<MetricRow>&& rows) {
        if (options.write_files) {
          for (const auto& row : rows) csv << csv_line(row, cfg.metrics) << '\n';
          if (!csv) throw IoError(summary.csv_path.string(), "write failed");
        }
        summary.trials.push_back(std::move(rows));
      });

  if (options.write_files) {
    csv.close();
    if (!csv) throw IoError(summary.csv_path.string(), "close failed");
    write_text_file(summary.aggregate_path, aggregate_json(cfg, summary.trials).dump(1) + "\n");
  }
  return summary;
}

json emit_certificate(const ExperimentConfig& cfg) {
  require_quadratic(cfg);
  const TrialSetup setup = build_trial(cfg, 0, false);
  const StreamConstants& c = setup.stream->constants();
  const AlgoParams params = gtadam_params(cfg, *setup.stream);
  const BoundModel model = build_bound_model(c.lipschitz, c.strong_convexity, c.eta_bound,
                                             c.zeta_bound, setup.network, params);
  const EigenStructureReport eig = eigen_structure_check(model);

  const States init = init_states(*setup.stream, setup.network, setup.x0);
  const Vec star0 = *setup.stream->analytic_minimizer(0);
  const double y0 = diagnostics(init, star0).norm();

  json doc;
  doc["alpha"] = params.alpha;
  doc["rho"] = model.rho;
  doc["one_minus_rho"] = model.one_minus_rho;
  doc["alpha_max"] = model.alpha_max;
  doc["delta"] = model.delta;
  doc["phi"] = model.phi;
  doc["Q"] = model.Q;
  doc["eta"] = model.eta;
  doc["zeta"] = model.zeta;
  doc["lipschitz"] = c.lipschitz;
  doc["strong_convexity"] = c.strong_convexity;
  doc["sigma_w"] = setup.network.sigma_w;
  doc["y0_norm"] = y0;
  doc["step_admissible"] = model.step_admissible;
  doc["contraction"] = model.contraction_certified();
  doc["largest_contractive_alpha"] = largest_contractive_alpha(model.in, model.alpha_max);

  json bound_at = json::array();
  if (model.contraction_certified()) {
    doc["asymptotic_bound"] = asymptotic_regret_bound(model);
    std::set<int> ts = {0, 1, 10, 100, 1000, cfg.horizon};
    for (int t : ts) {
      if (t > cfg.horizon) continue;
      bound_at.push_back({{"t", t}, {"bound", theorem1_bound(t, y0, model)}});
    }
  } else if (model.Q == 0.0) {
    doc["asymptotic_bound"] = 0.0;
  } else {
    doc["asymptotic_bound"] = nullptr;
  }
  doc["bound_at"] = std::move(bound_at);
  doc["verdict"] =
      model.step_admissible && model.contraction_certified() ? "certified" : "not certified";
  doc["eigen_structure"] = {{"a0_right_exact", eig.a0_right_exact},
                            {"a0_left_exact", eig.a0_left_exact},
                            {"directional_derivative", eig.directional_derivative},
                            {"derivative_error", eig.derivative_error},
                            {"slope_alphas", {eig.alphas[0], eig.alphas[1]}},
                            {"slopes", {eig.slopes[0], eig.slopes[1]}},
                            {"max_slope_rel_error", eig.max_slope_rel_error},
                            {"halving_ratio", eig.halving_ratio}};
  return doc;
}

LemmaSuiteResult run_lemma_suite(const ExperimentConfig& cfg, int threads) {
  require_quadratic(cfg);
  if (!cfg.stream.quadratic.identical_curvature) {
    throw ValidationError("lemma monitors need identical curvature across agents");
  }
  struct TrialReport {
    json doc;
    std::size_t violations = 0;
  };

  LemmaSuiteResult result;
  json trials = json::array();
  std::vector<std::size_t> lemma_totals(7, 0);
  std::size_t recursion_total = 0;
  std::size_t norm_total = 0;

  ordered_parallel<TrialReport>(
      cfg.trials, threads,
      [&](int k) {
        const TrialSetup setup = build_trial(cfg, k, false);
        const StreamConstants& c = setup.stream->constants();
        const AlgoParams params = gtadam_params(cfg, *setup.stream);
        const BoundModel model = build_bound_model(c.lipschitz, c.strong_convexity, c.eta_bound,
                                                   c.zeta_bound, setup.network, params);
        const Trajectory traj = run_trajectory(Algorithm::kGTAdam, *setup.stream, setup.network,
                                               params, cfg.horizon, setup.x0);
        const MonitorSeries series = monitor_series(traj, *setup.stream, params.eps);
        const LemmaConstants lc = LemmaConstants::from(model);

        TrialReport rep;
        rep.doc["trial"] = k;
        rep.doc["seed"] = setup.seed;
        rep.doc["alpha"] = params.alpha;
        rep.doc["rho"] = model.rho;
        json lemmas = json::object();
        for (int id = 1; id <= 7; ++id) {
          const auto v = lemma_monitor(series, lc, id);
          lemmas[std::to_string(id)] = violation_json(v);
          rep.violations += v.size();
        }
        rep.doc["lemmas"] = std::move(lemmas);
        const auto rec = recursion_check(series, model);
        const auto nb = norm_bound_check(series, model);
        rep.doc["recursion"] = violation_json(rec);
        rep.doc["norm_bound"] = violation_json(nb);
        rep.violations += rec.size() + nb.size();
        return rep;
      },
      [&](int, TrialReport&& rep) {
        for (int id = 1; id <= 7; ++id) {
          lemma_totals[static_cast<std::size_t>(id - 1)] +=
              rep.doc["lemmas"][std::to_string(id)]["violations"].get<std::size_t>();
        }
        recursion_total += rep.doc["recursion"]["violations"].get<std::size_t>();
        norm_total += rep.doc["norm_bound"]["violations"].get<std::size_t>();
        result.violations += rep.violations;
        trials.push_back(std::move(rep.doc));
      });

  json totals;
  for (int id = 1; id <= 7; ++id) {
    totals["lemma" + std::to_string(id)] = lemma_totals[static_cast<std::size_t>(id - 1)];
  }
  totals["recursion"] = recursion_total;
  totals["norm_bound"] = norm_total;
  result.report["experiment"] = cfg.experiment;
  result.report["T"] = cfg.horizon;
  result.report["trials"] = std::move(trials);
  result.report["totals"] = std::move(totals);
  result.report["violations"] = result.violations;
  return result;
}

json validate_experiment(const ExperimentConfig& cfg, bool* all_valid) {
  bool ok = true;
  json doc;
  doc["experiment"] = cfg.experiment;
  doc["config"] = config_to_json(cfg);
  json nets = json::array();
  for (int k = 0; k < cfg.trials; ++k) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(k);
    json entry{{"trial", k}, {"seed", seed}};
    try {
      const Network net = gen_erdos_renyi(cfg.network.n, cfg.network.edge_prob, seed);
      const auto issues = validate_network(net);
      entry["issues"] = issues;
      entry["sigma_w"] = net.sigma_w;
      entry["edges"] = net.edges().size();
      if (!issues.empty()) ok = false;
    } catch (const GraphGenerationError& e) {
      entry["issues"] = {"connectivity"};
      entry["error"] = e.what();
      ok = false;
    }
    nets.push_back(std::move(entry));
  }
  doc["networks"] = std::move(nets);

  const TrialSetup setup = build_trial(cfg, 0, false);
  const StreamConstants& c = setup.stream->constants();
  json consts{{"lipschitz", c.lipschitz},
              {"strong_convexity", c.strong_convexity},
              {"exact", c.exact}};
  if (c.exact) {
    consts["eta"] = c.eta_bound;
    consts["zeta"] = c.zeta_bound;
    if (const auto amax = exact_alpha_max(cfg, *setup.stream)) consts["alpha_max"] = *amax;
  }
  doc["stream"] = {{"type", std::string(setup.stream->kind())},
                   {"dim", setup.stream->dim()},
                   {"constants", std::move(consts)}};
  doc["valid"] = ok;
  if (all_valid != nullptr) *all_valid = ok;
  return doc;
}

}  // namespace gtadam
