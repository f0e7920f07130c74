#include "gtadam/metrics.hpp"

#include <cmath>

#include "gtadam/error.hpp"

namespace gtadam {

namespace {

// minimizers[k] for time t, for either accepted layout.
const Vec& minimizer_at(const std::vector<Vec>& minimizers, int horizon, int t) {
  const auto size = minimizers.size();
  if (size == static_cast<std::size_t>(horizon) + 1) return minimizers[static_cast<std::size_t>(t)];
  return minimizers[static_cast<std::size_t>(t - 1)];
}

void check_lengths(const Trajectory& traj, const std::vector<Vec>& minimizers) {
  const auto h = static_cast<std::size_t>(traj.horizon);
  if (minimizers.size() != h && minimizers.size() != h + 1) {
    throw ValidationError("length mismatch: need one minimizer per iteration");
  }
  if (traj.average_x.size() != h + 1) throw ValidationError("trajectory is incomplete");
}

double stacked_spread(const States& states, bool tracker) {
  const Vec mean = tracker ? mean_s(states) : mean_x(states);
  double acc = 0.0;
  for (const auto& a : states) acc += ((tracker ? a.s : a.x) - mean).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

double dynamic_regret(const Trajectory& traj, const CostStream& stream,
                      const std::vector<Vec>& minimizers) {
  check_lengths(traj, minimizers);
  double total = 0.0;
  for (int t = 1; t <= traj.horizon; ++t) {
    total += stream.total_eval(t, traj.average_x[static_cast<std::size_t>(t)]) -
             stream.total_eval(t, minimizer_at(minimizers, traj.horizon, t));
  }
  return total;
}

std::vector<double> relative_cost_error(const Trajectory& traj, const CostStream& stream,
                                        const std::vector<Vec>& minimizers) {
  check_lengths(traj, minimizers);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(traj.horizon));
  for (int t = 1; t <= traj.horizon; ++t) {
    const double opt = stream.total_eval(t, minimizer_at(minimizers, traj.horizon, t));
    if (opt == 0.0) throw NumericalError("relative error undefined: optimal cost is zero");
    const double cost = stream.total_eval(t, traj.average_x[static_cast<std::size_t>(t)]);
    out.push_back((cost - opt) / opt);
  }
  return out;
}

std::pair<double, double> consensus_and_tracking_errors(const States& states) {
  if (states.empty()) return {0.0, 0.0};
  return {stacked_spread(states, false), stacked_spread(states, true)};
}

MetricRow metric_row(const States& states, const CostStream& stream, int t, const Vec& reference,
                     double prev_regret_sum, std::string algo, int trial) {
  MetricRow row;
  row.t = t;
  row.algo = std::move(algo);
  row.trial = trial;
  const Vec xbar = mean_x(states);
  row.cost = stream.total_eval(t, xbar);
  row.opt_cost = stream.total_eval(t, reference);
  const double gap = row.cost - row.opt_cost;
  row.rel_err = row.opt_cost != 0.0 ? gap / row.opt_cost : gap;
  row.regret_sum = prev_regret_sum + (t > 0 ? gap : 0.0);
  row.avg_regret = t > 0 ? row.regret_sum / t : 0.0;
  const auto [consensus, tracking] = consensus_and_tracking_errors(states);
  row.consensus_err = consensus;
  row.tracking_err = tracking;
  row.y = diagnostics(states, reference);
  return row;
}

}  // namespace gtadam
