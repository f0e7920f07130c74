#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gtadam/algorithms.hpp"
#include "gtadam/analysis.hpp"
#include "gtadam/costs.hpp"

namespace gtadam {

struct MetricRow {
  int t = 0;
  std::string algo;
  int trial = 0;
  double cost = 0.0;        // f_t(x̄_t)
  double opt_cost = 0.0;    // f_t(x*_t), or f_t(reference)
  double rel_err = 0.0;     // (cost - opt_cost) / opt_cost; absolute gap when opt_cost == 0
  double regret_sum = 0.0;  // sum over 1..t of the gaps
  double avg_regret = 0.0;  // regret_sum / t, 0 at t = 0
  double consensus_err = 0.0;
  double tracking_err = 0.0;
  Vec6 y = Vec6::Zero();
};

/// Accepts minimizers for t = 1..T (size T) or t = 0..T (size T + 1).
double dynamic_regret(const Trajectory& traj, const CostStream& stream,
                      const std::vector<Vec>& minimizers);

/// (f_t(x̄_t) - f_t(x*_t)) / f_t(x*_t) for t = 1..T. Throws
/// NumericalError("relative error undefined") on a zero optimal cost.
std::vector<double> relative_cost_error(const Trajectory& traj, const CostStream& stream,
                                        const std::vector<Vec>& minimizers);

/// (|x - 1x̄|, |s - 1s̄|).
std::pair<double, double> consensus_and_tracking_errors(const States& states);

/// One row at time t. `prev_regret_sum` is the running sum up to t - 1.
MetricRow metric_row(const States& states, const CostStream& stream, int t, const Vec& reference,
                     double prev_regret_sum, std::string algo, int trial);

}  // namespace gtadam
