#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "gtadam/costs.hpp"
#include "gtadam/network.hpp"

namespace gtadam {

/// Local variables of one agent.
struct AgentState {
  Vec x;
  Vec s;       // gradient tracker
  Vec m;       // first momentum
  Vec v;       // second momentum, kept in [0, G]
  Vec g_prev;  // last local gradient
};

using States = std::vector<AgentState>;

struct AlgoParams {
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double sat = 1e6;

  /// Throws ValidationError naming the first out-of-range field.
  void validate() const;
};

enum class Algorithm { kGTAdam, kGT, kDGD, kAdam };

std::string_view algorithm_name(Algorithm algo) noexcept;
/// "gtadam", "gt", "dgd", "adam".
Algorithm algorithm_from_name(std::string_view name);

/// x_{i,0} given, s = g_prev = grad f_{i,0}(x_{i,0}), m = v = 0.
States init_states(const CostStream& stream, const Network& network, const std::vector<Vec>& x0);

/// One synchronous round at time t >= 1. All neighbor reads use the values
/// from before the call.
void gtadam_step(States& states, const Network& network, const CostStream& stream,
                 const AlgoParams& params, int t);
void gt_step(States& states, const Network& network, const CostStream& stream,
             const AlgoParams& params, int t);
void dgd_step(States& states, const Network& network, const CostStream& stream,
              const AlgoParams& params, int t);

/// Centralized Adam on f_t = sum_i f_{i,t}, with bias correction and no
/// saturation. Uses state.x, m, v and g_prev (= grad f_{t-1}(x_{t-1})).
AgentState init_adam_state(const CostStream& stream, const Vec& x0);
void adam_step(AgentState& state, const CostStream& stream, const AlgoParams& params, int t);

struct RecordOptions {
  bool keep_snapshots = true;
  /// Called with (t, states) for t = 0..T.
  std::function<void(int, const States&)> observer;
};

struct Trajectory {
  Algorithm algorithm = Algorithm::kGTAdam;
  int horizon = 0;
  /// snapshots[t] for t = 0..T when kept; empty otherwise.
  std::vector<States> snapshots;
  /// Network average of x at every t = 0..T.
  std::vector<Vec> average_x;
};

/// Runs T rounds from x0 (one vector per agent). Adam runs on a single
/// state started at the mean of x0.
Trajectory run_trajectory(Algorithm algo, const CostStream& stream, const Network& network,
                          const AlgoParams& params, int horizon, const std::vector<Vec>& x0,
                          const RecordOptions& record = {});

/// Mean over agents of the chosen field.
Vec mean_x(const States& states);
Vec mean_s(const States& states);
Vec mean_m(const States& states);

}  // namespace gtadam
