#include "gtadam/algorithms.hpp"

#include <cmath>
#include <sstream>

#include "gtadam/error.hpp"

namespace gtadam {

namespace {

void require_range(bool ok, const char* field, const char* bound) {
  if (!ok) {
    std::ostringstream os;
    os << field << " out of range: must be " << bound;
    throw ValidationError(os.str());
  }
}

void check_round(const States& states, const Network& network, const CostStream& stream, int t) {
  if (t < 1) throw ValidationError("round index must be >= 1");
  if (states.size() != static_cast<std::size_t>(network.n_agents) ||
      network.n_agents != stream.n_agents()) {
    throw ValidationError("agent count differs between states, network and stream");
  }
}

// Row i of W times the stacked field.
template <typename Field>
std::vector<Vec> mix(const States& states, const Mat& w, Field field) {
  const auto n = states.size();
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = Vec::Zero(field(states[i]).size());
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (wij != 0.0) out[i] += wij * field(states[j]);
    }
  }
  return out;
}

template <typename Field>
Vec mean_of(const States& states, Field field) {
  if (states.empty()) throw ValidationError("empty state list");
  Vec acc = Vec::Zero(field(states.front()).size());
  for (const auto& s : states) acc += field(s);
  return acc / static_cast<double>(states.size());
}

void track(States& states, const std::vector<Vec>& mixed_s, const CostStream& stream, int t) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    Vec g = stream.grad(static_cast<int>(i), t, states[i].x);
    states[i].s = mixed_s[i] + g - states[i].g_prev;
    states[i].g_prev = std::move(g);
  }
}

}  // namespace

void AlgoParams::validate() const {
  require_range(alpha > 0.0 && std::isfinite(alpha), "alpha", "> 0");
  require_range(beta1 > 0.0 && beta1 < 1.0, "beta1", "in (0, 1)");
  require_range(beta2 > 0.0 && beta2 < 1.0, "beta2", "in (0, 1)");
  require_range(eps > 0.0 && std::isfinite(eps), "eps", "> 0");
  require_range(sat > 0.0, "sat", "> 0");
}

std::string_view algorithm_name(Algorithm algo) noexcept {
  switch (algo) {
    case Algorithm::kGTAdam: return "gtadam";
    case Algorithm::kGT: return "gt";
    case Algorithm::kDGD: return "dgd";
    case Algorithm::kAdam: return "adam";
  }
  return "unknown";
}

Algorithm algorithm_from_name(std::string_view name) {
  for (Algorithm a : {Algorithm::kGTAdam, Algorithm::kGT, Algorithm::kDGD, Algorithm::kAdam}) {
    if (algorithm_name(a) == name) return a;
  }
  throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

States init_states(const CostStream& stream, const Network& network, const std::vector<Vec>& x0) {
  if (x0.size() != static_cast<std::size_t>(stream.n_agents()) ||
      network.n_agents != stream.n_agents()) {
    throw ValidationError("initial points must match the agent count of stream and network");
  }
  States states(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (x0[i].size() != stream.dim()) {
      throw ValidationError("initial point has the wrong dimension");
    }
    AgentState& st = states[i];
    st.x = x0[i];
    st.g_prev = stream.grad(static_cast<int>(i), 0, st.x);
    st.s = st.g_prev;
    st.m = Vec::Zero(stream.dim());
    st.v = Vec::Zero(stream.dim());
  }
  return states;
}

void gtadam_step(States& states, const Network& network, const CostStream& stream,
                 const AlgoParams& p, int t) {
  check_round(states, network, stream, t);
  const auto mixed_x = mix(states, network.weights, [](const AgentState& a) -> const Vec& { return a.x; });
  const auto mixed_s = mix(states, network.weights, [](const AgentState& a) -> const Vec& { return a.s; });
  for (std::size_t i = 0; i < states.size(); ++i) {
    AgentState& st = states[i];
    st.m = p.beta1 * st.m + (1.0 - p.beta1) * st.s;
    st.v = (p.beta2 * st.v.array() + (1.0 - p.beta2) * st.s.array().square()).min(p.sat).matrix();
    st.x = mixed_x[i] - p.alpha * (st.m.array() / (st.v.array() + p.eps).sqrt()).matrix();
  }
  track(states, mixed_s, stream, t);
}

void gt_step(States& states, const Network& network, const CostStream& stream,
             const AlgoParams& p, int t) {
  check_round(states, network, stream, t);
  const auto mixed_x = mix(states, network.weights, [](const AgentState& a) -> const Vec& { return a.x; });
  const auto mixed_s = mix(states, network.weights, [](const AgentState& a) -> const Vec& { return a.s; });
  for (std::size_t i = 0; i < states.size(); ++i) {
    states[i].x = mixed_x[i] - p.alpha * states[i].s;
  }
  track(states, mixed_s, stream, t);
}

void dgd_step(States& states, const Network& network, const CostStream& stream,
              const AlgoParams& p, int t) {
  check_round(states, network, stream, t);
  const auto mixed_x = mix(states, network.weights, [](const AgentState& a) -> const Vec& { return a.x; });
  for (std::size_t i = 0; i < states.size(); ++i) {
    Vec g = stream.grad(static_cast<int>(i), t, mixed_x[i]);
    states[i].x = mixed_x[i] - p.alpha * g;
    states[i].g_prev = std::move(g);
    states[i].s = states[i].g_prev;
  }
}

AgentState init_adam_state(const CostStream& stream, const Vec& x0) {
  if (x0.size() != stream.dim()) throw ValidationError("initial point has the wrong dimension");
  AgentState st;
  st.x = x0;
  st.g_prev = stream.total_grad(0, x0);
  st.s = st.g_prev;
  st.m = Vec::Zero(stream.dim());
  st.v = Vec::Zero(stream.dim());
  return st;
}

void adam_step(AgentState& st, const CostStream& stream, const AlgoParams& p, int t) {
  if (t < 1) throw ValidationError("round index must be >= 1");
  st.m = p.beta1 * st.m + (1.0 - p.beta1) * st.g_prev;
  st.v = p.beta2 * st.v.array() + (1.0 - p.beta2) * st.g_prev.array().square();
  const double td = static_cast<double>(t);
  const double correction = std::sqrt(1.0 - std::pow(p.beta2, td)) / (1.0 - std::pow(p.beta1, td));
  st.x -= p.alpha * correction * (st.m.array() / (st.v.array() + p.eps).sqrt()).matrix();
  st.g_prev = stream.total_grad(t, st.x);
  st.s = st.g_prev;
}

Trajectory run_trajectory(Algorithm algo, const CostStream& stream, const Network& network,
                          const AlgoParams& params, int horizon, const std::vector<Vec>& x0,
                          const RecordOptions& record) {
  if (horizon < 1) throw ValidationError("horizon T must be >= 1");
  params.validate();

  States states;
  if (algo == Algorithm::kAdam) {
    if (x0.empty()) throw ValidationError("no initial point given");
    Vec start = Vec::Zero(stream.dim());
    for (const auto& x : x0) {
      if (x.size() != stream.dim()) throw ValidationError("initial point has the wrong dimension");
      start += x;
    }
    states.push_back(init_adam_state(stream, start / static_cast<double>(x0.size())));
  } else {
    states = init_states(stream, network, x0);
  }

  Trajectory traj;
  traj.algorithm = algo;
  traj.horizon = horizon;
  traj.average_x.reserve(static_cast<std::size_t>(horizon) + 1);
  if (record.keep_snapshots) traj.snapshots.reserve(static_cast<std::size_t>(horizon) + 1);

  auto emit = [&](int t) {
    traj.average_x.push_back(mean_x(states));
    if (record.keep_snapshots) traj.snapshots.push_back(states);
    if (record.observer) record.observer(t, states);
  };

  emit(0);
  for (int t = 1; t <= horizon; ++t) {
    switch (algo) {
      case Algorithm::kGTAdam: gtadam_step(states, network, stream, params, t); break;
      case Algorithm::kGT: gt_step(states, network, stream, params, t); break;
      case Algorithm::kDGD: dgd_step(states, network, stream, params, t); break;
      case Algorithm::kAdam: adam_step(states.front(), stream, params, t); break;
    }
    emit(t);
  }
  return traj;
}

Vec mean_x(const States& states) {
  return mean_of(states, [](const AgentState& a) -> const Vec& { return a.x; });
}

Vec mean_s(const States& states) {
  return mean_of(states, [](const AgentState& a) -> const Vec& { return a.s; });
}

Vec mean_m(const States& states) {
  return mean_of(states, [](const AgentState& a) -> const Vec& { return a.m; });
}

}  // namespace gtadam
