#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace gtadam {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric 0/1 matrix with an empty diagonal.
using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Undirected communication graph together with its doubly stochastic
/// mixing matrix. Immutable after construction.
struct Network {
  int n_agents = 0;
  Adjacency adjacency;
  Mat weights;
  /// Spectral radius of W - (1/N) 1 1^T.
  double sigma_w = 0.0;
  /// Operator 2-norm of W - I.
  double w_minus_i_norm = 0.0;

  std::vector<std::pair<int, int>> edges() const;
};

bool is_connected(const Adjacency& adjacency);

/// w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, w_ii = 1 - sum_{j != i} w_ij.
/// Throws ValidationError on a disconnected or malformed graph.
Mat metropolis_weights(const Adjacency& adjacency);

/// Largest |eigenvalue| of W - (1/N) 1 1^T. Throws ValidationError when W is
/// not square or not doubly stochastic at 1e-12.
double spectral_gap(const Mat& weights);

/// Builds a network from a connected adjacency using Metropolis weights.
Network make_network(const Adjacency& adjacency);

/// Builds a network from explicit weights; no invariants are enforced here
/// (see validate_network).
Network network_from_weights(const Adjacency& adjacency, const Mat& weights);

/// Connected G(n, p) sample. A disconnected draw is resampled with seed + 1,
/// seed + 2, ... for at most 100 attempts.
Network gen_erdos_renyi(int n, double edge_prob, std::uint64_t seed);

/// Names of the violated invariants; empty iff the network is valid.
/// Possible entries: "shape", "adjacency", "row-stochasticity",
/// "column-stochasticity", "support", "connectivity", "spectral-gap".
std::vector<std::string> validate_network(const Network& network);

/// {n, edges: [[i, j], ...], weights: row-major array}
nlohmann::json network_to_json(const Network& network);
Network network_from_json(const nlohmann::json& doc);

}  // namespace gtadam
