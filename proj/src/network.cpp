#include "gtadam/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

#include "gtadam/error.hpp"

namespace gtadam {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr int kMaxResamples = 100;

bool is_square_adjacency(const Adjacency& a) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0) return false;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) > 1 || a(i, j) != a(j, i)) return false;
    }
  }
  return true;
}

bool rows_stochastic(const Mat& w) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > kStochasticTol) return false;
  }
  return true;
}

bool cols_stochastic(const Mat& w) {
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    if (std::abs(w.col(j).sum() - 1.0) > kStochasticTol) return false;
  }
  return true;
}

bool exactly_symmetric(const Mat& w) { return w == w.transpose(); }

double operator_norm_minus_identity(const Mat& w) {
  const Mat d = w - Mat::Identity(w.rows(), w.cols());
  if (exactly_symmetric(w)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Mat> svd(d);
  return svd.singularValues()(0);
}

}  // namespace

std::vector<std::pair<int, int>> Network::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n_agents; ++i) {
    for (int j = i + 1; j < n_agents; ++j) {
      if (adjacency(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

bool is_connected(const Adjacency& adjacency) {
  const auto n = adjacency.rows();
  if (n == 0) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index reached = 1;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (adjacency(u, v) && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

Mat metropolis_weights(const Adjacency& adjacency) {
  if (!is_square_adjacency(adjacency)) {
    throw ValidationError("adjacency must be square, symmetric, 0/1 with empty diagonal");
  }
  if (!is_connected(adjacency)) throw ValidationError("disconnected graph");

  const auto n = adjacency.rows();
  Eigen::VectorXi degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    degree(i) = adjacency.row(i).cast<int>().sum();
  }
  Mat w = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || !adjacency(i, j)) continue;
      w(i, j) = 1.0 / (1.0 + std::max(degree(i), degree(j)));
      off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

double spectral_gap(const Mat& weights) {
  if (weights.rows() != weights.cols() || weights.rows() == 0) {
    throw ValidationError("weight matrix must be square and non-empty");
  }
  if (!rows_stochastic(weights) || !cols_stochastic(weights)) {
    throw ValidationError("weight matrix is not doubly stochastic");
  }
  const auto n = weights.rows();
  const Mat centered = weights - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  if (exactly_symmetric(weights)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(centered, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::EigenSolver<Mat> es(centered, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Network network_from_weights(const Adjacency& adjacency, const Mat& weights) {
  Network net;
  net.n_agents = static_cast<int>(adjacency.rows());
  net.adjacency = adjacency;
  net.weights = weights;
  if (weights.rows() == weights.cols() && weights.rows() == adjacency.rows() &&
      weights.rows() > 0) {
    const auto n = weights.rows();
    const Mat centered = weights - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
    if (exactly_symmetric(weights)) {
      Eigen::SelfAdjointEigenSolver<Mat> es(centered, Eigen::EigenvaluesOnly);
      net.sigma_w = es.eigenvalues().cwiseAbs().maxCoeff();
    } else {
      Eigen::EigenSolver<Mat> es(centered, false);
      net.sigma_w = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    net.w_minus_i_norm = operator_norm_minus_identity(weights);
  }
  return net;
}

Network make_network(const Adjacency& adjacency) {
  Mat w = metropolis_weights(adjacency);
  Network net = network_from_weights(adjacency, w);
  net.sigma_w = spectral_gap(net.weights);
  return net;
}

Network gen_erdos_renyi(int n, double edge_prob, std::uint64_t seed) {
  if (n < 2) throw ValidationError("Erdos-Renyi graph needs n >= 2");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw ValidationError("edge_prob must lie in [0, 1]");
  }
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    std::bernoulli_distribution coin(edge_prob);
    Adjacency a = Adjacency::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (coin(rng)) a(i, j) = a(j, i) = 1;
      }
    }
    if (is_connected(a)) return make_network(a);
  }
  throw GraphGenerationError(n, edge_prob);
}

std::vector<std::string> validate_network(const Network& network) {
  std::vector<std::string> issues;
  const Mat& w = network.weights;
  const auto n = static_cast<Eigen::Index>(network.n_agents);
  if (n <= 0 || w.rows() != n || w.cols() != n || network.adjacency.rows() != n ||
      network.adjacency.cols() != n) {
    issues.emplace_back("shape");
    return issues;
  }
  if (!is_square_adjacency(network.adjacency)) issues.emplace_back("adjacency");
  if (!rows_stochastic(w)) issues.emplace_back("row-stochasticity");
  if (!cols_stochastic(w)) issues.emplace_back("column-stochasticity");

  bool support_ok = true;
  for (Eigen::Index i = 0; i < n && support_ok; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && w(i, j) != 0.0 && !network.adjacency(i, j)) {
        support_ok = false;
        break;
      }
    }
  }
  if (!support_ok || (w.array() < 0.0).any()) issues.emplace_back("support");

  if (!is_connected(network.adjacency)) {
    // sigma_w = 1 follows from disconnection; reported once as connectivity.
    issues.emplace_back("connectivity");
  } else if (!(network.sigma_w < 1.0)) {
    issues.emplace_back("spectral-gap");
  }
  return issues;
}

nlohmann::json network_to_json(const Network& network) {
  nlohmann::json doc;
  doc["n"] = network.n_agents;
  auto edges = nlohmann::json::array();
  for (const auto& [i, j] : network.edges()) edges.push_back({i, j});
  doc["edges"] = std::move(edges);
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(network.weights.size()));
  for (Eigen::Index i = 0; i < network.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < network.weights.cols(); ++j) flat.push_back(network.weights(i, j));
  }
  doc["weights"] = std::move(flat);
  return doc;
}

Network network_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    if (n <= 0) throw ValidationError("network n must be positive");
    Adjacency a = Adjacency::Zero(n, n);
    for (const auto& e : doc.at("edges")) {
      const int i = e.at(0).get<int>();
      const int j = e.at(1).get<int>();
      if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
        throw ValidationError("network edge out of range");
      }
      a(i, j) = a(j, i) = 1;
    }
    const auto flat = doc.at("weights").get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
      throw ValidationError("network weights must have n*n entries");
    }
    Mat w(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) w(i, j) = flat[static_cast<std::size_t>(i * n + j)];
    }
    return network_from_weights(a, w);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed network document: ") + e.what());
  }
}

}  // namespace gtadam
