#include "gtadam/error.hpp"

#include <sstream>

namespace gtadam {

namespace {

std::string graph_message(int n, double edge_prob) {
  std::ostringstream os;
  os << "graph generation failed: no connected sample after 100 attempts (n="
     << n << ", edge_prob=" << edge_prob << ")";
  return os.str();
}

std::string convergence_message(const std::string& what, double residual) {
  std::ostringstream os;
  os << what << " (residual " << residual << ")";
  return os.str();
}

}  // namespace

GraphGenerationError::GraphGenerationError(int n, double edge_prob)
    : NumericalError(graph_message(n, edge_prob)), n_(n), edge_prob_(edge_prob) {}

ConvergenceError::ConvergenceError(const std::string& what, double residual)
    : NumericalError(convergence_message(what, residual)), residual_(residual) {}

}  // namespace gtadam
