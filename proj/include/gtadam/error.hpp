#pragma once

#include <stdexcept>
#include <string>

namespace gtadam {

// Exit codes used by the CLI; each exception type maps to one category.
enum class ErrorCategory : int {
  kValidation = 2,
  kNumerical = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCategory::kValidation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCategory::kNumerical, what) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(ErrorCategory::kIo, path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised when Erdős–Rényi sampling keeps producing disconnected graphs.
class GraphGenerationError : public NumericalError {
 public:
  GraphGenerationError(int n, double edge_prob);

  int n() const noexcept { return n_; }
  double edge_prob() const noexcept { return edge_prob_; }

 private:
  int n_;
  double edge_prob_;
};

/// Raised by the minimizer oracle when the gradient tolerance is not reached.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual);

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace gtadam
