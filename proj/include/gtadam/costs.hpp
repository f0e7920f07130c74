#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gtadam/network.hpp"

namespace gtadam {

/// Regularity constants of a stream. When `exact` is false the values are
/// numerical estimates and eta/zeta may be NaN (not available).
struct StreamConstants {
  double lipschitz = 0.0;
  double strong_convexity = 0.0;
  double eta_bound = 0.0;
  double zeta_bound = 0.0;
  bool exact = false;
};

/// Exact per-step variations: eta_t = max_i max_x |grad f_{i,t} - grad f_{i,t-1}|,
/// zeta_t = |x*_t - x*_{t-1}|.
struct VariationBounds {
  double eta = 0.0;
  double zeta = 0.0;
};

/// Time-indexed family of per-agent differentiable costs f_{i,t}: R^n -> R.
class CostStream {
 public:
  CostStream(int dim, int n_agents);
  virtual ~CostStream() = default;

  CostStream(const CostStream&) = delete;
  CostStream& operator=(const CostStream&) = delete;

  int dim() const noexcept { return dim_; }
  int n_agents() const noexcept { return n_agents_; }

  virtual std::string_view kind() const noexcept = 0;
  virtual const StreamConstants& constants() const noexcept = 0;

  virtual double eval(int agent, int t, const Vec& x) const = 0;
  virtual Vec grad(int agent, int t, const Vec& x) const = 0;

  /// Hessian of f_{i,t}; the default differentiates grad centrally.
  virtual Mat hessian(int agent, int t, const Vec& x) const;

  /// Closed-form x*_t when the stream has one.
  virtual std::optional<Vec> analytic_minimizer(int t) const;

  /// Exact eta_t, zeta_t for t >= 1. Throws ValidationError("constants not
  /// exact") unless the stream has analytic constants.
  virtual VariationBounds variation_bounds(int t) const;

  /// f_t = sum_i f_{i,t} and its derivatives.
  double total_eval(int t, const Vec& x) const;
  Vec total_grad(int t, const Vec& x) const;
  Mat total_hessian(int t, const Vec& x) const;

 protected:
  void check_args(int agent, int t, const Vec& x) const;

 private:
  int dim_;
  int n_agents_;
};

/// Central-difference gradient, component j = (f(x + h e_j) - f(x - h e_j)) / 2h.
Vec finite_diff_grad(const CostStream& stream, int agent, int t, const Vec& x, double h);

/// Center path b_i(t) of a quadratic stream.
using CenterPath = std::function<Vec(int agent, int t)>;

/// f_{i,t}(x) = 1/2 (x - b_i(t))^T H_i (x - b_i(t)) with symmetric H_i > 0.
class QuadraticStream final : public CostStream {
 public:
  /// eta_bound/zeta_bound are the sup of the exact variations over
  /// t = 1..bound_horizon.
  QuadraticStream(std::vector<Mat> curvatures, CenterPath centers, int bound_horizon = 1000);

  std::string_view kind() const noexcept override { return "quadratic"; }
  const StreamConstants& constants() const noexcept override { return constants_; }

  double eval(int agent, int t, const Vec& x) const override;
  Vec grad(int agent, int t, const Vec& x) const override;
  Mat hessian(int agent, int t, const Vec& x) const override;
  std::optional<Vec> analytic_minimizer(int t) const override;
  VariationBounds variation_bounds(int t) const override;

  Vec center(int agent, int t) const;
  const Mat& curvature(int agent) const { return curvatures_.at(static_cast<std::size_t>(agent)); }

  /// Solves (sum H_i) x = sum H_i b_i(t).
  Vec minimizer(int t) const;

 private:
  std::vector<Mat> curvatures_;
  CenterPath centers_;
  Eigen::LDLT<Mat> total_curvature_;
  StreamConstants constants_;
};

enum class Drift { kStatic, kSinusoidal };

struct QuadraticSpec {
  int n_agents = 10;
  int dim = 5;
  double strong_convexity = 1.0;
  double lipschitz = 4.0;
  /// Same H for every agent (required by the lemma monitors).
  bool identical_curvature = true;
  /// Diagonal H instead of a random rotation of the spectrum.
  bool diagonal = false;
  double center_scale = 2.0;
  Drift drift = Drift::kStatic;
  double amplitude = 1.0;
  double frequency = 0.05;
  int bound_horizon = 1000;
};

/// Random quadratic stream. The curvature spectrum spans exactly
/// [strong_convexity, lipschitz]; sinusoidal centers follow
/// b_i(t) = b_i + amplitude * sin(frequency * t + phase_i) elementwise.
std::unique_ptr<QuadraticStream> make_quadratic_stream(const QuadraticSpec& spec,
                                                       std::uint64_t seed);

/// Regularized logistic loss over points moving on circles.
struct LogisticData {
  /// centers[i][k] is p^c_{i,k}; labels[i][k] is in {-1, +1}.
  std::vector<std::vector<Eigen::Vector2d>> centers;
  std::vector<std::vector<double>> labels;
  double radius = 1.0;
  double regularization = 1.0;
  double time_scale = 100.0;
};

/// Draws centers from N(0, spread^2 I) and labels them with a random
/// ground-truth hyperplane.
LogisticData generate_logistic_data(int n_agents, int points_per_agent, double spread,
                                    std::uint64_t seed);

/// x = (w_1, w_2, b). Local cost sum_k log(1 + exp(-l (w^T p + b))) +
/// (C / 2N)(|w|^2 + b^2).
class LogisticStream final : public CostStream {
 public:
  explicit LogisticStream(LogisticData data);

  std::string_view kind() const noexcept override { return "logistic"; }
  const StreamConstants& constants() const noexcept override { return constants_; }

  double eval(int agent, int t, const Vec& x) const override;
  Vec grad(int agent, int t, const Vec& x) const override;
  Mat hessian(int agent, int t, const Vec& x) const override;

  /// p^c_{i,k} + r (cos(t / 100), sin(t / 100)).
  Eigen::Vector2d point(int agent, int k, double t) const;

  const LogisticData& data() const noexcept { return data_; }

 private:
  LogisticData data_;
  StreamConstants constants_;
};

struct LocalizationSetup {
  std::vector<Eigen::Vector2d> sensors;
  Eigen::Vector2d source_center = Eigen::Vector2d::Zero();
  double radius = 0.5;
  double amplitude = 100.0;
  double attenuation = 1.0;
  double noise_variance = 1e-3;
  std::uint64_t noise_seed = 0;
  double time_scale = 200.0;
};

/// Sensors and source center drawn from N(0, spread^2 I).
LocalizationSetup generate_localization_setup(int n_agents, double spread, std::uint64_t seed);

/// Nonlinear least squares f_{i,t}(x) = (omega_{i,t} - A / |x - c_i|^gamma)^2.
/// Nonconvex: constants are local estimates and never exact.
class LocalizationStream final : public CostStream {
 public:
  explicit LocalizationStream(LocalizationSetup setup);

  std::string_view kind() const noexcept override { return "localization"; }
  const StreamConstants& constants() const noexcept override { return constants_; }

  double eval(int agent, int t, const Vec& x) const override;
  Vec grad(int agent, int t, const Vec& x) const override;

  /// theta_t = theta_c + r (cos(t / 200), sin(t / 200)).
  Eigen::Vector2d source(int t) const;

  /// A / |theta - c_i|^gamma; throws NumericalError("singular measurement")
  /// when theta coincides with the sensor.
  double model_value(int agent, const Eigen::Vector2d& theta) const;

  /// omega_{i,t} = model_value(i, theta_t) + eps_{i,t}; the noise draw is a
  /// pure function of (seed, i, t) and cached on first use.
  double measure(int agent, int t) const;

  const LocalizationSetup& setup() const noexcept { return setup_; }

 private:
  double noise(int agent, int t) const;

  LocalizationSetup setup_;
  StreamConstants constants_;
  mutable std::shared_mutex noise_mutex_;
  mutable std::unordered_map<std::uint64_t, double> noise_cache_;
};

}  // namespace gtadam
