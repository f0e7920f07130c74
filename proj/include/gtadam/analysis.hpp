#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtadam/algorithms.hpp"
#include "gtadam/costs.hpp"
#include "gtadam/network.hpp"

namespace gtadam {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// y_t = (|m̄|, |s̄ - m̄|, |m - 1m̄|, |s - 1s̄|, |x - 1x̄|, |x̄ - x*|) with
/// stacked (Frobenius) norms for the agent blocks.
Vec6 diagnostics(const States& states, const Vec& minimizer);

/// Scalars that determine A(alpha).
struct BoundInputs {
  double lipschitz = 0.0;
  double strong_convexity = 0.0;
  int n_agents = 1;
  double sigma_w = 0.0;
  double w_minus_i = 0.0;
  double alpha = 0.0;
  double beta1 = 0.9;
  double eps = 1e-8;
  double sat = 1e6;
};

struct BoundModel {
  BoundInputs in;
  double eta = 0.0;
  double zeta = 0.0;

  double B = 0.0;  // L / sqrt(N)
  double C = 0.0;  // L |W - I|
  double K = 0.0;  // sigma_W B + beta1 B + alpha beta1 (1 - beta1) B^2 / sqrt(eps)
  Mat6 A = Mat6::Zero();
  Mat6 A0 = Mat6::Zero();
  Mat6 E = Mat6::Zero();
  Vec6 R = Vec6::Zero();

  double delta = 0.0;
  double phi = 1.0;
  double alpha_max = 0.0;
  double Q = 0.0;

  /// Spectral radius of A(alpha) and 1 - rho, both from an extended
  /// precision eigensolve (1 - rho is far below double resolution for
  /// small alpha).
  double rho = 1.0;
  double one_minus_rho = 0.0;

  /// alpha < alpha_max.
  bool step_admissible = false;
  /// rho < 1.
  bool contraction_certified() const noexcept { return one_minus_rho > 0.0; }
};

/// phi(alpha) by the max-of-absolute-values formula.
double contraction_factor(const BoundInputs& in);
double perturbation_delta(const BoundInputs& in);
double step_threshold(const BoundInputs& in);

/// A(alpha) evaluated in double precision.
Mat6 bound_matrix(const BoundInputs& in);

/// R_t = (0, B eta_{t-1}, 0, sqrt(N) eta_t, 0, zeta_t).
Vec6 disturbance(const BoundInputs& in, double eta_prev, double eta_now, double zeta_now);

BoundModel build_bound_model(double lipschitz, double strong_convexity, double eta, double zeta,
                             const Network& network, const AlgoParams& params);

struct SpectralSummary {
  double rho = 0.0;
  double one_minus_rho = 0.0;
};

/// Spectral radius of A(in.alpha), built and solved in 50-digit arithmetic.
SpectralSummary bound_spectral_radius(const BoundInputs& in);

/// lambda(alpha) - 1 for the eigenvalue of A(alpha) that continues the
/// simple eigenvalue 1 of A0 (largest real part), in extended precision.
double leading_eigenvalue_shift(const BoundInputs& in);

/// A0 v == v and w^T A0 == w^T, evaluated exactly in extended precision.
struct A0EigenCheck {
  bool right = false;
  bool left = false;
};
A0EigenCheck a0_eigenvector_check(const BoundInputs& in);

/// Largest alpha in (0, upper] with rho(A(alpha)) < 1, located by geometric
/// bisection. Returns 0 if none is found above 1e-40.
double largest_contractive_alpha(const BoundInputs& in, double upper);

/// (L/2)(rho^{2t}|y0|^2 + 2 rho^t |y0| sqrt(Q)/(1 - rho) + Q/(1 - rho)^2).
/// Throws NumericalError("no contraction certificate") when rho >= 1.
double theorem1_bound(int t, double y0_norm, const BoundModel& model);

/// (L/2) Q / (1 - rho)^2; same precondition as theorem1_bound.
double asymptotic_regret_bound(const BoundModel& model);

/// rho^t |y0| + |R| / (1 - rho); for rho >= 1 the finite geometric sum
/// rho^t |y0| + |R| sum_{k < t} rho^k is used instead.
double norm_bound(int t, double y0_norm, const BoundModel& model);

struct Violation {
  int t = 0;
  /// Recursion row (1..6) or lemma id (1..7).
  int index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Per-iteration quantities consumed by the monitors. eta/zeta/direction
/// entries at t = 0 are NaN.
struct MonitorSeries {
  std::vector<Vec6> y;
  std::vector<double> direction_spread;  // |d_t - 1 d̄_t|, d = m / sqrt(v + eps)
  std::vector<double> eta;
  std::vector<double> zeta;
};

/// Requires snapshots and a stream with exact constants.
MonitorSeries monitor_series(const Trajectory& traj, const CostStream& stream, double eps);

/// y_t <= A y_{t-1} + R_t rowwise for t >= 2, tolerance 1e-9 (1 + rhs).
std::vector<Violation> recursion_check(const MonitorSeries& series, const BoundModel& model);
std::vector<Violation> recursion_check(const Trajectory& traj, const BoundModel& model,
                                       const CostStream& stream);

/// |y_t| <= norm_bound(t, |y0|) for t >= 2, tolerance 1e-9 (1 + rhs).
std::vector<Violation> norm_bound_check(const MonitorSeries& series, const BoundModel& model);

/// Constants entering the lemma inequalities; tests overwrite single fields
/// to make sure the monitors can fail.
struct LemmaConstants {
  double alpha = 0.0;
  double beta1 = 0.9;
  double eps = 1e-8;
  double sigma_w = 0.0;
  double w_minus_i = 0.0;
  double lipschitz = 0.0;
  double phi = 1.0;
  int n_agents = 1;

  static LemmaConstants from(const BoundModel& model);
};

/// Checks lemma `lemma_id` (1..7) at every t >= 2. A violation is
/// lhs > rhs (1 + 1e-9) + 1e-9.
std::vector<Violation> lemma_monitor(const MonitorSeries& series, const LemmaConstants& k,
                                     int lemma_id);
std::vector<Violation> lemma_monitor(const Trajectory& traj, const CostStream& stream,
                                     const Network& network, const AlgoParams& params,
                                     int lemma_id);

struct EigenStructureReport {
  bool a0_right_exact = false;
  bool a0_left_exact = false;
  double directional_derivative = 0.0;  // w^T E v / (w^T v)
  double derivative_error = 0.0;        // |... + delta|
  double alphas[2] = {1e-5, 1e-6};
  double slopes[2] = {0.0, 0.0};        // (lambda(alpha) - 1) / alpha
  double max_slope_rel_error = 0.0;
  double halving_ratio = 0.0;           // (lambda(a) - 1) / (lambda(a/2) - 1), a = 1e-6
  bool slope_ok = false;
  bool halving_ok = false;
};

EigenStructureReport eigen_structure_check(const BoundModel& model);

/// Random strongly convex quadratics with spectrum in [q, L] and diagonal
/// scalings D with entries in [d_min, d_max] such that D H is symmetric.
struct AppendixSpec {
  double q = 1.0;
  double lipschitz = 3.0;
  double d_min = 0.5;
  double d_max = 2.0;
  double alpha = 0.1;
  int dim = 5;
  int instances = 20;
  int pairs = 100;
  int steps = 100;
  std::uint64_t seed = 0;
};

/// D ranges of the GTAdam scaling 1 / sqrt(v + eps) with v in [0, G].
AppendixSpec appendix_spec_from_saturation(double q, double lipschitz, double eps, double sat,
                                           double alpha, std::uint64_t seed);

struct AppendixReport {
  double sigma_bar = 0.0;
  double l_bar = 0.0;
  bool alpha_admissible = false;  // alpha <= 2 / l_bar
  double contraction_factor = 0.0;
  int cocoercivity_checks = 0;
  int cocoercivity_violations = 0;
  double worst_cocoercivity_slack = std::numeric_limits<double>::infinity();
  int contraction_steps = 0;
  int contraction_violations = 0;
  double worst_ratio = 0.0;
};

/// Throws ValidationError for alpha <= 0 or an empty D range.
AppendixReport appendix_contraction_check(const AppendixSpec& spec);

/// x*_t: closed form when available, otherwise damped Newton from `warm`
/// (or the origin) until |grad f_t| <= tol. tol <= 0 selects 1e-10 N.
/// Throws ConvergenceError("minimizer not converged") after max_iter.
Vec compute_minimizer(const CostStream& stream, int t, double tol = 0.0, int max_iter = 200,
                      const Vec* warm = nullptr);

}  // namespace gtadam
