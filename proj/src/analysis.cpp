#include "gtadam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bound_matrix.hpp"
#include "gtadam/error.hpp"

namespace gtadam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// sqrt(sum_i |a_i - mean|^2) over the chosen field.
template <typename Field>
double spread(const States& states, Field field) {
  Vec mean = Vec::Zero(field(states.front()).size());
  for (const auto& s : states) mean += field(s);
  mean /= static_cast<double>(states.size());
  double acc = 0.0;
  for (const auto& s : states) acc += (field(s) - mean).squaredNorm();
  return std::sqrt(acc);
}

bool lemma_violated(double lhs, double rhs) { return lhs > rhs * (1.0 + 1e-9) + 1e-9; }

bool bound_violated(double lhs, double rhs) { return lhs > rhs + 1e-9 * (1.0 + std::abs(rhs)); }

void require_exact(const CostStream& stream) {
  if (!stream.constants().exact) {
    throw ValidationError("constants not exact: monitors need a stream with analytic constants");
  }
}

Mat random_rotation(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) g(r, c) = gauss(rng);
  }
  return Eigen::HouseholderQR<Mat>(g).householderQ();
}

}  // namespace

Vec6 diagnostics(const States& states, const Vec& minimizer) {
  if (states.empty()) throw ValidationError("empty state list");
  if (minimizer.size() != states.front().x.size()) {
    throw ValidationError("minimizer dimension differs from the states");
  }
  const Vec mbar = mean_m(states);
  const Vec sbar = mean_s(states);
  const Vec xbar = mean_x(states);
  Vec6 y;
  y(0) = mbar.norm();
  y(1) = (sbar - mbar).norm();
  y(2) = spread(states, [](const AgentState& a) -> const Vec& { return a.m; });
  y(3) = spread(states, [](const AgentState& a) -> const Vec& { return a.s; });
  y(4) = spread(states, [](const AgentState& a) -> const Vec& { return a.x; });
  y(5) = (xbar - minimizer).norm();
  return y;
}

double contraction_factor(const BoundInputs& in) {
  const double a = in.alpha * (1.0 - in.beta1);
  return std::max(std::abs(1.0 - a * in.strong_convexity / std::sqrt(in.eps + in.sat)),
                  std::abs(1.0 - a * in.lipschitz / std::sqrt(in.eps)));
}

double perturbation_delta(const BoundInputs& in) {
  const double c = 1.0 - in.beta1;
  return std::min(c * in.strong_convexity / std::sqrt(in.eps + in.sat),
                  c * in.lipschitz / std::sqrt(in.eps));
}

double step_threshold(const BoundInputs& in) {
  const double c = 1.0 - in.beta1;
  return std::min(std::sqrt(in.eps + in.sat) / (c * in.strong_convexity),
                  std::sqrt(in.eps) / (c * in.lipschitz));
}

Mat6 bound_matrix(const BoundInputs& in) { return detail::bound_matrix_t<double>(in, in.alpha); }

Vec6 disturbance(const BoundInputs& in, double eta_prev, double eta_now, double zeta_now) {
  const double sn = std::sqrt(static_cast<double>(in.n_agents));
  Vec6 r = Vec6::Zero();
  r(1) = in.lipschitz / sn * eta_prev;
  r(3) = sn * eta_now;
  r(5) = zeta_now;
  return r;
}

BoundModel build_bound_model(double lipschitz, double strong_convexity, double eta, double zeta,
                             const Network& network, const AlgoParams& params) {
  if (!(lipschitz > 0.0) || !(strong_convexity > 0.0)) {
    throw ValidationError("bound model needs positive L and q");
  }
  if (!(eta >= 0.0) || !(zeta >= 0.0) || !std::isfinite(eta) || !std::isfinite(zeta)) {
    throw ValidationError("bound model needs finite eta, zeta >= 0");
  }
  if (!(params.alpha >= 0.0)) throw ValidationError("alpha out of range: must be >= 0");
  if (!(params.beta1 > 0.0 && params.beta1 < 1.0)) {
    throw ValidationError("beta1 out of range: must be in (0, 1)");
  }
  if (!(params.eps > 0.0) || !(params.sat > 0.0)) {
    throw ValidationError("eps and sat must be positive");
  }
  if (network.n_agents < 1) throw ValidationError("network has no agents");

  BoundModel m;
  m.in.lipschitz = lipschitz;
  m.in.strong_convexity = strong_convexity;
  m.in.n_agents = network.n_agents;
  m.in.sigma_w = network.sigma_w;
  m.in.w_minus_i = network.w_minus_i_norm;
  m.in.alpha = params.alpha;
  m.in.beta1 = params.beta1;
  m.in.eps = params.eps;
  m.in.sat = params.sat;
  m.eta = eta;
  m.zeta = zeta;

  const double n = static_cast<double>(network.n_agents);
  const double sn = std::sqrt(n);
  const double se = std::sqrt(params.eps);
  const double b1 = params.beta1;
  const double L = lipschitz;
  m.B = L / sn;
  m.C = L * network.w_minus_i_norm;
  m.K = network.sigma_w * m.B + b1 * m.B + params.alpha * b1 * (1.0 - b1) * m.B * m.B / se;

  m.A = bound_matrix(m.in);
  BoundInputs at_zero = m.in;
  at_zero.alpha = 0.0;
  m.A0 = bound_matrix(at_zero);

  m.delta = perturbation_delta(m.in);
  m.phi = contraction_factor(m.in);
  m.alpha_max = step_threshold(m.in);

  Mat6& e = m.E;
  e.setZero();
  e(1, 0) = b1 * m.B / se;
  e(1, 2) = b1 * m.B / se;
  e(1, 3) = b1 * m.B / se;
  e(1, 4) = b1 * (1.0 - b1) * m.B * m.B / se;
  e(1, 5) = (1.0 - b1) * m.B * L / se;
  e(3, 0) = b1 * L * sn / se;
  e(3, 2) = b1 * L / se;
  e(3, 3) = L * (1.0 - b1) / se;
  e(3, 4) = (1.0 - b1) * L * L / se;
  e(3, 5) = (1.0 - b1) * L * L * sn / se;
  e(4, 2) = b1 / se;
  e(4, 3) = (1.0 - b1) / se;
  e(5, 1) = b1 / se;
  e(5, 4) = m.B / se;
  e(5, 5) = -m.delta;

  m.R = disturbance(m.in, eta, eta, zeta);
  m.Q = L * L * eta * eta / n + n * eta * eta + zeta * zeta;

  const SpectralSummary sp = bound_spectral_radius(m.in);
  m.rho = sp.rho;
  m.one_minus_rho = sp.one_minus_rho;
  m.step_admissible = params.alpha < m.alpha_max;
  return m;
}

double theorem1_bound(int t, double y0_norm, const BoundModel& model) {
  if (!model.contraction_certified()) throw NumericalError("no contraction certificate (rho >= 1)");
  if (t < 0) throw ValidationError("t must be >= 0");
  const double gap = model.one_minus_rho;
  const double rt = std::exp(static_cast<double>(t) * std::log1p(-gap));
  const double sq = std::sqrt(model.Q);
  return 0.5 * model.in.lipschitz *
         (rt * rt * y0_norm * y0_norm + 2.0 * rt * y0_norm * sq / gap + model.Q / (gap * gap));
}

double asymptotic_regret_bound(const BoundModel& model) {
  if (!model.contraction_certified()) throw NumericalError("no contraction certificate (rho >= 1)");
  const double gap = model.one_minus_rho;
  return 0.5 * model.in.lipschitz * model.Q / (gap * gap);
}

double norm_bound(int t, double y0_norm, const BoundModel& model) {
  const double gap = model.one_minus_rho;
  const double r = model.R.norm();
  const double log_rho = std::log1p(-gap);
  const double rt = std::exp(static_cast<double>(t) * log_rho);
  if (gap > 0.0) return rt * y0_norm + r / gap;
  if (gap == 0.0) return y0_norm + r * static_cast<double>(t);
  // sum_{k<t} rho^k = (rho^t - 1) / (rho - 1)
  const double sum = std::expm1(static_cast<double>(t) * log_rho) / (-gap);
  return rt * y0_norm + (r == 0.0 ? 0.0 : r * sum);
}

MonitorSeries monitor_series(const Trajectory& traj, const CostStream& stream, double eps) {
  require_exact(stream);
  if (traj.snapshots.size() != static_cast<std::size_t>(traj.horizon) + 1) {
    throw ValidationError("monitors need every state snapshot of the trajectory");
  }
  MonitorSeries out;
  const auto len = traj.snapshots.size();
  out.y.reserve(len);
  out.direction_spread.assign(len, kNaN);
  out.eta.assign(len, kNaN);
  out.zeta.assign(len, kNaN);
  for (std::size_t t = 0; t < len; ++t) {
    const int ti = static_cast<int>(t);
    const States& st = traj.snapshots[t];
    const auto star = stream.analytic_minimizer(ti);
    if (!star) throw ValidationError("constants not exact: no analytic minimizer");
    out.y.push_back(diagnostics(st, *star));
    if (t == 0) continue;
    out.direction_spread[t] = spread(st, [eps](const AgentState& a) -> Vec {
      return (a.m.array() / (a.v.array() + eps).sqrt()).matrix();
    });
    const VariationBounds vb = stream.variation_bounds(ti);
    out.eta[t] = vb.eta;
    out.zeta[t] = vb.zeta;
  }
  return out;
}

std::vector<Violation> recursion_check(const MonitorSeries& series, const BoundModel& model) {
  std::vector<Violation> out;
  for (std::size_t t = 2; t < series.y.size(); ++t) {
    const Vec6 rhs = model.A * series.y[t - 1] +
                     disturbance(model.in, series.eta[t - 1], series.eta[t], series.zeta[t]);
    for (int r = 0; r < 6; ++r) {
      if (bound_violated(series.y[t](r), rhs(r))) {
        out.push_back({static_cast<int>(t), r + 1, series.y[t](r), rhs(r)});
      }
    }
  }
  return out;
}

std::vector<Violation> recursion_check(const Trajectory& traj, const BoundModel& model,
                                       const CostStream& stream) {
  return recursion_check(monitor_series(traj, stream, model.in.eps), model);
}

std::vector<Violation> norm_bound_check(const MonitorSeries& series, const BoundModel& model) {
  std::vector<Violation> out;
  if (series.y.empty()) return out;
  const double y0 = series.y.front().norm();
  for (std::size_t t = 2; t < series.y.size(); ++t) {
    const double lhs = series.y[t].norm();
    const double rhs = norm_bound(static_cast<int>(t), y0, model);
    if (bound_violated(lhs, rhs)) out.push_back({static_cast<int>(t), 0, lhs, rhs});
  }
  return out;
}

LemmaConstants LemmaConstants::from(const BoundModel& model) {
  LemmaConstants k;
  k.alpha = model.in.alpha;
  k.beta1 = model.in.beta1;
  k.eps = model.in.eps;
  k.sigma_w = model.in.sigma_w;
  k.w_minus_i = model.in.w_minus_i;
  k.lipschitz = model.in.lipschitz;
  k.phi = model.phi;
  k.n_agents = model.in.n_agents;
  return k;
}

std::vector<Violation> lemma_monitor(const MonitorSeries& series, const LemmaConstants& k,
                                     int lemma_id) {
  if (lemma_id < 1 || lemma_id > 7) throw ValidationError("lemma id must be in 1..7");
  const double a = k.alpha;
  const double b1 = k.beta1;
  const double c1 = 1.0 - b1;
  const double se = std::sqrt(k.eps);
  const double n = static_cast<double>(k.n_agents);
  const double sn = std::sqrt(n);
  const double L = k.lipschitz;
  const double sw = k.sigma_w;

  std::vector<Violation> out;
  for (std::size_t t = 2; t < series.y.size(); ++t) {
    const Vec6& p = series.y[t - 1];
    const Vec6& c = series.y[t];
    double lhs = 0.0;
    double rhs = 0.0;
    switch (lemma_id) {
      case 1:
        lhs = c(2);
        rhs = b1 * p(2) + c1 * p(3);
        break;
      case 2:
        lhs = series.direction_spread[t];
        rhs = b1 / se * p(2) + c1 / se * p(3);
        break;
      case 3:
        lhs = c(4);
        rhs = sw * p(4) + a * b1 / se * p(2) + a * c1 / se * p(3);
        break;
      case 4:
        lhs = c(0);
        rhs = b1 * p(0) + c1 * L / sn * p(4) + c1 * L * p(5);
        break;
      case 5:
        lhs = c(3);
        rhs = (sw + a * L * c1 / se) * p(3) + (L * k.w_minus_i + a * c1 * L * L / se) * p(4) +
              a * c1 * L * L * sn / se * p(5) + a * b1 * L * sn / se * p(0) +
              sn * series.eta[t] + a * L * b1 / se * p(2);
        break;
      case 6:
        lhs = c(1);
        rhs = b1 * p(1) + (sw * L / sn + L / sn + a * c1 * L * L / (se * n)) * p(4) +
              a * b1 * L / (se * sn) * (p(2) + p(3) + p(0)) + L / sn * series.eta[t - 1] +
              a * c1 * L * L / (se * sn) * p(5);
        break;
      case 7:
        lhs = c(5);
        rhs = k.phi * p(5) + a * b1 / se * p(1) + a * L / (se * sn) * p(4) + series.zeta[t];
        break;
    }
    if (lemma_violated(lhs, rhs)) out.push_back({static_cast<int>(t), lemma_id, lhs, rhs});
  }
  return out;
}

std::vector<Violation> lemma_monitor(const Trajectory& traj, const CostStream& stream,
                                     const Network& network, const AlgoParams& params,
                                     int lemma_id) {
  require_exact(stream);
  const StreamConstants& sc = stream.constants();
  const BoundModel model = build_bound_model(sc.lipschitz, sc.strong_convexity, sc.eta_bound,
                                             sc.zeta_bound, network, params);
  return lemma_monitor(monitor_series(traj, stream, params.eps), LemmaConstants::from(model),
                       lemma_id);
}

EigenStructureReport eigen_structure_check(const BoundModel& model) {
  EigenStructureReport rep;
  const A0EigenCheck exact = a0_eigenvector_check(model.in);
  rep.a0_right_exact = exact.right;
  rep.a0_left_exact = exact.left;

  Vec6 v = Vec6::Zero();
  v(0) = model.in.lipschitz;
  v(5) = 1.0;
  Vec6 w = Vec6::Zero();
  w(5) = 1.0;
  rep.directional_derivative = w.dot(model.E * v) / w.dot(v);
  rep.derivative_error = std::abs(rep.directional_derivative + model.delta);

  BoundInputs probe = model.in;
  rep.max_slope_rel_error = 0.0;
  for (int i = 0; i < 2; ++i) {
    probe.alpha = rep.alphas[i];
    rep.slopes[i] = leading_eigenvalue_shift(probe) / rep.alphas[i];
    rep.max_slope_rel_error =
        std::max(rep.max_slope_rel_error, std::abs(rep.slopes[i] + model.delta) / model.delta);
  }
  rep.slope_ok = rep.max_slope_rel_error <= 0.05;

  probe.alpha = 1e-6;
  const double full = leading_eigenvalue_shift(probe);
  probe.alpha = 5e-7;
  const double half = leading_eigenvalue_shift(probe);
  rep.halving_ratio = full / half;
  rep.halving_ok = std::abs(rep.halving_ratio - 2.0) <= 0.1;
  return rep;
}

AppendixSpec appendix_spec_from_saturation(double q, double lipschitz, double eps, double sat,
                                           double alpha, std::uint64_t seed) {
  if (!(eps > 0.0) || !(sat > 0.0)) throw ValidationError("eps and sat must be positive");
  AppendixSpec spec;
  spec.q = q;
  spec.lipschitz = lipschitz;
  spec.d_min = 1.0 / std::sqrt(sat + eps);
  spec.d_max = 1.0 / std::sqrt(eps);
  spec.alpha = alpha;
  spec.seed = seed;
  return spec;
}

AppendixReport appendix_contraction_check(const AppendixSpec& spec) {
  if (!(spec.alpha > 0.0)) throw ValidationError("alpha out of range: must be > 0");
  if (!(spec.d_min > 0.0) || !(spec.d_max >= spec.d_min)) {
    throw ValidationError("diagonal range must satisfy 0 < d_min <= d_max");
  }
  if (!(spec.q > 0.0) || !(spec.lipschitz >= spec.q)) {
    throw ValidationError("spectrum must satisfy 0 < q <= L");
  }
  if (spec.dim < 1) throw ValidationError("dimension must be positive");

  AppendixReport rep;
  rep.sigma_bar = spec.d_min * spec.q;
  rep.l_bar = spec.d_max * spec.lipschitz;
  rep.alpha_admissible = spec.alpha <= 2.0 / rep.l_bar;
  rep.contraction_factor =
      std::max(std::abs(1.0 - spec.alpha * rep.sigma_bar), std::abs(1.0 - spec.alpha * rep.l_bar));
  const double mu = rep.sigma_bar * rep.l_bar / (rep.sigma_bar + rep.l_bar);
  const double inv = 1.0 / (rep.sigma_bar + rep.l_bar);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> spectrum(spec.q, spec.lipschitz);
  std::uniform_real_distribution<double> scale(spec.d_min, spec.d_max);
  std::uniform_int_distribution<int> block_size(1, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = spec.dim;

  auto random_vec = [&] {
    Vec z(n);
    for (int j = 0; j < n; ++j) z(j) = gauss(rng);
    return z;
  };

  for (int inst = 0; inst < spec.instances; ++inst) {
    // D must be constant on each invariant block of H for D grad f to be a
    // gradient field; build block-diagonal H, then relabel coordinates.
    Mat h = Mat::Zero(n, n);
    Vec d(n);
    int start = 0;
    while (start < n) {
      const int size = std::min(block_size(rng), n - start);
      Vec lambda(size);
      for (int j = 0; j < size; ++j) lambda(j) = spectrum(rng);
      const Mat rot = random_rotation(size, rng);
      h.block(start, start, size, size) = rot * lambda.asDiagonal() * rot.transpose();
      d.segment(start, size).setConstant(scale(rng));
      start += size;
    }
    h = 0.5 * (h + h.transpose());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(n);
    for (int j = 0; j < n; ++j) p.indices()(j) = perm[static_cast<std::size_t>(j)];
    h = p * h * p.transpose();
    d = p * d;
    const Vec center = random_vec();
    auto scaled_grad = [&](const Vec& x) -> Vec { return d.cwiseProduct(h * (x - center)); };

    for (int k = 0; k < spec.pairs; ++k) {
      const Vec x = 3.0 * random_vec();
      const Vec y = 3.0 * random_vec();
      const Vec diff = scaled_grad(x) - scaled_grad(y);
      const Vec z = x - y;
      const double lhs = diff.dot(z);
      const double rhs = mu * z.squaredNorm() + inv * diff.squaredNorm();
      ++rep.cocoercivity_checks;
      const double slack = lhs - rhs;
      rep.worst_cocoercivity_slack = std::min(rep.worst_cocoercivity_slack, slack);
      if (slack < -1e-10 * (1.0 + std::abs(rhs))) ++rep.cocoercivity_violations;
    }

    // Iterate on e = x - center; forming x - center near convergence would
    // measure cancellation instead of the contraction.
    Vec e = 3.0 * random_vec();
    for (int k = 0; k < spec.steps; ++k) {
      const double before = e.norm();
      if (before < 1e-280) break;
      e -= spec.alpha * d.cwiseProduct(h * e);
      const double ratio = e.norm() / before;
      ++rep.contraction_steps;
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
      if (ratio > rep.contraction_factor * (1.0 + 1e-12) + 1e-15) ++rep.contraction_violations;
    }
  }
  return rep;
}

Vec compute_minimizer(const CostStream& stream, int t, double tol, int max_iter, const Vec* warm) {
  if (auto exact = stream.analytic_minimizer(t)) return *exact;
  if (tol <= 0.0) tol = 1e-10 * static_cast<double>(stream.n_agents());
  if (max_iter < 1) throw ValidationError("max_iter must be positive");
  Vec x = warm != nullptr ? *warm : Vec::Zero(stream.dim());
  if (x.size() != stream.dim()) throw ValidationError("warm start has the wrong dimension");
  const double lipschitz = std::max(stream.constants().lipschitz, 1e-12);
  const double n = static_cast<double>(stream.n_agents());

  Vec g = stream.total_grad(t, x);
  for (int it = 0; it < max_iter; ++it) {
    if (g.norm() <= tol) return x;
    Vec dir;
    Eigen::LLT<Mat> llt(stream.total_hessian(t, x));
    if (llt.info() == Eigen::Success) {
      dir = -llt.solve(g);
    } else {
      dir = -g / (n * lipschitz);
    }
    const double f0 = stream.total_eval(t, x);
    const double slope = g.dot(dir);
    Vec next = x + dir;
    Vec g_next = stream.total_grad(t, next);
    // Near the optimum the predicted decrease drops below the resolution of
    // f; there the full step is judged by the gradient norm instead.
    const bool below_resolution = -slope <= 1e-12 * (1.0 + std::abs(f0));
    if (!(below_resolution && g_next.norm() < g.norm())) {
      // Armijo backtracking; a full Newton step is accepted near the optimum.
      double step = 1.0;
      for (int k = 0; k < 60; ++k) {
        next = x + step * dir;
        if (stream.total_eval(t, next) <= f0 + 1e-4 * step * slope) break;
        step *= 0.5;
      }
      g_next = stream.total_grad(t, next);
    }
    if (g_next.norm() >= g.norm() && stream.total_eval(t, next) >= f0) {
      throw ConvergenceError("minimizer not converged: line search stalled", g.norm());
    }
    x = std::move(next);
    g = std::move(g_next);
  }
  if (g.norm() <= tol) return x;
  throw ConvergenceError("minimizer not converged", g.norm());
}

}  // namespace gtadam
