#include "gtadam/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "gtadam/error.hpp"

namespace gtadam {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double max_eigenvalue(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// CostStream

CostStream::CostStream(int dim, int n_agents) : dim_(dim), n_agents_(n_agents) {
  if (dim <= 0) throw ValidationError("stream dimension must be positive");
  if (n_agents <= 0) throw ValidationError("stream needs at least one agent");
}

void CostStream::check_args(int agent, int t, const Vec& x) const {
  if (agent < 0 || agent >= n_agents_) {
    std::ostringstream os;
    os << "agent index " << agent << " out of range [0, " << n_agents_ << ")";
    throw ValidationError(os.str());
  }
  if (t < 0) throw ValidationError("time index must be non-negative");
  if (x.size() != dim_) {
    std::ostringstream os;
    os << "point has dimension " << x.size() << ", stream expects " << dim_;
    throw ValidationError(os.str());
  }
}

Mat CostStream::hessian(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  Mat h(dim_, dim_);
  Vec probe = x;
  for (int j = 0; j < dim_; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(j)));
    probe(j) = x(j) + step;
    const Vec up = grad(agent, t, probe);
    probe(j) = x(j) - step;
    const Vec down = grad(agent, t, probe);
    probe(j) = x(j);
    h.col(j) = (up - down) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

std::optional<Vec> CostStream::analytic_minimizer(int) const { return std::nullopt; }

VariationBounds CostStream::variation_bounds(int) const {
  throw ValidationError("constants not exact: variation bounds need an analytic stream");
}

double CostStream::total_eval(int t, const Vec& x) const {
  double total = 0.0;
  for (int i = 0; i < n_agents_; ++i) total += eval(i, t, x);
  return total;
}

Vec CostStream::total_grad(int t, const Vec& x) const {
  Vec total = Vec::Zero(dim_);
  for (int i = 0; i < n_agents_; ++i) total += grad(i, t, x);
  return total;
}

Mat CostStream::total_hessian(int t, const Vec& x) const {
  Mat total = Mat::Zero(dim_, dim_);
  for (int i = 0; i < n_agents_; ++i) total += hessian(i, t, x);
  return total;
}

Vec finite_diff_grad(const CostStream& stream, int agent, int t, const Vec& x, double h) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe(j) = x(j) + h;
    const double up = stream.eval(agent, t, probe);
    probe(j) = x(j) - h;
    const double down = stream.eval(agent, t, probe);
    probe(j) = x(j);
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// QuadraticStream

QuadraticStream::QuadraticStream(std::vector<Mat> curvatures, CenterPath centers,
                                 int bound_horizon)
    : CostStream(curvatures.empty() ? 1 : static_cast<int>(curvatures.front().rows()),
                 static_cast<int>(curvatures.size())),
      curvatures_(std::move(curvatures)),
      centers_(std::move(centers)) {
  if (!centers_) throw ValidationError("quadratic stream needs a center path");
  double lipschitz = 0.0;
  double strong = std::numeric_limits<double>::infinity();
  Mat total = Mat::Zero(dim(), dim());
  for (const Mat& h : curvatures_) {
    if (h.rows() != dim() || h.cols() != dim()) {
      throw ValidationError("curvature matrices must all be dim x dim");
    }
    if (!h.isApprox(h.transpose(), 1e-12)) throw ValidationError("curvature must be symmetric");
    const double lo = min_eigenvalue(h);
    if (!(lo > 0.0)) throw ValidationError("curvature must be positive definite");
    lipschitz = std::max(lipschitz, max_eigenvalue(h));
    strong = std::min(strong, lo);
    total += h;
  }
  total_curvature_.compute(total);

  constants_.lipschitz = lipschitz;
  constants_.strong_convexity = strong;
  constants_.exact = true;
  for (int t = 1; t <= bound_horizon; ++t) {
    const VariationBounds v = variation_bounds(t);
    constants_.eta_bound = std::max(constants_.eta_bound, v.eta);
    constants_.zeta_bound = std::max(constants_.zeta_bound, v.zeta);
  }
}

Vec QuadraticStream::center(int agent, int t) const {
  Vec b = centers_(agent, t);
  if (b.size() != dim()) throw ValidationError("center path returned wrong dimension");
  return b;
}

double QuadraticStream::eval(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  const Vec r = x - center(agent, t);
  return 0.5 * r.dot(curvature(agent) * r);
}

Vec QuadraticStream::grad(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  return curvature(agent) * (x - center(agent, t));
}

Mat QuadraticStream::hessian(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  return curvature(agent);
}

Vec QuadraticStream::minimizer(int t) const {
  Vec rhs = Vec::Zero(dim());
  for (int i = 0; i < n_agents(); ++i) rhs += curvature(i) * center(i, t);
  return total_curvature_.solve(rhs);
}

std::optional<Vec> QuadraticStream::analytic_minimizer(int t) const { return minimizer(t); }

VariationBounds QuadraticStream::variation_bounds(int t) const {
  if (t < 1) throw ValidationError("variation bounds are defined for t >= 1");
  VariationBounds out;
  for (int i = 0; i < n_agents(); ++i) {
    // grad f_{i,t}(x) - grad f_{i,t-1}(x) = -H_i (b_i(t) - b_i(t-1)) for every x.
    const Vec shift = curvature(i) * (center(i, t) - center(i, t - 1));
    out.eta = std::max(out.eta, shift.norm());
  }
  out.zeta = (minimizer(t) - minimizer(t - 1)).norm();
  return out;
}

std::unique_ptr<QuadraticStream> make_quadratic_stream(const QuadraticSpec& spec,
                                                       std::uint64_t seed) {
  if (spec.n_agents <= 0 || spec.dim <= 0) {
    throw ValidationError("quadratic spec needs positive n_agents and dim");
  }
  if (!(spec.strong_convexity > 0.0) || !(spec.lipschitz >= spec.strong_convexity)) {
    throw ValidationError("quadratic spec needs 0 < strong_convexity <= lipschitz");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> spectrum(spec.strong_convexity, spec.lipschitz);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  const int n = spec.dim;
  auto draw_curvature = [&](bool pin_extremes) {
    Vec lambda(n);
    for (int j = 0; j < n; ++j) lambda(j) = spectrum(rng);
    if (pin_extremes) {
      lambda(0) = spec.strong_convexity;
      lambda(n - 1) = spec.lipschitz;
    }
    if (spec.diagonal) return Mat(lambda.asDiagonal());
    Mat g(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) g(r, c) = gauss(rng);
    }
    const Mat q = Eigen::HouseholderQR<Mat>(g).householderQ();
    Mat h = q * lambda.asDiagonal() * q.transpose();
    return Mat(0.5 * (h + h.transpose()));
  };

  std::vector<Mat> curvatures;
  curvatures.reserve(static_cast<std::size_t>(spec.n_agents));
  if (spec.identical_curvature) {
    const Mat h = draw_curvature(true);
    curvatures.assign(static_cast<std::size_t>(spec.n_agents), h);
  } else {
    for (int i = 0; i < spec.n_agents; ++i) curvatures.push_back(draw_curvature(i == 0));
  }

  std::vector<Vec> base(static_cast<std::size_t>(spec.n_agents), Vec(n));
  std::vector<Vec> phases(static_cast<std::size_t>(spec.n_agents), Vec(n));
  for (auto& b : base) {
    for (int j = 0; j < n; ++j) b(j) = spec.center_scale * gauss(rng);
  }
  for (auto& p : phases) {
    for (int j = 0; j < n; ++j) p(j) = phase(rng);
  }

  CenterPath path;
  if (spec.drift == Drift::kStatic) {
    path = [base](int agent, int) { return base[static_cast<std::size_t>(agent)]; };
  } else {
    path = [base, phases, amp = spec.amplitude, freq = spec.frequency](int agent, int t) {
      const auto a = static_cast<std::size_t>(agent);
      Vec b = base[a];
      for (Eigen::Index j = 0; j < b.size(); ++j) {
        b(j) += amp * std::sin(freq * static_cast<double>(t) + phases[a](j));
      }
      return b;
    };
  }
  return std::make_unique<QuadraticStream>(std::move(curvatures), std::move(path),
                                           spec.bound_horizon);
}

// ---------------------------------------------------------------------------
// LogisticStream

LogisticData generate_logistic_data(int n_agents, int points_per_agent, double spread,
                                    std::uint64_t seed) {
  if (n_agents <= 0 || points_per_agent <= 0) {
    throw ValidationError("logistic data needs positive agents and points");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  LogisticData data;
  data.centers.resize(static_cast<std::size_t>(n_agents));
  data.labels.resize(static_cast<std::size_t>(n_agents));
  for (auto& pts : data.centers) {
    pts.resize(static_cast<std::size_t>(points_per_agent));
    for (auto& p : pts) p = Eigen::Vector2d(spread * gauss(rng), spread * gauss(rng));
  }
  const Eigen::Vector2d w_true(gauss(rng), gauss(rng));
  const double b_true = gauss(rng);
  for (std::size_t i = 0; i < data.centers.size(); ++i) {
    data.labels[i].resize(data.centers[i].size());
    for (std::size_t k = 0; k < data.centers[i].size(); ++k) {
      data.labels[i][k] = w_true.dot(data.centers[i][k]) + b_true >= 0.0 ? 1.0 : -1.0;
    }
  }
  return data;
}

LogisticStream::LogisticStream(LogisticData data)
    : CostStream(3, static_cast<int>(data.centers.size())), data_(std::move(data)) {
  if (data_.labels.size() != data_.centers.size()) {
    throw ValidationError("logistic labels and centers disagree in agent count");
  }
  for (std::size_t i = 0; i < data_.centers.size(); ++i) {
    if (data_.centers[i].empty() || data_.labels[i].size() != data_.centers[i].size()) {
      throw ValidationError("every logistic agent needs matching points and labels");
    }
    for (double l : data_.labels[i]) {
      if (l != 1.0 && l != -1.0) throw ValidationError("logistic labels must be +1 or -1");
    }
  }
  if (!(data_.regularization >= 0.0)) throw ValidationError("regularization C must be non-negative");

  const double reg = data_.regularization / static_cast<double>(n_agents());
  // sigmoid' <= 1/4 gives L_i(t) <= lambda_max(sum_k p p^T) / 4 + C/N; sampled
  // over one period of the motion.
  double lipschitz = 0.0;
  const double period = 2.0 * std::numbers::pi * data_.time_scale;
  for (int s = 0; s < 64; ++s) {
    const double t = period * s / 64.0;
    for (int i = 0; i < n_agents(); ++i) {
      Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
      for (std::size_t k = 0; k < data_.centers[static_cast<std::size_t>(i)].size(); ++k) {
        Eigen::Vector3d p;
        p << point(i, static_cast<int>(k), t), 1.0;
        gram += p * p.transpose();
      }
      lipschitz = std::max(lipschitz, 0.25 * max_eigenvalue(gram) + reg);
    }
  }
  constants_.lipschitz = lipschitz;
  constants_.strong_convexity = reg;
  constants_.eta_bound = std::numeric_limits<double>::quiet_NaN();
  constants_.zeta_bound = std::numeric_limits<double>::quiet_NaN();
  constants_.exact = false;
}

Eigen::Vector2d LogisticStream::point(int agent, int k, double t) const {
  const auto& pts = data_.centers.at(static_cast<std::size_t>(agent));
  const Eigen::Vector2d& c = pts.at(static_cast<std::size_t>(k));
  const double angle = t / data_.time_scale;
  return c + data_.radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
}

double LogisticStream::eval(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  const auto a = static_cast<std::size_t>(agent);
  const Eigen::Vector2d w = x.head<2>();
  double loss = 0.0;
  for (std::size_t k = 0; k < data_.centers[a].size(); ++k) {
    const Eigen::Vector2d p = point(agent, static_cast<int>(k), t);
    const double margin = data_.labels[a][k] * (w.dot(p) + x(2));
    loss += softplus(-margin);
  }
  const double reg = data_.regularization / (2.0 * n_agents());
  return loss + reg * x.squaredNorm();
}

Vec LogisticStream::grad(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  const auto a = static_cast<std::size_t>(agent);
  const Eigen::Vector2d w = x.head<2>();
  Vec g = (data_.regularization / n_agents()) * x;
  for (std::size_t k = 0; k < data_.centers[a].size(); ++k) {
    const Eigen::Vector2d p = point(agent, static_cast<int>(k), t);
    const double l = data_.labels[a][k];
    const double coeff = -l * sigmoid(-l * (w.dot(p) + x(2)));
    g(0) += coeff * p(0);
    g(1) += coeff * p(1);
    g(2) += coeff;
  }
  return g;
}

Mat LogisticStream::hessian(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  const auto a = static_cast<std::size_t>(agent);
  const Eigen::Vector2d w = x.head<2>();
  Mat h = (data_.regularization / n_agents()) * Mat::Identity(3, 3);
  for (std::size_t k = 0; k < data_.centers[a].size(); ++k) {
    Eigen::Vector3d p;
    p << point(agent, static_cast<int>(k), t), 1.0;
    const double s = sigmoid(w.dot(p.head<2>()) + x(2));
    h += s * (1.0 - s) * p * p.transpose();
  }
  return h;
}

// ---------------------------------------------------------------------------
// LocalizationStream

LocalizationSetup generate_localization_setup(int n_agents, double spread, std::uint64_t seed) {
  if (n_agents <= 0) throw ValidationError("localization needs at least one sensor");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, spread);
  LocalizationSetup setup;
  setup.sensors.resize(static_cast<std::size_t>(n_agents));
  for (auto& c : setup.sensors) c = Eigen::Vector2d(gauss(rng), gauss(rng));
  setup.source_center = Eigen::Vector2d(gauss(rng), gauss(rng));
  setup.noise_seed = splitmix64(seed ^ 0x6C6F63616C697A65ULL);
  return setup;
}

LocalizationStream::LocalizationStream(LocalizationSetup setup)
    : CostStream(2, static_cast<int>(setup.sensors.size())), setup_(std::move(setup)) {
  if (!(setup_.amplitude > 0.0)) throw ValidationError("amplitude A must be positive");
  if (!(setup_.attenuation >= 1.0)) throw ValidationError("attenuation gamma must be >= 1");
  if (!(setup_.noise_variance >= 0.0)) throw ValidationError("noise variance must be >= 0");
  if (!(setup_.radius >= 0.0)) throw ValidationError("source radius must be >= 0");

  // Local curvature estimates from Hessian probes around the source path.
  double lipschitz = 0.0;
  double strong = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 16; ++s) {
    const double angle = 2.0 * std::numbers::pi * s / 16.0;
    const Eigen::Vector2d offset = setup_.radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    const Vec probe = setup_.source_center + offset + 0.1 * Eigen::Vector2d(std::sin(angle), 0.0);
    for (int i = 0; i < n_agents(); ++i) {
      if ((probe - setup_.sensors[static_cast<std::size_t>(i)]).norm() < 1e-6) continue;
      Mat h;
      try {
        h = CostStream::hessian(i, 0, probe);
      } catch (const NumericalError&) {
        continue;  // sensor on the source path; measure() reports it on use
      }
      Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
      lipschitz = std::max(lipschitz, es.eigenvalues().cwiseAbs().maxCoeff());
      strong = std::min(strong, es.eigenvalues().minCoeff());
    }
  }
  constants_.lipschitz = lipschitz;
  constants_.strong_convexity = std::isfinite(strong) ? strong : 0.0;
  constants_.eta_bound = std::numeric_limits<double>::quiet_NaN();
  constants_.zeta_bound = std::numeric_limits<double>::quiet_NaN();
  constants_.exact = false;
}

Eigen::Vector2d LocalizationStream::source(int t) const {
  const double angle = static_cast<double>(t) / setup_.time_scale;
  return setup_.source_center + setup_.radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
}

double LocalizationStream::model_value(int agent, const Eigen::Vector2d& theta) const {
  const double dist = (theta - setup_.sensors.at(static_cast<std::size_t>(agent))).norm();
  if (dist == 0.0) throw NumericalError("singular measurement: point coincides with a sensor");
  return setup_.amplitude / std::pow(dist, setup_.attenuation);
}

double LocalizationStream::noise(int agent, int t) const {
  if (setup_.noise_variance == 0.0) return 0.0;
  const std::uint64_t key =
      (static_cast<std::uint64_t>(agent) << 32) | static_cast<std::uint32_t>(t);
  {
    std::shared_lock lock(noise_mutex_);
    if (auto it = noise_cache_.find(key); it != noise_cache_.end()) return it->second;
  }
  std::mt19937_64 engine(splitmix64(setup_.noise_seed ^ splitmix64(key)));
  std::normal_distribution<double> gauss(0.0, std::sqrt(setup_.noise_variance));
  const double draw = gauss(engine);
  std::unique_lock lock(noise_mutex_);
  return noise_cache_.try_emplace(key, draw).first->second;
}

double LocalizationStream::measure(int agent, int t) const {
  if (agent < 0 || agent >= n_agents()) throw ValidationError("sensor index out of range");
  if (t < 0) throw ValidationError("time index must be non-negative");
  return model_value(agent, source(t)) + noise(agent, t);
}

double LocalizationStream::eval(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  const double residual = measure(agent, t) - model_value(agent, x);
  return residual * residual;
}

Vec LocalizationStream::grad(int agent, int t, const Vec& x) const {
  check_args(agent, t, x);
  const Eigen::Vector2d u = x - setup_.sensors[static_cast<std::size_t>(agent)];
  const double model = model_value(agent, x);
  const double residual = measure(agent, t) - model;
  // d model / dx = -gamma * model * u / |u|^2
  const double scale = 2.0 * residual * setup_.attenuation * model / u.squaredNorm();
  return scale * u;
}

}  // namespace gtadam
