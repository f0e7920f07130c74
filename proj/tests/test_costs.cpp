#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gtadam/costs.hpp"
#include "gtadam/error.hpp"

using namespace gtadam;

namespace {

std::unique_ptr<QuadraticStream> isotropic(int n_agents, double h, std::vector<Vec> centers) {
  std::vector<Mat> hs(static_cast<std::size_t>(n_agents),
                      h * Mat::Identity(centers.front().size(), centers.front().size()));
  return std::make_unique<QuadraticStream>(
      std::move(hs), [centers](int i, int) { return centers[static_cast<std::size_t>(i)]; }, 5);
}

LogisticStream small_logistic(std::uint64_t seed) {
  LogisticData data = generate_logistic_data(6, 20, 5.0, seed);
  return LogisticStream(std::move(data));
}

LocalizationStream small_localization(double noise, std::uint64_t seed) {
  LocalizationSetup s = generate_localization_setup(6, 10.0, seed);
  s.noise_variance = noise;
  return LocalizationStream(std::move(s));
}

double rel_fd_error(const CostStream& f, int i, int t, const Vec& x) {
  const Vec g = f.grad(i, t, x);
  return (g - finite_diff_grad(f, i, t, x, 1e-6)).norm() / (1.0 + g.norm());
}

}  // namespace

TEST_SUITE("costs") {

TEST_CASE("quadratic eval and grad examples") {
  auto f = isotropic(1, 1.0, {Vec::Zero(2)});
  CHECK(f->eval(0, 0, Eigen::Vector2d(3, 4)) == doctest::Approx(12.5));

  auto g = isotropic(1, 1.0, {Eigen::Vector2d(1, 1)});
  CHECK(g->grad(0, 3, Eigen::Vector2d(1, 1)).norm() == 0.0);

  auto h = isotropic(1, 2.0, {Vec::Zero(2)});
  CHECK(h->grad(0, 0, Eigen::Vector2d(1, 0)).isApprox(Eigen::Vector2d(2, 0)));
}

TEST_CASE("index and dimension errors") {
  auto f = isotropic(2, 1.0, {Vec::Zero(2), Vec::Zero(2)});
  CHECK_THROWS_AS(f->eval(-1, 0, Vec::Zero(2)), ValidationError);
  CHECK_THROWS_AS(f->eval(2, 0, Vec::Zero(2)), ValidationError);
  CHECK_THROWS_AS(f->eval(0, -1, Vec::Zero(2)), ValidationError);
  CHECK_THROWS_AS(f->grad(0, 0, Vec::Zero(3)), ValidationError);
}

TEST_CASE("variation bounds of quadratic streams") {
  auto still = isotropic(3, 1.0, {Vec::Ones(2), Vec::Zero(2), -Vec::Ones(2)});
  const VariationBounds s = still->variation_bounds(4);
  CHECK(s.eta == 0.0);
  CHECK(s.zeta == 0.0);
  CHECK_THROWS_AS(still->variation_bounds(0), ValidationError);

  // Every center jumps by (0.3, 0) at t = 5.
  std::vector<Vec> base = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 2), Eigen::Vector2d(-1, 1)};
  QuadraticStream jump(std::vector<Mat>(3, Mat::Identity(2, 2)),
                       [base](int i, int t) {
                         Vec b = base[static_cast<std::size_t>(i)];
                         if (t >= 5) b(0) += 0.3;
                         return b;
                       },
                       10);
  const VariationBounds j = jump.variation_bounds(5);
  CHECK(j.eta == doctest::Approx(0.3));
  CHECK(j.zeta == doctest::Approx(0.3));
  CHECK(jump.variation_bounds(6).eta == 0.0);
  CHECK(jump.constants().eta_bound == doctest::Approx(0.3));

  QuadraticStream single(std::vector<Mat>{2.0 * Mat::Identity(2, 2)},
                         [](int, int t) { return Vec(Eigen::Vector2d(t >= 1 ? 0.1 : 0.0, 0)); },
                         3);
  const VariationBounds one = single.variation_bounds(1);
  CHECK(one.eta == doctest::Approx(0.2));
  CHECK(one.zeta == doctest::Approx(0.1));
}

TEST_CASE("variation bounds need exact constants") {
  LogisticStream f = small_logistic(1);
  CHECK_FALSE(f.constants().exact);
  CHECK_THROWS_WITH_AS(f.variation_bounds(1), doctest::Contains("constants not exact"),
                       ValidationError);
}

TEST_CASE("random quadratic stream constants and inequalities") {
  QuadraticSpec spec;
  spec.n_agents = 4;
  spec.dim = 5;
  spec.identical_curvature = false;
  spec.drift = Drift::kSinusoidal;
  auto f = make_quadratic_stream(spec, 11);
  CHECK(f->constants().exact);
  CHECK(f->constants().lipschitz == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(f->constants().strong_convexity == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  const double q = f->constants().strong_convexity;
  const double L = f->constants().lipschitz;
  for (int k = 0; k < 100; ++k) {
    Vec x(5);
    Vec y(5);
    for (int j = 0; j < 5; ++j) {
      x(j) = 3 * gauss(rng);
      y(j) = 3 * gauss(rng);
    }
    const int i = k % 4;
    const double d = (f->grad(i, k, x) - f->grad(i, k, y)).norm();
    CHECK(d >= q * (x - y).norm() * (1 - 1e-12));
    CHECK(d <= L * (x - y).norm() * (1 + 1e-12));
  }

  // Minimizer solves (sum H_i) x = sum H_i b_i(t).
  const Vec star = f->minimizer(7);
  CHECK(f->total_grad(7, star).norm() <= 1e-10);
}

TEST_CASE("equal seeds give bitwise equal streams") {
  QuadraticSpec spec;
  auto a = make_quadratic_stream(spec, 3);
  auto b = make_quadratic_stream(spec, 3);
  const Vec x = Vec::LinSpaced(5, -1, 1);
  CHECK(a->eval(2, 9, x) == b->eval(2, 9, x));
  CHECK(a->grad(2, 9, x) == b->grad(2, 9, x));

  LogisticStream la = small_logistic(8);
  LogisticStream lb = small_logistic(8);
  CHECK(la.grad(1, 40, Vec::Ones(3)) == lb.grad(1, 40, Vec::Ones(3)));

  LocalizationStream ca = small_localization(1e-3, 4);
  LocalizationStream cb = small_localization(1e-3, 4);
  CHECK(ca.eval(3, 17, Vec::Ones(2)) == cb.eval(3, 17, Vec::Ones(2)));
}

TEST_CASE("logistic single point at the origin costs log 2") {
  LogisticData data;
  data.centers = {{Eigen::Vector2d(0, 0)}};
  data.labels = {{1.0}};
  data.regularization = 0.0;
  LogisticStream f(std::move(data));
  CHECK(f.eval(0, 0, Vec::Zero(3)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("logistic points move on a circle") {
  LogisticData data;
  data.centers = {{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 3)}};
  data.labels = {{1.0, -1.0}};
  LogisticStream f(std::move(data));
  CHECK(f.point(0, 0, 0.0).isApprox(Eigen::Vector2d(1, 0)));
  const Eigen::Vector2d quarter = f.point(0, 1, 50.0 * std::numbers::pi);
  CHECK(quarter(0) == doctest::Approx(2.0));
  CHECK(quarter(1) == doctest::Approx(4.0));
  const Eigen::Vector2d later = f.point(0, 0, 37.0 + 200.0 * std::numbers::pi);
  CHECK((later - f.point(0, 0, 37.0)).norm() <= 1e-12);
}

TEST_CASE("logistic hessian and strong convexity") {
  LogisticStream f = small_logistic(2);
  const double reg = 1.0 / 6.0;
  CHECK(f.constants().strong_convexity == doctest::Approx(reg));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < 20; ++k) {
    Vec x(3);
    for (int j = 0; j < 3; ++j) x(j) = 2 * gauss(rng);
    const Mat h = f.hessian(k % 6, 13 * k, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    CHECK(es.eigenvalues().minCoeff() >= reg - 1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= f.constants().lipschitz * (1 + 1e-9));
    CHECK((h - f.CostStream::hessian(k % 6, 13 * k, x)).norm() <= 1e-5 * (1 + h.norm()));
  }
}

TEST_CASE("localization measurement examples") {
  LocalizationSetup s;
  s.sensors = {Eigen::Vector2d(10, 0), Eigen::Vector2d(0, 100)};
  s.source_center = Eigen::Vector2d(0, 0);
  s.radius = 0.0;
  s.noise_variance = 0.0;
  LocalizationStream f(s);
  CHECK(f.measure(0, 0) == doctest::Approx(10.0));
  CHECK(f.measure(1, 0) == doctest::Approx(1.0));
  CHECK(f.eval(0, 0, Vec::Zero(2)) == doctest::Approx(0.0));

  s.sensors = {Eigen::Vector2d(0, 0)};
  LocalizationStream singular(s);
  CHECK_THROWS_WITH_AS(singular.measure(0, 0), doctest::Contains("singular measurement"),
                       NumericalError);
}

TEST_CASE("localization noise is cached and has the right mean") {
  LocalizationSetup s;
  s.sensors = {Eigen::Vector2d(10, 0)};
  s.radius = 0.0;
  s.noise_variance = 1e-3;
  s.noise_seed = 77;
  LocalizationStream f(s);
  CHECK(f.measure(0, 12) == f.measure(0, 12));
  const int draws = 100000;
  double sum = 0.0;
  for (int t = 0; t < draws; ++t) sum += f.measure(0, t);
  const double mean = sum / draws;
  CHECK(std::abs(mean - 10.0) <= 3.0 * std::sqrt(1e-3) / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("finite differences agree with analytic gradients") {
  auto q = isotropic(1, 1.0, {Vec::Zero(2)});
  const Vec fd = finite_diff_grad(*q, 0, 0, Eigen::Vector2d(1, 0), 1e-6);
  CHECK((fd - Eigen::Vector2d(1, 0)).norm() <= 1e-8);
  CHECK_THROWS_AS(finite_diff_grad(*q, 0, 0, Eigen::Vector2d(1, 0), 0.0), ValidationError);

  LogisticStream lg = small_logistic(4);
  LocalizationStream loc = small_localization(0.0, 6);
  QuadraticSpec spec;
  spec.drift = Drift::kSinusoidal;
  auto quad = make_quadratic_stream(spec, 2);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> time(0, 2000);
  for (int k = 0; k < 100; ++k) {
    Vec x3(3);
    Vec x2(2);
    Vec x5(5);
    for (int j = 0; j < 3; ++j) x3(j) = gauss(rng);
    for (int j = 0; j < 2; ++j) x2(j) = 10 * gauss(rng);
    for (int j = 0; j < 5; ++j) x5(j) = 3 * gauss(rng);
    CHECK(rel_fd_error(lg, k % 6, time(rng), x3) < 1e-5);
    CHECK(rel_fd_error(loc, k % 6, time(rng), x2) < 1e-5);
    CHECK(rel_fd_error(*quad, k % 10, time(rng), x5) < 1e-5);
  }
}

}  // TEST_SUITE
