#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gtadam/algorithms.hpp"
#include "gtadam/error.hpp"
#include "oracles.hpp"

using namespace gtadam;

namespace {

Network single_agent() { return network_from_weights(Adjacency::Zero(1, 1), Mat::Identity(1, 1)); }

std::unique_ptr<QuadraticStream> shifted(int n_agents, const Vec& center) {
  return std::make_unique<QuadraticStream>(
      std::vector<Mat>(static_cast<std::size_t>(n_agents), Mat::Identity(center.size(), center.size())),
      [center](int, int) { return center; }, 2);
}

std::vector<Vec> gaussian_points(int n, int dim, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec> out(static_cast<std::size_t>(n), Vec(dim));
  for (auto& x : out) {
    for (int j = 0; j < dim; ++j) x(j) = scale * g(rng);
  }
  return out;
}

Mat stack(const States& s, Vec AgentState::*field) {
  Mat m(static_cast<Eigen::Index>(s.size()), (s.front().*field).size());
  for (std::size_t i = 0; i < s.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = (s[i].*field).transpose();
  return m;
}

}  // namespace

TEST_SUITE("algorithms") {

TEST_CASE("initial states follow the pseudocode") {
  auto f = shifted(1, Vec::Zero(2));
  const States s = init_states(*f, single_agent(), {Eigen::Vector2d(1, 0)});
  CHECK(s[0].s == Vec(Eigen::Vector2d(1, 0)));
  CHECK(s[0].g_prev == s[0].s);
  CHECK(s[0].m.isZero(0.0));
  CHECK(s[0].v.isZero(0.0));

  QuadraticSpec spec;
  spec.n_agents = 6;
  spec.dim = 3;
  auto g = make_quadratic_stream(spec, 4);
  const Network net = gen_erdos_renyi(6, 0.7, 2);
  const States many = init_states(*g, net, gaussian_points(6, 3, 2.0, 1));
  Vec ms = Vec::Zero(3);
  Vec mg = Vec::Zero(3);
  for (const auto& a : many) {
    ms += a.s;
    mg += a.g_prev;
  }
  CHECK(ms == mg);

  CHECK_THROWS_AS(init_states(*f, single_agent(), {Vec::Zero(3)}), ValidationError);
  CHECK_THROWS_AS(init_states(*g, net, gaussian_points(5, 3, 1.0, 1)), ValidationError);
}

TEST_CASE("parameter ranges") {
  AlgoParams p;
  CHECK_NOTHROW(p.validate());
  p.beta1 = 1.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("beta1"), ValidationError);
  p = AlgoParams{};
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = AlgoParams{};
  p.sat = -1.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK(algorithm_from_name("dgd") == Algorithm::kDGD);
  CHECK_THROWS_AS(algorithm_from_name("sgd"), ValidationError);
}

TEST_CASE("first GTAdam round algebra") {
  auto f = shifted(1, Eigen::Vector2d(-2, 3));
  const Network net = single_agent();
  States s = init_states(*f, net, {Eigen::Vector2d(1, 1)});
  const Vec s0 = s[0].s;
  AlgoParams p;
  gtadam_step(s, net, *f, p, 1);
  CHECK((s[0].m - 0.1 * s0).norm() <= 1e-15);
  CHECK((s[0].v - Vec(0.001 * s0.array().square())).norm() <= 1e-15);
}

TEST_CASE("second momentum saturates at G") {
  auto f = shifted(1, Vec::Constant(3, -1e6));
  const Network net = single_agent();
  States s = init_states(*f, net, {Vec::Zero(3)});
  AlgoParams p;
  p.sat = 10.0;
  gtadam_step(s, net, *f, p, 1);
  CHECK(s[0].v == Vec::Constant(3, 10.0));
}

TEST_CASE("single-agent GTAdam is bias-free saturated Adam") {
  QuadraticSpec spec;
  spec.n_agents = 1;
  spec.drift = Drift::kSinusoidal;
  auto f = make_quadratic_stream(spec, 8);
  const Network net = single_agent();
  AlgoParams p;
  p.alpha = 0.05;
  p.sat = 0.5;  // small enough to be active early on
  const Vec x0 = Vec::LinSpaced(5, -4, 4);
  States s = init_states(*f, net, {x0});
  oracle::PlainAdam ref{x0, Vec::Zero(5), Vec::Zero(5), f->total_grad(0, x0)};
  double worst = 0.0;
  for (int t = 1; t <= 200; ++t) {
    gtadam_step(s, net, *f, p, t);
    oracle::plain_adam_nobias(ref, *f, t, p.alpha, p.beta1, p.beta2, p.eps, p.sat);
    worst = std::max(worst, (s[0].x - ref.x).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("single-agent GT is gradient descent") {
  LogisticData data = generate_logistic_data(1, 30, 3.0, 5);
  LogisticStream f(std::move(data));
  const Network net = single_agent();
  AlgoParams p;
  p.alpha = 0.01;
  States s = init_states(f, net, {Vec::Zero(3)});
  Vec x = Vec::Zero(3);
  double worst = 0.0;
  for (int t = 1; t <= 200; ++t) {
    const Vec g = f.grad(0, t - 1, x);
    x -= p.alpha * g;
    gt_step(s, net, f, p, t);
    worst = std::max(worst, (s[0].x - x).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("single-agent DGD is a plain gradient step") {
  auto f = shifted(1, Eigen::Vector2d(1, -1));
  const Network net = single_agent();
  AlgoParams p;
  p.alpha = 0.1;
  States s = init_states(*f, net, {Eigen::Vector2d(3, 3)});
  dgd_step(s, net, *f, p, 1);
  const Vec expected = Eigen::Vector2d(3, 3) - 0.1 * Eigen::Vector2d(2, 4);
  CHECK((s[0].x - expected).norm() <= 1e-15);
}

TEST_CASE("GTAdam matches the stacked matrix recursion") {
  QuadraticSpec spec;
  spec.n_agents = 10;
  spec.identical_curvature = false;
  spec.drift = Drift::kSinusoidal;
  auto f = make_quadratic_stream(spec, 21);
  const Network net = gen_erdos_renyi(10, 0.5, 21);
  const auto x0 = gaussian_points(10, 5, 3.0, 2);
  AlgoParams p;
  p.alpha = 0.01;
  States s = init_states(*f, net, x0);
  Mat X0(10, 5);
  for (int i = 0; i < 10; ++i) X0.row(i) = x0[static_cast<std::size_t>(i)].transpose();
  oracle::Stacked ref = oracle::stacked_init(*f, X0);
  for (int t = 1; t <= 50; ++t) {
    gtadam_step(s, net, *f, p, t);
    oracle::stacked_gtadam(ref, net.weights, *f, t, p.alpha, p.beta1, p.beta2, p.eps, p.sat);
  }
  CHECK((stack(s, &AgentState::x) - ref.X).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((stack(s, &AgentState::s) - ref.S).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("tracker conservation and average dynamics") {
  LogisticData data = generate_logistic_data(8, 20, 5.0, 3);
  LogisticStream f(std::move(data));
  const Network net = gen_erdos_renyi(8, 0.5, 3);
  AlgoParams p;
  p.alpha = 0.05;
  for (Algorithm algo : {Algorithm::kGTAdam, Algorithm::kGT}) {
    double worst_track = 0.0;
    double worst_avg = 0.0;
    Vec prev_mean;
    RecordOptions rec;
    rec.keep_snapshots = false;
    rec.observer = [&](int t, const States& st) {
      Vec sbar = Vec::Zero(3);
      Vec gbar = Vec::Zero(3);
      Vec dbar = Vec::Zero(3);
      for (const auto& a : st) {
        sbar += a.s;
        gbar += f.grad(static_cast<int>(&a - st.data()), t, a.x);
        dbar += (a.m.array() / (a.v.array() + p.eps).sqrt()).matrix();
      }
      sbar /= 8.0;
      gbar /= 8.0;
      dbar /= 8.0;
      worst_track = std::max(worst_track, (sbar - gbar).norm() / (1.0 + gbar.norm()));
      const Vec xbar = mean_x(st);
      if (t > 0 && algo == Algorithm::kGTAdam) {
        worst_avg = std::max(worst_avg, (xbar - (prev_mean - p.alpha * dbar)).norm());
      }
      prev_mean = xbar;
    };
    run_trajectory(algo, f, net, p, 300, std::vector<Vec>(8, Vec::Zero(3)), rec);
    CHECK(worst_track <= 1e-10);
    CHECK(worst_avg <= 1e-12);
  }
}

TEST_CASE("saturation bound holds along a run") {
  LogisticData data = generate_logistic_data(5, 10, 5.0, 6);
  LogisticStream f(std::move(data));
  const Network net = gen_erdos_renyi(5, 0.8, 6);
  AlgoParams p;
  p.alpha = 0.1;
  p.sat = 0.3;
  const Trajectory tr = run_trajectory(Algorithm::kGTAdam, f, net, p, 100,
                                       std::vector<Vec>(5, Vec::Constant(3, 2.0)));
  for (const auto& st : tr.snapshots) {
    for (const auto& a : st) {
      CHECK(a.v.minCoeff() >= 0.0);
      CHECK(a.v.maxCoeff() <= 0.3);
    }
  }
}

TEST_CASE("DGD keeps identical agents together") {
  auto f = shifted(6, Eigen::Vector2d(2, -1));
  const Network net = gen_erdos_renyi(6, 0.6, 1);
  AlgoParams p;
  p.alpha = 0.05;
  const Trajectory tr =
      run_trajectory(Algorithm::kDGD, *f, net, p, 200, std::vector<Vec>(6, Eigen::Vector2d(5, 5)));
  for (const auto& st : tr.snapshots) {
    for (const auto& a : st) CHECK((a.x - st.front().x).norm() <= 1e-12);
  }
}

TEST_CASE("DGD stalls in a neighborhood while GT converges") {
  QuadraticSpec spec;
  spec.n_agents = 10;
  spec.identical_curvature = false;
  auto f = make_quadratic_stream(spec, 5);
  const Network net = gen_erdos_renyi(10, 0.5, 5);
  AlgoParams p;
  p.alpha = 0.02;
  const auto x0 = gaussian_points(10, 5, 1.0, 3);
  const Vec star = f->minimizer(0);
  const auto dgd = run_trajectory(Algorithm::kDGD, *f, net, p, 5000, x0, {false, {}});
  const auto gt = run_trajectory(Algorithm::kGT, *f, net, p, 5000, x0, {false, {}});
  CHECK((dgd.average_x.back() - star).norm() > 1e-4);
  CHECK((gt.average_x.back() - star).norm() < 1e-8);
}

TEST_CASE("centralized Adam first step") {
  // grad f_0(x0) = 1 for f = (x - b)^2 / 2 with b = x0 - 1.
  auto f = shifted(1, Vec::Constant(1, -1.0));
  AgentState st = init_adam_state(*f, Vec::Zero(1));
  AlgoParams p;
  p.alpha = 0.1;
  adam_step(st, *f, p, 1);
  const double expected = 0.1 * (std::sqrt(0.001) / 0.1) * 0.1 / std::sqrt(0.001 + 1e-8);
  CHECK(-st.x(0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(-st.x(0) - 0.1) < 1e-6);

  auto flat = shifted(1, Vec::Constant(1, 0.0));
  AgentState still = init_adam_state(*flat, Vec::Zero(1));
  adam_step(still, *flat, p, 1);
  CHECK(still.x(0) == 0.0);
  CHECK(still.m(0) == 0.0);
  CHECK(still.v(0) == 0.0);
}

TEST_CASE("Adam update is odd in the gradient") {
  auto up = shifted(1, Eigen::Vector2d(-1.5, 0.5));
  auto down = shifted(1, Eigen::Vector2d(1.5, -0.5));
  AgentState a = init_adam_state(*up, Vec::Zero(2));
  AgentState b = init_adam_state(*down, Vec::Zero(2));
  AlgoParams p;
  p.alpha = 0.2;
  for (int t = 1; t <= 20; ++t) {
    adam_step(a, *up, p, t);
    adam_step(b, *down, p, t);
    CHECK((a.x + b.x).norm() <= 1e-14);
  }
}

TEST_CASE("trajectory driver contract") {
  QuadraticSpec spec;
  spec.n_agents = 4;
  spec.drift = Drift::kSinusoidal;
  auto f = make_quadratic_stream(spec, 1);
  const Network net = gen_erdos_renyi(4, 0.8, 1);
  AlgoParams p;
  const auto x0 = gaussian_points(4, 5, 1.0, 9);
  CHECK_THROWS_AS(run_trajectory(Algorithm::kGT, *f, net, p, 0, x0), ValidationError);

  const auto a = run_trajectory(Algorithm::kGTAdam, *f, net, p, 50, x0);
  const auto b = run_trajectory(Algorithm::kGTAdam, *f, net, p, 50, x0);
  REQUIRE(a.snapshots.size() == 51);
  REQUIRE(a.average_x.size() == 51);
  for (std::size_t t = 0; t < a.snapshots.size(); ++t) {
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.snapshots[t][i].x == b.snapshots[t][i].x);
      CHECK(a.snapshots[t][i].s == b.snapshots[t][i].s);
    }
  }
  const auto adam = run_trajectory(Algorithm::kAdam, *f, net, p, 10, x0);
  CHECK(adam.snapshots.front().size() == 1);
}

TEST_CASE("GTAdam converges on a static quadratic below the step threshold") {
  QuadraticSpec spec;
  spec.n_agents = 10;
  auto f = make_quadratic_stream(spec, 2);
  const Network net = gen_erdos_renyi(10, 0.5, 2);
  AlgoParams p;
  p.alpha = 1e-4;  // alpha_max = 1e-4 / (0.1 * 4) = 2.5e-4
  const auto tr = run_trajectory(Algorithm::kGTAdam, *f, net, p, 50000,
                                 gaussian_points(10, 5, 3.0, 4), {false, {}});
  CHECK((tr.average_x.back() - f->minimizer(0)).norm() < 1e-6);
}

TEST_CASE("relabeling agents permutes the trajectory") {
  const int n = 6;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<Mat> hs;
  std::vector<Vec> bs;
  for (int i = 0; i < n; ++i) {
    Mat a(3, 3);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(r, c) = g(rng);
    }
    hs.push_back(a * a.transpose() + Mat::Identity(3, 3));
    Vec b(3);
    for (int j = 0; j < 3; ++j) b(j) = g(rng);
    bs.push_back(b);
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Mat> hp;
  std::vector<Vec> bp;
  for (int k = 0; k < n; ++k) {
    hp.push_back(hs[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])]);
    bp.push_back(bs[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])]);
  }
  QuadraticStream f(hs, [bs](int i, int) { return bs[static_cast<std::size_t>(i)]; }, 2);
  QuadraticStream fp(hp, [bp](int i, int) { return bp[static_cast<std::size_t>(i)]; }, 2);
  const Network net = gen_erdos_renyi(n, 0.6, 8);
  Adjacency ap(n, n);
  Mat wp(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      ap(k, l) = net.adjacency(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(l)]);
      wp(k, l) = net.weights(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(l)]);
    }
  }
  const Network netp = network_from_weights(ap, wp);
  const auto x0 = gaussian_points(n, 3, 2.0, 5);
  std::vector<Vec> x0p;
  for (int k = 0; k < n; ++k) x0p.push_back(x0[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])]);
  AlgoParams p;
  p.alpha = 0.01;
  const auto a = run_trajectory(Algorithm::kGTAdam, f, net, p, 100, x0);
  const auto b = run_trajectory(Algorithm::kGTAdam, fp, netp, p, 100, x0p);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    worst = std::max(worst, (b.snapshots.back()[static_cast<std::size_t>(k)].x -
                             a.snapshots.back()[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])].x)
                                .norm());
  }
  CHECK(worst <= 1e-10);
}

}  // TEST_SUITE
