#pragma once

// Reference implementations used only by the tests. They are written
// against the plain update equations with stacked matrices and share no
// code with the library kernels.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "gtadam/costs.hpp"
#include "gtadam/network.hpp"

namespace oracle {

using gtadam::Mat;
using gtadam::Vec;

// Eigenvalues of the symmetric circulant with first row c.
inline std::vector<double> circulant_eigenvalues(const std::vector<double>& c) {
  const auto n = c.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += c[j] * std::cos(2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(n));
    }
    out[k] = acc;
  }
  return out;
}

inline gtadam::Adjacency ring(int n) {
  gtadam::Adjacency a = gtadam::Adjacency::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, (i + 1) % n) = 1;
    a((i + 1) % n, i) = 1;
  }
  return a;
}

inline gtadam::Adjacency complete(int n) {
  gtadam::Adjacency a = gtadam::Adjacency::Ones(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = 0;
  return a;
}

// Stacked GTAdam: rows are agents.
struct Stacked {
  Mat X, S, M, V, G;
};

inline Mat stacked_grad(const gtadam::CostStream& f, int t, const Mat& X) {
  Mat g(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    g.row(i) = f.grad(static_cast<int>(i), t, X.row(i).transpose()).transpose();
  }
  return g;
}

inline Stacked stacked_init(const gtadam::CostStream& f, const Mat& X0) {
  Stacked s;
  s.X = X0;
  s.G = stacked_grad(f, 0, X0);
  s.S = s.G;
  s.M = Mat::Zero(X0.rows(), X0.cols());
  s.V = Mat::Zero(X0.rows(), X0.cols());
  return s;
}

inline void stacked_gtadam(Stacked& s, const Mat& W, const gtadam::CostStream& f, int t,
                           double a, double b1, double b2, double eps, double sat) {
  s.M = b1 * s.M + (1 - b1) * s.S;
  s.V = (b2 * s.V.array() + (1 - b2) * s.S.array() * s.S.array()).cwiseMin(sat).matrix();
  s.X = W * s.X - a * (s.M.array() / (s.V.array() + eps).sqrt()).matrix();
  const Mat g = stacked_grad(f, t, s.X);
  s.S = W * s.S + g - s.G;
  s.G = g;
}

// Saturated Adam without the bias-correction factor on a single cost.
struct PlainAdam {
  Vec x, m, v, g;
};

inline void plain_adam_nobias(PlainAdam& st, const gtadam::CostStream& f, int t, double a,
                              double b1, double b2, double eps, double sat) {
  for (Eigen::Index j = 0; j < st.x.size(); ++j) {
    st.m(j) = b1 * st.m(j) + (1 - b1) * st.g(j);
    st.v(j) = std::min(b2 * st.v(j) + (1 - b2) * st.g(j) * st.g(j), sat);
    st.x(j) = st.x(j) - a * st.m(j) / std::sqrt(st.v(j) + eps);
  }
  st.g = f.total_grad(t, st.x);
}

}  // namespace oracle
