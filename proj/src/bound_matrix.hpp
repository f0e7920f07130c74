#pragma once

#include <cmath>

#include <Eigen/Core>

#include "gtadam/analysis.hpp"

namespace gtadam::detail {

// A(alpha) with scalar type T so the same entries feed the double and the
// extended-precision solvers. Inputs are converted exactly from double.
template <typename T>
Eigen::Matrix<T, 6, 6> bound_matrix_t(const BoundInputs& in, const T& a) {
  using std::abs;
  using std::max;
  using std::sqrt;
  const T b1 = T(in.beta1);
  const T L = T(in.lipschitz);
  const T q = T(in.strong_convexity);
  const T eps = T(in.eps);
  const T sw = T(in.sigma_w);
  const T one = T(1);
  const T sn = sqrt(T(in.n_agents));
  const T se = sqrt(eps);
  const T B = L / sn;
  const T C = L * T(in.w_minus_i);
  const T K = sw * B + b1 * B + a * b1 * (one - b1) * B * B / se;
  const T p1 = abs(one - a * (one - b1) * q / sqrt(eps + T(in.sat)));
  const T p2 = abs(one - a * (one - b1) * L / se);
  const T phi = p1 > p2 ? p1 : p2;

  Eigen::Matrix<T, 6, 6> m;
  m.setZero();
  m(0, 0) = b1;
  m(0, 4) = (one - b1) * B;
  m(0, 5) = (one - b1) * L;

  m(1, 0) = a * b1 * B / se;
  m(1, 1) = b1;
  m(1, 2) = a * b1 * B / se;
  m(1, 3) = a * b1 * B / se;
  m(1, 4) = K;
  m(1, 5) = a * (one - b1) * B * L / se;

  m(2, 2) = b1;
  m(2, 3) = one - b1;

  m(3, 0) = a * b1 * L * sn / se;
  m(3, 2) = a * b1 * L / se;
  m(3, 3) = sw + a * L * (one - b1) / se;
  m(3, 4) = C + a * (one - b1) * L * L / se;
  m(3, 5) = a * (one - b1) * L * L * sn / se;

  m(4, 2) = a * b1 / se;
  m(4, 3) = a * (one - b1) / se;
  m(4, 4) = sw;

  m(5, 1) = a * b1 / se;
  m(5, 4) = a * B / se;
  m(5, 5) = phi;
  return m;
}

}  // namespace gtadam::detail
