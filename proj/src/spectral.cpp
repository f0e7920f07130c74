// Extended-precision eigenvalue routines for the 6x6 bound matrix. Kept in
// its own translation unit because the multiprecision Eigen instantiation is
// slow to compile.

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Eigenvalues>

#include "bound_matrix.hpp"
#include "gtadam/analysis.hpp"
#include "gtadam/error.hpp"

namespace gtadam {

namespace {

using Real = boost::multiprecision::cpp_bin_float_50;
using MatR = Eigen::Matrix<Real, 6, 6>;
using VecC = Eigen::Matrix<std::complex<Real>, 6, 1>;

VecC eigenvalues(const BoundInputs& in) {
  const MatR a = detail::bound_matrix_t<Real>(in, Real(in.alpha));
  Eigen::EigenSolver<MatR> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("bound matrix eigensolve failed");
  return es.eigenvalues();
}

}  // namespace

SpectralSummary bound_spectral_radius(const BoundInputs& in) {
  const VecC ev = eigenvalues(in);
  Real best = 0;
  for (int i = 0; i < 6; ++i) {
    const Real mag = abs(ev(i));
    if (mag > best) best = mag;
  }
  SpectralSummary out;
  out.rho = static_cast<double>(best);
  out.one_minus_rho = static_cast<double>(Real(1) - best);
  return out;
}

double leading_eigenvalue_shift(const BoundInputs& in) {
  const VecC ev = eigenvalues(in);
  Real best = ev(0).real();
  for (int i = 1; i < 6; ++i) {
    if (ev(i).real() > best) best = ev(i).real();
  }
  return static_cast<double>(best - Real(1));
}

A0EigenCheck a0_eigenvector_check(const BoundInputs& in) {
  const MatR a0 = detail::bound_matrix_t<Real>(in, Real(0));
  Eigen::Matrix<Real, 6, 1> v = Eigen::Matrix<Real, 6, 1>::Zero();
  v(0) = Real(in.lipschitz);
  v(5) = Real(1);
  Eigen::Matrix<Real, 6, 1> w = Eigen::Matrix<Real, 6, 1>::Zero();
  w(5) = Real(1);
  const Eigen::Matrix<Real, 6, 1> av = a0 * v;
  const Eigen::Matrix<Real, 1, 6> wa = w.transpose() * a0;
  A0EigenCheck out;
  out.right = true;
  out.left = true;
  for (int i = 0; i < 6; ++i) {
    if (av(i) != v(i)) out.right = false;
    if (wa(i) != w(i)) out.left = false;
  }
  return out;
}

double largest_contractive_alpha(const BoundInputs& in, double upper) {
  if (!(upper > 0.0)) throw ValidationError("search upper bound must be positive");
  BoundInputs probe = in;
  auto contracts = [&](double a) {
    probe.alpha = a;
    return bound_spectral_radius(probe).one_minus_rho > 0.0;
  };
  if (contracts(upper)) return upper;
  double hi = upper;
  double lo = upper;
  while (true) {
    lo /= 10.0;
    if (lo < 1e-40) return 0.0;
    if (contracts(lo)) break;
    hi = lo;
  }
  // Geometric bisection: lo contracts, hi does not.
  for (int it = 0; it < 80 && hi / lo > 1.0 + 1e-12; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (contracts(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace gtadam
