#pragma once

// Test-only oracles: central finite differences and small random helpers.
// Independent of the analytic derivative code they are used to check.

#include "nll/types.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace nll::testing {

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& at,
                       double step = 1e-5) {
  const Vec f0 = fn(at);
  Mat jac(f0.size(), at.size());
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    Vec plus = at, minus = at;
    plus(i) += step;
    minus(i) -= step;
    jac.col(i) = (fn(plus) - fn(minus)) / (2.0 * step);
  }
  return jac;
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& at,
                       double step = 1e-5) {
  Vec grad(at.size());
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    Vec plus = at, minus = at;
    plus(i) += step;
    minus(i) -= step;
    grad(i) = (fn(plus) - fn(minus)) / (2.0 * step);
  }
  return grad;
}

inline double rel_err(const Mat& got, const Mat& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0.0 ? scale : 1.0);
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0,
                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Mat random_mat(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                      double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace nll::testing
