#include "nll/activesub.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nll {

namespace {

double off_diagonal_norm(const Mat& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// Rotation (c, s) zeroing a(p, q), as in the symmetric Schur decomposition.
void rotate(Mat& a, Mat& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(1.0 + theta * theta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const double akp = a(k, p), akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double apk = a(p, k), aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < v.rows(); ++k) {
    const double vkp = v(k, p), vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymEig sym_eig(const Mat& c, double tol, int max_sweeps) {
  require(c.rows() == c.cols() && c.rows() > 0, "sym_eig needs a nonempty square matrix");
  require(c.allFinite(), "sym_eig input must be finite");
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
          "sym_eig input is not symmetric");

  const Eigen::Index n = c.rows();
  Mat a = 0.5 * (c + c.transpose());
  Mat v = Mat::Identity(n, n);
  const double target = tol * a.norm();

  SymEig out;
  while (off_diagonal_norm(a) > target) {
    if (out.sweeps == max_sweeps) throw NumericalError("Jacobi iteration did not converge");
    ++out.sweeps;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) rotate(a, v, p, q);
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    Vec col = v.col(order[k]);
    Eigen::Index big = 0;
    col.cwiseAbs().maxCoeff(&big);
    if (col(big) < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

Mat covariance(const Mat& grads) {
  require(grads.rows() >= 1, "covariance needs at least one gradient");
  Mat c = grads.transpose() * grads / static_cast<double>(grads.rows());
  // exact symmetry regardless of the product kernel's summation order
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < c.rows(); ++i) c(j, i) = c(i, j);
  }
  return c;
}

ASModel fit_active_subspace(const Mat& grads, int k) {
  require(k >= 1 && k <= grads.cols(), "active dimension must lie in [1, n]");
  ASModel m;
  m.C = covariance(grads);
  SymEig e = sym_eig(m.C);
  m.eigvals = std::move(e.values);
  m.W = std::move(e.vectors);
  m.k = k;
  return m;
}

Vec project(const ASModel& model, const Vec& x) {
  require(model.k >= 1 && model.k <= model.dim(), "active dimension exceeds n");
  require(x.size() == model.dim(), "projection input has wrong dimension");
  return model.active().transpose() * x;
}

Mat project_rows(const ASModel& model, const Mat& xs) {
  require(model.k >= 1 && model.k <= model.dim(), "active dimension exceeds n");
  require(xs.cols() == model.dim(), "projection input has wrong dimension");
  return xs * model.active();
}

}  // namespace nll
