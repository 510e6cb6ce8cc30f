#pragma once

#include "nll/types.hpp"

namespace nll {

struct SymEig {
  Vec values;   // descending
  Mat vectors;  // columns, largest-magnitude entry positive
  int sweeps = 0;
};

/// Cyclic Jacobi until the off-diagonal Frobenius norm is at most
/// `tol * ||C||_F`.
SymEig sym_eig(const Mat& c, double tol = 1e-12, int max_sweeps = 100);

/// Mean outer product of the rows of `grads`.
Mat covariance(const Mat& grads);

struct ASModel {
  Mat C;
  Vec eigvals;
  Mat W;
  int k = 1;

  int dim() const { return static_cast<int>(W.rows()); }
  Mat active() const { return W.leftCols(k); }
};

ASModel fit_active_subspace(const Mat& grads, int k);

/// W_A^T x.
Vec project(const ASModel& model, const Vec& x);
/// Row-wise projection of samples.
Mat project_rows(const ASModel& model, const Mat& xs);

}  // namespace nll
