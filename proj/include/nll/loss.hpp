#pragma once

// Training functionals for the level-set transform h.
//
//   NewL      (1/|S|) sum_s sum_{i > |A|} (J_h(z_s)^T grad f(x_s))_i^2
//   OldLhat   sum_s sum_i w_i <Jn_i, grad f>^2 + lambda sum_s (det Jn - 1)^2
//   OldLtilde sqrt(Lhat_1) / |S| + lambda prod_s (det Jn - 1)
//
// where Jn is J_h with every column scaled to unit length.

#include "nll/revnet.hpp"

namespace nll {

enum class LossKind { NewL, OldLhat, OldLtilde };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::NewL;
  /// Per-coordinate weights for the old losses; empty selects the default
  /// (1 on inactive coordinates, 0 on active ones).
  Vec omega;
  double lambda = 1.0;
  int active_count = 1;

  static LossSpec new_nll(int active_count = 1);
  static LossSpec old_hat(int n, int active_count = 1, double lambda = 1.0);
  static LossSpec old_tilde(int n, int active_count = 1, double lambda = 1.0);

  /// omega, or the default weights when omega is empty.
  Vec weights(int n) const;
};

/// Training samples in rows: xs(s, :) = x_s, grads(s, :) = grad f(x_s).
struct Batch {
  Mat xs;
  Mat grads;

  Eigen::Index size() const { return xs.rows(); }
  void validate(int dim) const;
};

/// Cap on the magnitude of the product regularizer in OldLtilde.
inline constexpr double kProductClamp = 1e12;

double new_nll_loss(const RevNetParams& params, const Batch& batch,
                    int active_count = 1);
double old_nll_loss_hat(const RevNetParams& params, const Batch& batch,
                        const LossSpec& spec);
double old_nll_loss_tilde(const RevNetParams& params, const Batch& batch,
                          const LossSpec& spec);
double loss_value(const RevNetParams& params, const Batch& batch,
                  const LossSpec& spec);

struct LossGradient {
  double value = 0.0;
  Vec grad;  // same layout as RevNetParams::values()
};

/// Records the tape(s) it needs and returns value and exact gradient.
LossGradient loss_gradient(const RevNetParams& params, const Batch& batch,
                           const LossSpec& spec);

/// NewL gradient from a caller-recorded tape (seeds = grads^T, block 1).
/// Throws StaleTapeError when the parameters moved since recording.
LossGradient new_nll_gradient(const RevNetParams& params, const Tape& tape,
                              int active_count = 1);

/// Records the NewL tape for a batch.
Tape record_new_nll_tape(const RevNetParams& params, const Batch& batch);

/// Per-sample pieces of the old losses, exposed for tests and reports.
struct OldLossTerms {
  Vec weighted;  // sum_i w_i <Jn_i, grad f>^2 per sample
  Vec det;       // det Jn per sample
};
OldLossTerms old_loss_terms(const RevNetParams& params, const Batch& batch,
                            const Vec& omega);

/// Sign and log-magnitude of prod_s (det_s - 1), then clamped to
/// +-kProductClamp. Exact zero factors give zero.
double clamped_product(const Vec& factors);

}  // namespace nll
