#include "nll/loss.hpp"

#include <cmath>
#include <limits>

namespace nll {

namespace {

using Eigen::Index;

// Samples per batched Jacobian sweep in the old losses. Each chunk carries
// n seed columns per sample through the network in one pass.
constexpr Index kJacobianChunk = 8;

struct JacobianChunk {
  Index first = 0;
  Index count = 0;
  Tape tape;  // block = n; columns [s n, (s + 1) n) hold J_h^T of sample s

  Mat g(Index s) const {
    return tape.w.middleCols(s * tape.block, tape.block);
  }
};

JacobianChunk jacobian_chunk(const RevNetParams& params, const Batch& batch,
                             Index first) {
  const int n = params.dim();
  JacobianChunk out;
  out.first = first;
  out.count = std::min(kJacobianChunk, batch.size() - first);
  const Mat xs = batch.xs.middleRows(first, out.count).transpose();
  out.tape = forward_with_tape(params, xs,
                               Mat::Identity(n, n).replicate(1, out.count), n);
  return out;
}

struct OldSampleValue {
  double weighted;
  double det;
};

// G = J_h^T, so row i of G is the Jacobian column h_i.
OldSampleValue old_sample_value(const Mat& g, const Vec& c, const Vec& omega) {
  const Vec norms = g.rowwise().norm();
  const Vec proj = g * c;
  double weighted = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    const double y = proj(i) / norms(i);
    weighted += omega(i) * y * y;
  }
  const double det = g.partialPivLu().determinant() / norms.prod();
  return {weighted, det};
}

// Sensitivity of the per-sample pieces with respect to G, scaled by the
// outer coefficients of the loss.
Mat old_sample_adjoint(const Mat& g, const Vec& c, const Vec& omega,
                       double weighted_coeff, double det_coeff) {
  const Index n = g.rows();
  const Vec norms = g.rowwise().norm();
  const Vec proj = g * c;
  Mat gbar = Mat::Zero(n, n);
  if (weighted_coeff != 0.0) {
    for (Index i = 0; i < n; ++i) {
      if (omega(i) == 0.0) continue;
      const double r2 = norms(i) * norms(i);
      gbar.row(i) += weighted_coeff * omega(i) *
                     (2.0 * proj(i) / r2 * c.transpose() -
                      2.0 * proj(i) * proj(i) / (r2 * r2) * g.row(i));
    }
  }
  if (det_coeff != 0.0) {
    const Eigen::PartialPivLU<Mat> lu = g.partialPivLu();
    const double det = lu.determinant() / norms.prod();
    // d det(G) / dG = det(G) G^{-T}; each row norm divides the determinant.
    const Mat inv_t = lu.inverse().transpose();
    for (Index i = 0; i < n; ++i) {
      gbar.row(i) += det_coeff * det *
                     (inv_t.row(i) - g.row(i) / (norms(i) * norms(i)));
    }
  }
  return gbar;
}

void require_nonempty(const Batch& batch) {
  if (batch.size() == 0) throw ValidationError("loss needs a nonempty batch");
}

// d/d f_s of prod_t f_t with the clamp treated as saturating.
Vec product_partials(const Vec& factors) {
  const Index count = factors.size();
  Vec partials = Vec::Zero(count);
  if (std::abs(clamped_product(factors)) >= kProductClamp) return partials;
  Index zeros = 0, zero_at = -1;
  double log_abs = 0.0;
  int sign = 1;
  for (Index s = 0; s < count; ++s) {
    if (factors(s) == 0.0) {
      ++zeros;
      zero_at = s;
      continue;
    }
    log_abs += std::log(std::abs(factors(s)));
    if (factors(s) < 0.0) sign = -sign;
  }
  if (zeros >= 2) return partials;
  if (zeros == 1) {
    partials(zero_at) = sign * std::exp(log_abs);
    return partials;
  }
  for (Index s = 0; s < count; ++s) {
    const double mag = std::exp(log_abs - std::log(std::abs(factors(s))));
    const int own = factors(s) < 0.0 ? -1 : 1;
    partials(s) = sign * own * mag;
  }
  return partials;
}

}  // namespace

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::NewL: return "new";
    case LossKind::OldLhat: return "old_hat";
    case LossKind::OldLtilde: return "old_tilde";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "new" || name == "new_nll") return LossKind::NewL;
  if (name == "old_hat" || name == "old_nll_hat") return LossKind::OldLhat;
  if (name == "old_tilde" || name == "old_nll_tilde") return LossKind::OldLtilde;
  throw ValidationError("unknown loss kind '" + name + "'");
}

LossSpec LossSpec::new_nll(int active_count) {
  LossSpec spec;
  spec.kind = LossKind::NewL;
  spec.active_count = active_count;
  return spec;
}

LossSpec LossSpec::old_hat(int n, int active_count, double lambda) {
  LossSpec spec;
  spec.kind = LossKind::OldLhat;
  spec.active_count = active_count;
  spec.lambda = lambda;
  spec.omega = spec.weights(n);
  return spec;
}

LossSpec LossSpec::old_tilde(int n, int active_count, double lambda) {
  LossSpec spec = old_hat(n, active_count, lambda);
  spec.kind = LossKind::OldLtilde;
  return spec;
}

Vec LossSpec::weights(int n) const {
  if (omega.size() == 0) {
    Vec w = Vec::Ones(n);
    w.head(std::min(active_count, n)).setZero();
    return w;
  }
  require(omega.size() == n, "omega length must equal the network dimension");
  return omega;
}

void Batch::validate(int dim) const {
  require(xs.rows() == grads.rows(), "batch inputs and gradients differ in count");
  require(xs.cols() == dim && grads.cols() == dim,
          "batch width must equal the network dimension " + std::to_string(dim));
  require(xs.allFinite() && grads.allFinite(), "batch contains non-finite entries");
}

double clamped_product(const Vec& factors) {
  double log_abs = 0.0;
  int sign = 1;
  for (Index s = 0; s < factors.size(); ++s) {
    if (factors(s) == 0.0) return 0.0;
    log_abs += std::log(std::abs(factors(s)));
    if (factors(s) < 0.0) sign = -sign;
  }
  if (log_abs >= std::log(kProductClamp)) return sign * kProductClamp;
  return sign * std::exp(log_abs);
}

Tape record_new_nll_tape(const RevNetParams& params, const Batch& batch) {
  require_nonempty(batch);
  batch.validate(params.dim());
  return forward_with_tape(params, batch.xs.transpose(), batch.grads.transpose(), 1);
}

double new_nll_loss(const RevNetParams& params, const Batch& batch,
                    int active_count) {
  require_nonempty(batch);
  batch.validate(params.dim());
  require(active_count >= 0 && active_count <= params.dim(), "bad active count");
  const Mat w = forward_with_tape(params, batch.xs.transpose(),
                                  batch.grads.transpose(), 1)
                    .w;
  return w.bottomRows(params.dim() - active_count).squaredNorm() /
         static_cast<double>(batch.size());
}

LossGradient new_nll_gradient(const RevNetParams& params, const Tape& tape,
                              int active_count) {
  check_fresh(params, tape);
  require(tape.block == 1, "NewL needs a tape with one seed per sample");
  const Index samples = tape.w.cols();
  const Index inactive = params.dim() - active_count;
  LossGradient out;
  out.value = tape.w.bottomRows(inactive).squaredNorm() / static_cast<double>(samples);
  Mat w_bar = Mat::Zero(tape.w.rows(), samples);
  w_bar.bottomRows(inactive) =
      (2.0 / static_cast<double>(samples)) * tape.w.bottomRows(inactive);
  out.grad = backprop(params, tape, w_bar);
  return out;
}

OldLossTerms old_loss_terms(const RevNetParams& params, const Batch& batch,
                            const Vec& omega) {
  require_nonempty(batch);
  batch.validate(params.dim());
  OldLossTerms terms;
  terms.weighted.resize(batch.size());
  terms.det.resize(batch.size());
  for (Index first = 0; first < batch.size(); first += kJacobianChunk) {
    const JacobianChunk chunk = jacobian_chunk(params, batch, first);
    for (Index s = 0; s < chunk.count; ++s) {
      const OldSampleValue v =
          old_sample_value(chunk.g(s), batch.grads.row(first + s).transpose(), omega);
      terms.weighted(first + s) = v.weighted;
      terms.det(first + s) = v.det;
    }
  }
  return terms;
}

double old_nll_loss_hat(const RevNetParams& params, const Batch& batch,
                        const LossSpec& spec) {
  const OldLossTerms t = old_loss_terms(params, batch, spec.weights(params.dim()));
  return t.weighted.sum() + spec.lambda * (t.det.array() - 1.0).square().sum();
}

double old_nll_loss_tilde(const RevNetParams& params, const Batch& batch,
                          const LossSpec& spec) {
  const OldLossTerms t = old_loss_terms(params, batch, spec.weights(params.dim()));
  const Vec factors = (t.det.array() - 1.0).matrix();
  return std::sqrt(t.weighted.sum()) / static_cast<double>(batch.size()) +
         spec.lambda * clamped_product(factors);
}

double loss_value(const RevNetParams& params, const Batch& batch,
                  const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::NewL: return new_nll_loss(params, batch, spec.active_count);
    case LossKind::OldLhat: return old_nll_loss_hat(params, batch, spec);
    case LossKind::OldLtilde: return old_nll_loss_tilde(params, batch, spec);
  }
  throw ValidationError("unknown loss kind");
}

LossGradient loss_gradient(const RevNetParams& params, const Batch& batch,
                           const LossSpec& spec) {
  if (spec.kind == LossKind::NewL) {
    return new_nll_gradient(params, record_new_nll_tape(params, batch),
                            spec.active_count);
  }

  const Vec omega = spec.weights(params.dim());
  const Index count = batch.size();
  require_nonempty(batch);
  batch.validate(params.dim());
  LossGradient out;
  out.grad = Vec::Zero(params.size());

  // Runs one sweep per chunk and backpropagates the per-sample adjoints
  // produced by `adjoint(sample, G, c)`.
  const auto accumulate = [&](const auto& adjoint) {
    Vec grad = Vec::Zero(params.size());
    for (Index first = 0; first < count; first += kJacobianChunk) {
      const JacobianChunk chunk = jacobian_chunk(params, batch, first);
      Mat w_bar(chunk.tape.w.rows(), chunk.tape.w.cols());
      for (Index s = 0; s < chunk.count; ++s) {
        w_bar.middleCols(s * chunk.tape.block, chunk.tape.block) =
            adjoint(first + s, chunk.g(s), Vec(batch.grads.row(first + s).transpose()));
      }
      grad += backprop(params, chunk.tape, w_bar);
    }
    return grad;
  };

  if (spec.kind == LossKind::OldLhat) {
    out.grad = accumulate([&](Index, const Mat& g, const Vec& c) {
      const OldSampleValue v = old_sample_value(g, c, omega);
      out.value += v.weighted + spec.lambda * (v.det - 1.0) * (v.det - 1.0);
      return old_sample_adjoint(g, c, omega, 1.0, 2.0 * spec.lambda * (v.det - 1.0));
    });
    return out;
  }

  // The tilde loss couples all samples through sqrt(sum) and the product.
  // The weighted part is accumulated with unit coefficient and rescaled once
  // the total is known; the product part needs a second sweep only when the
  // product has not underflowed to zero.
  Vec factors(count);
  double total = 0.0;
  const Vec weighted_grad = accumulate([&](Index s, const Mat& g, const Vec& c) {
    const OldSampleValue v = old_sample_value(g, c, omega);
    total += v.weighted;
    factors(s) = v.det - 1.0;
    return old_sample_adjoint(g, c, omega, 1.0, 0.0);
  });
  out.value = std::sqrt(total) / static_cast<double>(count) +
              spec.lambda * clamped_product(factors);
  if (total > 0.0) {
    out.grad = weighted_grad / (2.0 * std::sqrt(total) * static_cast<double>(count));
  }
  const Vec partials = product_partials(factors);
  if (spec.lambda != 0.0 && !partials.isZero(0.0)) {
    out.grad += accumulate([&](Index s, const Mat& g, const Vec& c) {
      return old_sample_adjoint(g, c, omega, 0.0, spec.lambda * partials(s));
    });
  }
  return out;
}

}  // namespace nll
