#pragma once

// Reversible Verlet network: a bijection z = g(x) with closed-form inverse
// x = h(z). Each layer splits the state into channels (u, v) and applies
//
//   u <- u + tau * K1^T tanh(K1 v + b1)
//   v <- v - tau * K2^T tanh(K2 u + b2)
//
// The layer is a composition of two shears, so it is volume preserving and
// exactly invertible.

#include "nll/types.hpp"

#include <cstdint>
#include <type_traits>
#include <vector>

namespace nll {

/// Weights and architecture of a reversible network.
///
/// All parameters live in one flat vector laid out layer by layer as
/// [K1 (m x q, row-major), b1 (m), K2 (m x p, row-major), b2 (m)], so the
/// optimizers and the gradient can treat them as a single vector. Any flat
/// vector with the same layout (e.g. a gradient) can be viewed per layer via
/// `layer_of`.
class RevNetParams {
 public:
  template <typename M>
  struct BasicLayerView {
    Eigen::Map<M> K1;
    Eigen::Map<std::conditional_t<std::is_const_v<M>, const Vec, Vec>> b1;
    Eigen::Map<M> K2;
    Eigen::Map<std::conditional_t<std::is_const_v<M>, const Vec, Vec>> b2;
  };
  using LayerView = BasicLayerView<const RowMat>;
  using MutableLayerView = BasicLayerView<RowMat>;

  RevNetParams() = default;
  /// Zero weights (identity map). `input_dim` is `dim` or `dim - 1` when an
  /// odd input has been padded with one inert coordinate.
  RevNetParams(int dim, int layers, int width, double tau, int input_dim = -1);

  int dim() const { return dim_; }
  int input_dim() const { return input_dim_; }
  bool padded() const { return input_dim_ != dim_; }
  int half() const { return dim_ / 2; }
  int num_layers() const { return layers_; }
  int width() const { return width_; }
  double tau() const { return tau_; }
  Eigen::Index size() const { return values_.size(); }
  Eigen::Index layer_size() const;
  Eigen::Index layer_offset(int l) const { return l * layer_size(); }

  const Vec& values() const { return values_; }
  /// Replaces every parameter; bumps the version.
  void set_values(const Vec& values);
  /// Mutable access for in-place updates; bumps the version on every call.
  Vec& mutable_values();
  std::uint64_t version() const { return version_; }

  LayerView layer(int l) const { return layer_of(values_, l); }
  LayerView layer_of(const Vec& flat, int l) const;
  MutableLayerView layer_of(Vec& flat, int l) const;

  /// Appends the inert zero coordinate when padded; otherwise copies.
  Vec pad(const Vec& x) const;
  Mat pad_rows(const Mat& rows) const;

 private:
  int dim_ = 0;
  int input_dim_ = 0;
  int layers_ = 0;
  int width_ = 0;
  double tau_ = 0.25;
  Vec values_;
  std::uint64_t version_ = 0;
};

/// Gaussian(0, scale^2) weights and zero biases, deterministic in `seed`.
/// `width <= 0` selects the default n/2. Odd `n` is rejected unless
/// `pad_odd` is set, in which case the network dimension becomes n + 1.
RevNetParams init_params(int n, int layers, int width, double tau,
                         std::uint64_t seed, double scale = 0.1,
                         bool pad_odd = false);

Vec forward(const RevNetParams& params, const Vec& x);
/// Column-wise forward map (each column is one sample).
Mat forward(const RevNetParams& params, const Mat& xs);
Vec inverse(const RevNetParams& params, const Vec& z);
Mat inverse(const RevNetParams& params, const Mat& zs);

/// J_h(z)^T w. With w = grad f(h(z)), entry i is <grad f(x), dh/dz_i>.
Vec inverse_vjp(const RevNetParams& params, const Vec& z, const Vec& w);
/// Full J_h(z); column i is dh/dz_i.
Mat inverse_jacobian(const RevNetParams& params, const Vec& z);
/// Full J_g(x) by forward-mode tangent propagation.
Mat forward_jacobian(const RevNetParams& params, const Vec& x);

/// Intermediate values of one combined sweep, kept for the reverse pass.
struct LayerRecord {
  Mat v_in, u_out;        // primal channels entering the K1 / K2 branches
  Mat t1, t2;             // tanh activations
  Mat alpha_in, beta_mid; // adjoint channels entering the K1 / K2 branches
  Mat p1, p2;             // K1 alpha, K2 beta
};

/// Record of a forward sweep that also carries adjoint seeds C from the x
/// side to the z side, producing w = J_h(z)^T C. Seeds are grouped in blocks
/// of `block` columns per primal sample (block 0: primal only).
struct Tape {
  std::uint64_t version = 0;
  int block = 0;
  Mat x, z, w;
  std::vector<LayerRecord> layers;
};

Tape forward_with_tape(const RevNetParams& params, const Mat& xs,
                       const Mat& seeds, int block);
Tape forward_with_tape(const RevNetParams& params, const Vec& x);

/// Throws StaleTapeError if `params` changed since the tape was recorded.
void check_fresh(const RevNetParams& params, const Tape& tape);

/// Recomputes z from the recorded layer activations.
Mat replay(const RevNetParams& params, const Tape& tape);

/// Reverse pass over a tape: gradient of a scalar with respect to all
/// parameters, given its sensitivities to the tape outputs w (and optionally
/// z). The result has the same layout as `params.values()`.
Vec backprop(const RevNetParams& params, const Tape& tape, const Mat& w_bar,
             const Mat* z_bar = nullptr);

}  // namespace nll
