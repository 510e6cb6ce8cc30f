#pragma once

#include "nll/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nll {

enum class RegressorKind { LocalPoly, GlobalPoly, Mlp };

const char* to_string(RegressorKind kind);
RegressorKind regressor_from_string(const std::string& name);

struct RegressorConfig {
  RegressorKind kind = RegressorKind::LocalPoly;
  int degree = 2;
  int neighbors = 10;
  int width = 20;  // MLP: two hidden tanh layers of this width
  int epochs = 5000;
  double lr = 0.05;
  std::uint64_t seed = 1;
};

/// Exponent vectors of total degree <= `degree` in `dim` variables, graded:
/// constant first, then degree 1 in coordinate order, and so on.
std::vector<std::vector<int>> monomial_exponents(int dim, int degree);
/// One row per sample of monomial values.
Mat monomial_design(const Mat& z, const std::vector<std::vector<int>>& exponents);

struct MlpWeights {
  Mat W1;  // width x d
  Vec b1;
  Mat W2;  // width x width
  Vec b2;
  Vec w3;  // width
  double b3 = 0.0;
};

/// Regression model on latent coordinates (rows of `z`).
class Regressor {
 public:
  static Regressor fit(const RegressorConfig& config, const Mat& z, const Vec& f);

  double predict(const Vec& z) const;
  Vec predict_rows(const Mat& z) const;

  const RegressorConfig& config() const { return config_; }
  int latent_dim() const { return dim_; }
  /// Set when the global least-squares fit was rank deficient and the
  /// minimum-norm solution was used instead.
  bool rank_deficient() const { return rank_deficient_; }

  // fitted state, exposed for serialization
  const Mat& train_z() const { return z_; }
  const Vec& train_f() const { return f_; }
  const Vec& coefficients() const { return coeffs_; }
  const MlpWeights& mlp() const { return mlp_; }
  const Vec& input_mean() const { return in_mean_; }
  const Vec& input_scale() const { return in_scale_; }
  double output_mean() const { return out_mean_; }
  double output_scale() const { return out_scale_; }

  static Regressor local_poly(const RegressorConfig& config, Mat z, Vec f);
  static Regressor global_poly(const RegressorConfig& config, int dim, Vec coeffs,
                               bool rank_deficient = false);
  static Regressor mlp(const RegressorConfig& config, MlpWeights weights, Vec in_mean,
                       Vec in_scale, double out_mean, double out_scale);

 private:
  double predict_local(const Vec& q) const;
  double predict_mlp(const Vec& q) const;

  RegressorConfig config_;
  int dim_ = 0;
  bool rank_deficient_ = false;
  Mat z_;
  Vec f_;
  Vec coeffs_;
  MlpWeights mlp_;
  Vec in_mean_, in_scale_;
  double out_mean_ = 0.0, out_scale_ = 1.0;
};

}  // namespace nll
