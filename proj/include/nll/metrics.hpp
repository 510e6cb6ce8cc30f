#pragma once

#include "nll/activesub.hpp"
#include "nll/loss.hpp"

#include <string>

namespace nll {

enum class SensitivityConvention { AbsMean, SquaredMean };

const char* to_string(SensitivityConvention c);
SensitivityConvention sensitivity_convention_from_string(const std::string& name);

struct SensitivityReport {
  Vec percent;  // sums to 100
  Eigen::Index samples = 0;
  std::string method;

  /// Share of the first `k` coordinates.
  double active_percent(int k = 1) const { return percent.head(k).sum(); }
};

/// Percentages from per-sample gradients of f o h in the new coordinates.
SensitivityReport sensitivity_report(const Mat& push_grads, SensitivityConvention convention,
                                     std::string method);

/// Rows J_h(g(x_s))^T grad f(x_s), via one batched sweep.
Mat push_forward_gradients(const RevNetParams& params, const Batch& batch);
/// Rows W^T grad f(x_s).
Mat push_forward_gradients(const ASModel& model, const Mat& grads);

SensitivityReport coordinate_sensitivities(
    const RevNetParams& params, const Batch& batch,
    SensitivityConvention convention = SensitivityConvention::AbsMean);
SensitivityReport coordinate_sensitivities(
    const ASModel& model, const Mat& grads,
    SensitivityConvention convention = SensitivityConvention::AbsMean);

/// ||f - fhat||_2 / (sqrt(|S|) (max f - min f)).
double rrmse(const Vec& f_true, const Vec& f_pred);
/// ||f - fhat||_1 / ||f||_1.
double rl1(const Vec& f_true, const Vec& f_pred);
/// ||f - fhat||_2 / ||f||_2.
double rl2(const Vec& f_true, const Vec& f_pred);

}  // namespace nll
