#include "nll/metrics.hpp"

#include <cmath>

namespace nll {

const char* to_string(SensitivityConvention c) {
  return c == SensitivityConvention::AbsMean ? "abs_mean" : "squared_mean";
}

SensitivityConvention sensitivity_convention_from_string(const std::string& name) {
  if (name == "abs_mean") return SensitivityConvention::AbsMean;
  if (name == "squared_mean") return SensitivityConvention::SquaredMean;
  throw ValidationError("unknown sensitivity convention '" + name + "'");
}

SensitivityReport sensitivity_report(const Mat& push_grads, SensitivityConvention convention,
                                     std::string method) {
  require(push_grads.rows() >= 1, "sensitivities need at least one sample");
  require(push_grads.allFinite(), "sensitivities need finite gradients");
  const Vec s = convention == SensitivityConvention::AbsMean
                    ? Vec(push_grads.cwiseAbs().colwise().mean().transpose())
                    : Vec(push_grads.cwiseAbs2().colwise().mean().transpose());
  const double total = s.sum();
  require(total > 0.0, "all sampled gradients vanish; sensitivities are undefined");
  return {100.0 * s / total, push_grads.rows(), std::move(method)};
}

Mat push_forward_gradients(const RevNetParams& params, const Batch& batch) {
  require(batch.size() >= 1, "sensitivities need at least one sample");
  const Mat xs = params.pad_rows(batch.xs);
  const Mat grads = params.pad_rows(batch.grads);
  const Batch padded{xs, grads};
  padded.validate(params.dim());
  const Tape tape = forward_with_tape(params, xs.transpose(), grads.transpose(), 1);
  return tape.w.transpose();
}

Mat push_forward_gradients(const ASModel& model, const Mat& grads) {
  require(grads.cols() == model.dim(), "gradient dimension does not match the model");
  return grads * model.W;
}

SensitivityReport coordinate_sensitivities(const RevNetParams& params, const Batch& batch,
                                           SensitivityConvention convention) {
  return sensitivity_report(push_forward_gradients(params, batch), convention, "nll");
}

SensitivityReport coordinate_sensitivities(const ASModel& model, const Mat& grads,
                                           SensitivityConvention convention) {
  return sensitivity_report(push_forward_gradients(model, grads), convention, "as");
}

namespace {

void check_pair(const Vec& f_true, const Vec& f_pred) {
  require(f_true.size() == f_pred.size() && f_true.size() > 0,
          "error metrics need equal-length nonempty vectors");
}

}  // namespace

double rrmse(const Vec& f_true, const Vec& f_pred) {
  check_pair(f_true, f_pred);
  const double range = f_true.maxCoeff() - f_true.minCoeff();
  require(range > 0.0, "RRMSE needs max f > min f");
  return (f_true - f_pred).norm() /
         (std::sqrt(static_cast<double>(f_true.size())) * range);
}

double rl1(const Vec& f_true, const Vec& f_pred) {
  check_pair(f_true, f_pred);
  const double denom = f_true.lpNorm<1>();
  require(denom > 0.0, "relative l1 error needs a nonzero reference");
  return (f_true - f_pred).lpNorm<1>() / denom;
}

double rl2(const Vec& f_true, const Vec& f_pred) {
  check_pair(f_true, f_pred);
  const double denom = f_true.norm();
  require(denom > 0.0, "relative l2 error needs a nonzero reference");
  return (f_true - f_pred).norm() / denom;
}

}  // namespace nll
