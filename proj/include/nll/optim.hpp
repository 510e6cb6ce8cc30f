#pragma once

#include "nll/loss.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace nll {

enum class OptimizerKind { Adam, Sgd };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

/// Bias-corrected ADAM moments.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Vec m;
  Vec v;

  AdamState() = default;
  explicit AdamState(Eigen::Index size) : m(Vec::Zero(size)), v(Vec::Zero(size)) {}
};

void adam_step(AdamState& state, Eigen::Ref<Vec> values, const Vec& grad, double lr);
void adam_step(AdamState& state, RevNetParams& params, const Vec& grad, double lr);
void sgd_step(Eigen::Ref<Vec> values, const Vec& grad, double lr);
void sgd_step(RevNetParams& params, const Vec& grad, double lr);

struct TrainConfig {
  int epochs = 5000;
  double lr = 0.003;
  OptimizerKind optimizer = OptimizerKind::Adam;
  int log_every = 10;
  std::uint64_t seed = 1;
  LossSpec loss;
  /// 0 trains on the full batch each epoch; otherwise shuffled mini-batches.
  int batch_size = 0;
};

struct TraceRow {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double train_rel_pct = 100.0;
  double valid_rel_pct = 100.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  /// Latest logged row at or before `epoch`.
  const TraceRow& at_or_before(int epoch) const;
  void write_csv(std::ostream& out) const;
};

/// Percent of `initial`; 100 when both are zero.
double relative_percent(double value, double initial);

struct TrainResult {
  RevNetParams params;             // parameters after the final epoch
  RevNetParams best_valid_params;  // lowest logged validation loss
  int best_valid_epoch = 0;
  TrainTrace trace;
};

/// Non-finite training loss; carries the trace recorded so far.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, TrainTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

using EpochCallback = std::function<void(const TraceRow&)>;

/// Gradient steps on `train`, one per epoch (or one per mini-batch), with
/// the validation loss logged every `log_every` epochs and at the end. Row
/// `epoch = k` holds the losses after k epochs of updates.
TrainResult train(RevNetParams params, const Batch& train_batch,
                  const Batch& valid_batch, const TrainConfig& config,
                  const EpochCallback& on_log = {});

}  // namespace nll
