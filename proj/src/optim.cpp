#include "nll/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace nll {

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw ValidationError("unknown optimizer '" + name + "'");
}

void adam_step(AdamState& state, Eigen::Ref<Vec> values, const Vec& grad, double lr) {
  require(state.m.size() == values.size() && state.v.size() == values.size() &&
              grad.size() == values.size(),
          "ADAM state, parameters and gradient must have equal size");
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  values.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

void adam_step(AdamState& state, RevNetParams& params, const Vec& grad, double lr) {
  adam_step(state, params.mutable_values(), grad, lr);
}

void sgd_step(Eigen::Ref<Vec> values, const Vec& grad, double lr) {
  require(grad.size() == values.size(), "gradient size mismatch");
  values -= lr * grad;
}

void sgd_step(RevNetParams& params, const Vec& grad, double lr) {
  sgd_step(params.mutable_values(), grad, lr);
}

double relative_percent(double value, double initial) {
  if (initial == 0.0) {
    return value == 0.0 ? 100.0 : std::numeric_limits<double>::infinity();
  }
  return 100.0 * value / initial;
}

const TraceRow& TrainTrace::at_or_before(int epoch) const {
  require(!rows.empty(), "empty training trace");
  const TraceRow* found = &rows.front();
  for (const TraceRow& row : rows) {
    if (row.epoch > epoch) break;
    found = &row;
  }
  return *found;
}

void TrainTrace::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,valid_loss,train_rel_pct,valid_rel_pct\n";
  const auto old_precision = out.precision(17);
  for (const TraceRow& r : rows) {
    out << r.epoch << ',' << r.train_loss << ',' << r.valid_loss << ','
        << r.train_rel_pct << ',' << r.valid_rel_pct << '\n';
  }
  out.precision(old_precision);
}

namespace {

Batch subset(const Batch& batch, const std::vector<Eigen::Index>& rows) {
  Batch out{Mat(rows.size(), batch.xs.cols()), Mat(rows.size(), batch.grads.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.xs.row(i) = batch.xs.row(rows[i]);
    out.grads.row(i) = batch.grads.row(rows[i]);
  }
  return out;
}

}  // namespace

TrainResult train(RevNetParams params, const Batch& train_batch,
                  const Batch& valid_batch, const TrainConfig& config,
                  const EpochCallback& on_log) {
  require(config.epochs >= 1, "epochs must be >= 1");
  require(config.lr > 0.0, "learning rate must be positive");
  require(config.log_every >= 1, "log_every must be >= 1");
  require(train_batch.size() > 0 && valid_batch.size() > 0,
          "training and validation batches must be nonempty");
  train_batch.validate(params.dim());
  valid_batch.validate(params.dim());

  AdamState adam(params.size());
  std::mt19937_64 rng(config.seed);
  const bool mini = config.batch_size > 0 && config.batch_size < train_batch.size();
  std::vector<Eigen::Index> order(train_batch.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result;
  double train0 = 0.0, valid0 = 0.0;
  double best_valid = std::numeric_limits<double>::infinity();

  const auto step = [&](const Vec& grad) {
    if (config.optimizer == OptimizerKind::Adam) {
      adam_step(adam, params, grad, config.lr);
    } else {
      sgd_step(params, grad, config.lr);
    }
  };

  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    const bool log = epoch % config.log_every == 0 || epoch == config.epochs;
    const bool update = epoch < config.epochs;
    LossGradient lg;
    if (update && !mini) {
      lg = loss_gradient(params, train_batch, config.loss);
    } else if (log) {
      lg.value = loss_value(params, train_batch, config.loss);
    }

    if (log) {
      TraceRow row;
      row.epoch = epoch;
      row.train_loss = lg.value;
      row.valid_loss = loss_value(params, valid_batch, config.loss);
      if (epoch == 0) {
        train0 = row.train_loss;
        valid0 = row.valid_loss;
      }
      row.train_rel_pct = relative_percent(row.train_loss, train0);
      row.valid_rel_pct = relative_percent(row.valid_loss, valid0);
      result.trace.rows.push_back(row);
      if (on_log) on_log(row);
      if (!std::isfinite(row.train_loss) || !std::isfinite(row.valid_loss)) {
        throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch),
                              result.trace);
      }
      if (row.valid_loss < best_valid) {
        best_valid = row.valid_loss;
        result.best_valid_params = params;
        result.best_valid_epoch = epoch;
      }
    }
    if (!update) break;

    if (!mini) {
      if (!std::isfinite(lg.value) || !lg.grad.allFinite()) {
        throw TrainingAborted("non-finite loss or gradient at epoch " +
                                  std::to_string(epoch),
                              result.trace);
      }
      step(lg.grad);
      continue;
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t first = 0; first < order.size();
         first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t last =
          std::min(order.size(), first + static_cast<std::size_t>(config.batch_size));
      const std::vector<Eigen::Index> rows(order.begin() + first, order.begin() + last);
      const LossGradient part = loss_gradient(params, subset(train_batch, rows), config.loss);
      if (!std::isfinite(part.value) || !part.grad.allFinite()) {
        throw TrainingAborted("non-finite mini-batch loss at epoch " +
                                  std::to_string(epoch),
                              result.trace);
      }
      step(part.grad);
    }
  }
  result.params = std::move(params);
  return result;
}

}  // namespace nll
