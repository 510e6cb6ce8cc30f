#pragma once

// End-to-end experiment pipeline: sample a problem, fit a transform (New or
// Old NLL, or Active Subspaces), regress on the active coordinates and score
// the result on held-out samples.

#include "nll/metrics.hpp"
#include "nll/optim.hpp"
#include "nll/problems.hpp"
#include "nll/regression.hpp"
#include "nll/serialize.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nll {

enum class Method { NewNll, OldNllHat, OldNllTilde, ActiveSubspace };

const char* to_string(Method m);
Method method_from_string(const std::string& name);
bool is_nll(Method m);

struct ExperimentConfig {
  std::string problem = "f5";  // f4 | f5 | r0 | burgers_K | csv
  std::optional<DomainBox> box;
  std::string data_dir;  // problem "csv": directory holding train/valid/test CSVs
  Eigen::Index n_train = 500;
  Eigen::Index n_valid = 500;
  Eigen::Index n_test = 10000;

  Method method = Method::NewNll;
  int active_dim = 1;

  int layers = 30;
  int width = 0;  // 0: n / 2
  double tau = 0.25;
  double init_scale = 0.1;

  TrainConfig train;
  double lambda = 1.0;
  RegressorConfig regressor;

  bool normalize = true;
  SensitivityConvention sensitivity = SensitivityConvention::AbsMean;
  std::uint64_t seed = 1;
  std::string out = "out";

  void validate() const;
  void validate_problem() const;
  /// Loss used for the selected NLL method.
  LossSpec loss(int n) const;
};

/// Published settings for a problem and method; everything else at defaults.
ExperimentConfig default_config(const std::string& problem, Method method);

Json to_json(const ExperimentConfig& c);
/// Fields present in `j` override `base`.
ExperimentConfig config_from_json(const Json& j, ExperimentConfig base);

/// Seed of an independent stream (0 train, 1 valid, 2 test, 3 network, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Dataset {
  std::string problem;
  DomainBox box;
  Normalization norm;
  SampleSet train, valid, test;
  std::uint64_t seed = 0;
};

Dataset generate_dataset(const ExperimentConfig& c);
/// train.csv, valid.csv, test.csv and dataset.json.
void write_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// A fitted transform with its input normalization.
struct Model {
  Method method = Method::NewNll;
  int active_dim = 1;
  Normalization norm;
  std::optional<RevNetParams> revnet;
  std::optional<ASModel> as;

  /// Active coordinates z_A of samples given in problem units.
  Mat latent(const Mat& xs) const;
  /// Per-sample gradients of f o h in the new coordinates.
  Mat push_forward(const SampleSet& s) const;
  SensitivityReport sensitivities(const SampleSet& s, SensitivityConvention c) const;
};

Json to_json(const Model& m);
Model model_from_json(const Json& j);

struct TrainOutcome {
  Model model;       // final epoch
  Model best_valid;  // lowest logged validation loss
  TrainTrace trace;  // empty for Active Subspaces
  double seconds = 0.0;
};

TrainOutcome train_model(const ExperimentConfig& c, const Dataset& d,
                         const EpochCallback& on_log = {});

struct TableRow {
  std::string problem;
  std::string method;  // table label, e.g. "New NLL", "AS 1-D"
  Eigen::Index samples = 0;
  double sens_pct = 0.0;
  double rrmse_pct = 0.0;
  double rl1_pct = 0.0;
  double rl2_pct = 0.0;
};

std::string table_label(Method m, int active_dim, const std::string& problem);
std::string table_header();
std::string table_line(const TableRow& r);

struct Evaluation {
  TableRow row;
  Regressor regressor;
  Mat latent_test;  // z_A of the test samples
  Vec f_pred;
};

/// Regression on the training projections and scoring on the test split.
/// `oracle`, when given, replaces the regressor's predictions.
Evaluation evaluate_model(const ExperimentConfig& c, const Dataset& d, const Model& m,
                          const std::function<Vec(const Mat&)>& oracle = {});

void write_scatter_csv(const Evaluation& e, const Vec& f_true, const std::string& path);

}  // namespace nll
