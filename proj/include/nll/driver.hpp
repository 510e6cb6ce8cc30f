#pragma once

// Pieces shared by the command-line driver and the Python bindings: the
// table grids, the published reference numbers with their tolerance bands,
// and a finite-difference spot check for sampled gradients.

#include "nll/experiment.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nll {

struct Job {
  ExperimentConfig config;
  std::string label;  // table label, e.g. "Old NLL 2"
};

struct TablePlan {
  std::string id;  // "table1" | "table2"
  std::vector<Eigen::Index> samples;
  std::vector<Job> jobs;  // grouped by (problem, samples); a group shares its data
  std::vector<std::string> notes;
};

struct PlanOptions {
  std::vector<Eigen::Index> samples;  // empty: the published sample counts
  std::optional<int> epochs;          // shrink NLL and MLP training for smoke runs
  std::optional<DomainBox> r0_box;    // without it the R0 rows are skipped
  std::uint64_t seed = 1;
  std::string out = "out";
};

TablePlan plan_table(const std::string& id, const PlanOptions& opt);

/// Published row, if there is one.
struct Reference {
  double sens_pct, rrmse_pct, rl1_pct, rl2_pct;
};
std::optional<Reference> reference_row(const std::string& problem, const std::string& label,
                                       Eigen::Index samples);

struct BandCheck {
  std::string problem, method;
  Eigen::Index samples = 0;
  std::string metric;  // "sens_pct" | "rrmse_pct" | "property"
  double value = 0.0;
  double reference = 0.0;
  std::string band;  // human-readable rule
  bool pass = false;
};

/// Band checks for a finished table: sensitivity within 10 points below the
/// published value (or above it), RRMSE at most 3x the published value. R0
/// has no published ranges, so its rows are checked for New NLL beating
/// 1-D AS on sensitivity instead.
std::vector<BandCheck> check_bands(const std::vector<TableRow>& rows);
std::string band_header();
std::string band_line(const BandCheck& b);

struct GradientCheck {
  Eigen::Index samples = 0;
  Eigen::Index failures = 0;
  double max_rel_err = 0.0;
  std::vector<double> rel_err;  // per sample, ||g - g_fd|| / ||g||
};

/// Central differences with step `rel_step` times each box width.
GradientCheck check_gradients(const Problem& p, const SampleSet& s, double rel_step = 1e-6,
                              double tol = 1e-5);

}  // namespace nll
