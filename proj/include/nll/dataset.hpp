#pragma once

#include "nll/loss.hpp"

#include <cstdint>
#include <string>

namespace nll {

struct DomainBox {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  bool contains(const Vec& x) const;
  static DomainBox unit(int n);
};

/// Affine map of a box onto [-1, 1]^n. Gradients transform with the inverse
/// scale so that directional derivatives are preserved.
struct Normalization {
  bool enabled = false;
  Vec lower;
  Vec upper;

  static Normalization none() { return {}; }
  static Normalization to_symmetric_unit(const DomainBox& box);

  Mat x_rows(const Mat& xs) const;
  Mat grad_rows(const Mat& grads) const;
  Vec x(const Vec& x) const;
  Vec original_x(const Vec& u) const;
};

/// Samples {x, f(x), grad f(x)} in rows, in problem units.
struct SampleSet {
  std::string problem = "custom";
  DomainBox box;
  std::uint64_t seed = 0;
  Mat x;
  Vec f;
  Mat grad;

  Eigen::Index size() const { return x.rows(); }
  int dim() const { return static_cast<int>(x.cols()); }
  void validate() const;
  Batch batch(const Normalization& norm) const;
};

/// Header theta1..thetan,f,g1..gn, values printed with 17 significant digits.
void write_csv(const SampleSet& samples, const std::string& path);
SampleSet read_csv(const std::string& path);

}  // namespace nll
