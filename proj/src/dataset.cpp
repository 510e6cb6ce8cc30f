#include "nll/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace nll {

void DomainBox::validate() const {
  require(lower.size() == upper.size() && lower.size() > 0, "box bounds need equal nonzero length");
  require(lower.allFinite() && upper.allFinite(), "box bounds must be finite");
  require((lower.array() < upper.array()).all(), "box needs lower < upper in every coordinate");
}

bool DomainBox::contains(const Vec& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

DomainBox DomainBox::unit(int n) { return {Vec::Zero(n), Vec::Ones(n)}; }

Normalization Normalization::to_symmetric_unit(const DomainBox& box) {
  box.validate();
  return {true, box.lower, box.upper};
}

Mat Normalization::x_rows(const Mat& xs) const {
  if (!enabled) return xs;
  require(xs.cols() == lower.size(), "normalization dimension mismatch");
  const Eigen::RowVectorXd center = (0.5 * (lower + upper)).transpose();
  const Eigen::RowVectorXd half = (0.5 * (upper - lower)).transpose();
  return ((xs.rowwise() - center).array().rowwise() / half.array()).matrix();
}

Mat Normalization::grad_rows(const Mat& grads) const {
  if (!enabled) return grads;
  require(grads.cols() == lower.size(), "normalization dimension mismatch");
  const Eigen::RowVectorXd half = (0.5 * (upper - lower)).transpose();
  return (grads.array().rowwise() * half.array()).matrix();
}

Vec Normalization::x(const Vec& x) const {
  if (!enabled) return x;
  return x_rows(x.transpose()).transpose();
}

Vec Normalization::original_x(const Vec& u) const {
  if (!enabled) return u;
  require(u.size() == lower.size(), "normalization dimension mismatch");
  return (0.5 * (lower + upper)).array() + 0.5 * (upper - lower).array() * u.array();
}

void SampleSet::validate() const {
  require(f.size() == x.rows() && grad.rows() == x.rows() && grad.cols() == x.cols(),
          "sample set arrays have inconsistent shapes");
  require(x.allFinite() && f.allFinite() && grad.allFinite(), "sample set has non-finite entries");
}

Batch SampleSet::batch(const Normalization& norm) const {
  validate();
  return {norm.x_rows(x), norm.grad_rows(grad)};
}

void write_csv(const SampleSet& samples, const std::string& path) {
  samples.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  const int n = samples.dim();
  for (int i = 1; i <= n; ++i) out << "theta" << i << ',';
  out << 'f';
  for (int i = 1; i <= n; ++i) out << ",g" << i;
  out << '\n';

  char buf[32];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (Eigen::Index s = 0; s < samples.size(); ++s) {
    for (int i = 0; i < n; ++i) {
      put(samples.x(s, i));
      out << ',';
    }
    put(samples.f(s));
    for (int i = 0; i < n; ++i) {
      out << ',';
      put(samples.grad(s, i));
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

SampleSet read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path + "' is empty");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  require(header.size() >= 3 && header.size() % 2 == 1,
          "'" + path + "' header must be theta1..thetan,f,g1..gn");
  const int n = static_cast<int>(header.size() - 1) / 2;
  require(header[n] == "f", "'" + path + "' header must have f after the inputs");

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      require(end != cell.c_str(), "'" + path + "' has a non-numeric cell on row " +
                                       std::to_string(rows + 1));
      values.push_back(v);
      ++count;
    }
    require(count == header.size(),
            "'" + path + "' row " + std::to_string(rows + 1) + " has the wrong column count");
    ++rows;
  }

  SampleSet s;
  s.x.resize(rows, n);
  s.f.resize(rows);
  s.grad.resize(rows, n);
  const std::size_t width = header.size();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double* row = values.data() + r * width;
    for (int i = 0; i < n; ++i) {
      s.x(r, i) = row[i];
      s.grad(r, i) = row[n + 1 + i];
    }
    s.f(r) = row[n];
  }
  s.validate();
  return s;
}

}  // namespace nll
