#include "nll/regression.hpp"

#include "nll/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nll {

const char* to_string(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::LocalPoly: return "local_poly";
    case RegressorKind::GlobalPoly: return "global_poly";
    case RegressorKind::Mlp: return "mlp";
  }
  return "?";
}

RegressorKind regressor_from_string(const std::string& name) {
  if (name == "local_poly") return RegressorKind::LocalPoly;
  if (name == "global_poly") return RegressorKind::GlobalPoly;
  if (name == "mlp") return RegressorKind::Mlp;
  throw ValidationError("unknown regressor '" + name + "'");
}

namespace {

void append_degree(int dim, int remaining, int coord, std::vector<int>& current,
                   std::vector<std::vector<int>>& out) {
  if (coord == dim - 1) {
    current[coord] = remaining;
    out.push_back(current);
    current[coord] = 0;
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[coord] = e;
    append_degree(dim, remaining - e, coord + 1, current, out);
  }
  current[coord] = 0;
}

struct LeastSquares {
  Vec coeffs;
  bool rank_deficient = false;
};

LeastSquares solve_least_squares(const Mat& a, const Vec& b) {
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
  return {cod.solve(b), cod.rank() < a.cols()};
}

// flat layout: W1, b1, W2, b2, w3, b3
Eigen::Index mlp_size(int d, int width) {
  return static_cast<Eigen::Index>(width) * d + width + width * width + width + width + 1;
}

MlpWeights unpack(const Vec& flat, int d, int width) {
  MlpWeights w;
  Eigen::Index o = 0;
  const auto take = [&](Eigen::Index count) {
    Vec part = flat.segment(o, count);
    o += count;
    return part;
  };
  w.W1 = take(width * d).reshaped(width, d);
  w.b1 = take(width);
  w.W2 = take(width * width).reshaped(width, width);
  w.b2 = take(width);
  w.w3 = take(width);
  w.b3 = flat(o);
  return w;
}

Vec pack(const MlpWeights& w) {
  const int width = static_cast<int>(w.b1.size());
  const int d = static_cast<int>(w.W1.cols());
  Vec flat(mlp_size(d, width));
  flat << w.W1.reshaped(), w.b1, w.W2.reshaped(), w.b2, w.w3, w.b3;
  return flat;
}

}  // namespace

std::vector<std::vector<int>> monomial_exponents(int dim, int degree) {
  require(dim >= 1 && degree >= 0, "monomials need dim >= 1 and degree >= 0");
  std::vector<std::vector<int>> out;
  std::vector<int> current(dim, 0);
  for (int total = 0; total <= degree; ++total) append_degree(dim, total, 0, current, out);
  return out;
}

Mat monomial_design(const Mat& z, const std::vector<std::vector<int>>& exponents) {
  Mat a(z.rows(), static_cast<Eigen::Index>(exponents.size()));
  for (std::size_t j = 0; j < exponents.size(); ++j) {
    for (Eigen::Index s = 0; s < z.rows(); ++s) {
      double v = 1.0;
      for (Eigen::Index i = 0; i < z.cols(); ++i) {
        for (int e = 0; e < exponents[j][i]; ++e) v *= z(s, i);
      }
      a(s, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return a;
}

Regressor Regressor::local_poly(const RegressorConfig& config, Mat z, Vec f) {
  require(z.rows() >= 1 && z.cols() >= 1, "regression needs samples and d >= 1");
  require(z.rows() == f.size(), "sample and value counts differ");
  const auto monomials = monomial_exponents(static_cast<int>(z.cols()), config.degree);
  require(config.neighbors >= static_cast<int>(monomials.size()),
          "local polynomial fit needs at least as many neighbors as monomials");
  Regressor r;
  r.config_ = config;
  r.config_.kind = RegressorKind::LocalPoly;
  r.dim_ = static_cast<int>(z.cols());
  r.z_ = std::move(z);
  r.f_ = std::move(f);
  return r;
}

Regressor Regressor::global_poly(const RegressorConfig& config, int dim, Vec coeffs,
                                 bool rank_deficient) {
  require(static_cast<std::size_t>(coeffs.size()) ==
              monomial_exponents(dim, config.degree).size(),
          "coefficient count does not match the monomial basis");
  Regressor r;
  r.config_ = config;
  r.config_.kind = RegressorKind::GlobalPoly;
  r.dim_ = dim;
  r.coeffs_ = std::move(coeffs);
  r.rank_deficient_ = rank_deficient;
  return r;
}

Regressor Regressor::mlp(const RegressorConfig& config, MlpWeights weights, Vec in_mean,
                         Vec in_scale, double out_mean, double out_scale) {
  const Eigen::Index d = weights.W1.cols();
  require(in_mean.size() == d && in_scale.size() == d, "MLP input scaling has wrong size");
  Regressor r;
  r.config_ = config;
  r.config_.kind = RegressorKind::Mlp;
  r.config_.width = static_cast<int>(weights.b1.size());
  r.dim_ = static_cast<int>(d);
  r.mlp_ = std::move(weights);
  r.in_mean_ = std::move(in_mean);
  r.in_scale_ = std::move(in_scale);
  r.out_mean_ = out_mean;
  r.out_scale_ = out_scale;
  return r;
}

Regressor Regressor::fit(const RegressorConfig& config, const Mat& z, const Vec& f) {
  require(z.rows() >= 1 && z.cols() >= 1, "regression needs samples and d >= 1");
  require(z.rows() == f.size(), "sample and value counts differ");
  require(z.allFinite() && f.allFinite(), "regression data must be finite");
  const int d = static_cast<int>(z.cols());

  if (config.kind == RegressorKind::LocalPoly) return local_poly(config, z, f);

  if (config.kind == RegressorKind::GlobalPoly) {
    const LeastSquares ls =
        solve_least_squares(monomial_design(z, monomial_exponents(d, config.degree)), f);
    return global_poly(config, d, ls.coeffs, ls.rank_deficient);
  }

  require(config.width >= 1 && config.epochs >= 1 && config.lr > 0.0,
          "MLP needs width, epochs and lr > 0");
  const int width = config.width;
  const double s = static_cast<double>(z.rows());

  Vec in_mean = z.colwise().mean().transpose();
  Vec in_scale(d);
  for (int i = 0; i < d; ++i) {
    const double sd = std::sqrt((z.col(i).array() - in_mean(i)).square().sum() / s);
    in_scale(i) = sd > 0.0 ? sd : 1.0;
  }
  const double out_mean = f.mean();
  const double out_sd = std::sqrt((f.array() - out_mean).square().sum() / s);
  const double out_scale = out_sd > 0.0 ? out_sd : 1.0;

  // standardized data, samples as columns
  const Mat x = ((z.rowwise() - in_mean.transpose()).array().rowwise() /
                 in_scale.transpose().array())
                    .matrix()
                    .transpose();
  const Eigen::RowVectorXd t = ((f.array() - out_mean) / out_scale).matrix().transpose();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto gaussian = [&](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng) / std::sqrt(fan_in);
    }
    return m;
  };
  MlpWeights w;
  w.W1 = gaussian(width, d, d);
  w.b1 = Vec::Zero(width);
  w.W2 = gaussian(width, width, width);
  w.b2 = Vec::Zero(width);
  w.w3 = gaussian(width, 1, width);
  w.b3 = 0.0;

  Vec theta = pack(w);
  // lr 0.05 occasionally blows up late in training; keep the best fit seen
  Vec best = theta;
  double best_loss = INFINITY;
  AdamState adam(theta.size());
  MlpWeights g;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const MlpWeights cur = unpack(theta, d, width);
    const Mat h1 = ((cur.W1 * x).colwise() + cur.b1).array().tanh().matrix();
    const Mat h2 = ((cur.W2 * h1).colwise() + cur.b2).array().tanh().matrix();
    const Eigen::RowVectorXd y = (cur.w3.transpose() * h2).array() + cur.b3;
    const double loss = (y - t).squaredNorm() / s;
    if (!std::isfinite(loss)) break;
    if (loss < best_loss) {
      best_loss = loss;
      best = theta;
    }
    const Eigen::RowVectorXd dy = 2.0 * (y - t) / s;

    g.w3 = h2 * dy.transpose();
    g.b3 = dy.sum();
    const Mat da2 = ((cur.w3 * dy).array() * (1.0 - h2.array().square())).matrix();
    g.W2 = da2 * h1.transpose();
    g.b2 = da2.rowwise().sum();
    const Mat da1 =
        ((cur.W2.transpose() * da2).array() * (1.0 - h1.array().square())).matrix();
    g.W1 = da1 * x.transpose();
    g.b1 = da1.rowwise().sum();

    const Vec grad = pack(g);
    if (!grad.allFinite()) break;
    adam_step(adam, theta, grad, config.lr);
  }
  if (!std::isfinite(best_loss)) throw NumericalError("MLP regression produced a non-finite loss");
  return mlp(config, unpack(best, d, width), std::move(in_mean), std::move(in_scale),
             out_mean, out_scale);
}

double Regressor::predict_local(const Vec& q) const {
  const Eigen::Index count = z_.rows();
  const Eigen::Index k = std::min<Eigen::Index>(config_.neighbors, count);
  std::vector<std::pair<double, Eigen::Index>> dist(count);
  for (Eigen::Index s = 0; s < count; ++s) {
    dist[s] = {(z_.row(s).transpose() - q).squaredNorm(), s};
  }
  // pair ordering breaks distance ties by the lower training index
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  Mat local(k, dim_);
  Vec values(k);
  double radius = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    local.row(j) = z_.row(dist[j].second) - q.transpose();
    values(j) = f_(dist[j].second);
    radius = std::max(radius, std::sqrt(dist[j].first));
  }
  // unit-scale offsets keep the monomial columns comparable; the constant
  // coefficient is unaffected
  if (radius > 0.0) local /= radius;
  const Mat a = monomial_design(local, monomial_exponents(dim_, config_.degree));
  return solve_least_squares(a, values).coeffs(0);
}

double Regressor::predict_mlp(const Vec& q) const {
  const Vec x = ((q - in_mean_).array() / in_scale_.array()).matrix();
  const Vec h1 = (mlp_.W1 * x + mlp_.b1).array().tanh().matrix();
  const Vec h2 = (mlp_.W2 * h1 + mlp_.b2).array().tanh().matrix();
  return out_mean_ + out_scale_ * (mlp_.w3.dot(h2) + mlp_.b3);
}

double Regressor::predict(const Vec& z) const {
  require(z.size() == dim_, "query has the wrong latent dimension");
  switch (config_.kind) {
    case RegressorKind::LocalPoly: return predict_local(z);
    case RegressorKind::GlobalPoly: {
      const Mat row = z.transpose();
      return (monomial_design(row, monomial_exponents(dim_, config_.degree)) * coeffs_)(0);
    }
    case RegressorKind::Mlp: return predict_mlp(z);
  }
  return 0.0;
}

Vec Regressor::predict_rows(const Mat& z) const {
  require(z.cols() == dim_, "queries have the wrong latent dimension");
  Vec out(z.rows());
  for (Eigen::Index s = 0; s < z.rows(); ++s) out(s) = predict(z.row(s).transpose());
  return out;
}

}  // namespace nll
