#include "nll/revnet.hpp"

#include <random>
#include <string>

namespace nll {

namespace {

using Eigen::Index;

// Scales every column of a seed block by the activation derivative of the
// primal sample that owns the block.
Mat scale_blocks(const Mat& s, const Mat& p, int block) {
  if (block == 1) return s.cwiseProduct(p);
  Mat q(p.rows(), p.cols());
  for (Index c = 0; c < s.cols(); ++c) {
    q.middleCols(c * block, block) =
        p.middleCols(c * block, block).array().colwise() * s.col(c).array();
  }
  return q;
}

// Adjoint of scale_blocks with respect to s.
Mat reduce_blocks(const Mat& p, const Mat& g, int block) {
  if (block == 1) return p.cwiseProduct(g);
  Mat r(p.rows(), p.cols() / block);
  for (Index c = 0; c < r.cols(); ++c) {
    r.col(c) = p.middleCols(c * block, block)
                   .cwiseProduct(g.middleCols(c * block, block))
                   .rowwise()
                   .sum();
  }
  return r;
}

Mat tanh_of(const Mat& a) { return a.array().tanh().matrix(); }

Mat dtanh_from(const Mat& t) { return (1.0 - t.array().square()).matrix(); }

void check_rows(const RevNetParams& params, Index rows, const char* what) {
  if (rows != params.dim()) {
    throw ValidationError(std::string(what) + ": expected dimension " +
                          std::to_string(params.dim()) + ", got " +
                          std::to_string(rows));
  }
}

}  // namespace

RevNetParams::RevNetParams(int dim, int layers, int width, double tau,
                           int input_dim)
    : dim_(dim),
      input_dim_(input_dim < 0 ? dim : input_dim),
      layers_(layers),
      width_(width),
      tau_(tau) {
  require(dim >= 2 && dim % 2 == 0, "RevNet dimension must be even and >= 2");
  require(input_dim_ == dim_ || input_dim_ == dim_ - 1,
          "input dimension must equal the network dimension or be one less");
  require(layers >= 1, "RevNet needs at least one layer");
  require(width >= 1, "RevNet hidden width must be >= 1");
  require(tau > 0.0, "RevNet step size must be positive");
  values_ = Vec::Zero(layers_ * layer_size());
}

Index RevNetParams::layer_size() const {
  return 2 * (static_cast<Index>(width_) * half() + width_);
}

void RevNetParams::set_values(const Vec& values) {
  require(values.size() == values_.size(), "parameter vector size mismatch");
  values_ = values;
  ++version_;
}

Vec& RevNetParams::mutable_values() {
  ++version_;
  return values_;
}

RevNetParams::LayerView RevNetParams::layer_of(const Vec& flat, int l) const {
  require(flat.size() == values_.size(), "flat parameter layout mismatch");
  const Index m = width_, h = half();
  const double* base = flat.data() + layer_offset(l);
  return {{base, m, h}, {base + m * h, m}, {base + m * h + m, m, h},
          {base + 2 * m * h + m, m}};
}

RevNetParams::MutableLayerView RevNetParams::layer_of(Vec& flat, int l) const {
  require(flat.size() == values_.size(), "flat parameter layout mismatch");
  const Index m = width_, h = half();
  double* base = flat.data() + layer_offset(l);
  return {{base, m, h}, {base + m * h, m}, {base + m * h + m, m, h},
          {base + 2 * m * h + m, m}};
}

Vec RevNetParams::pad(const Vec& x) const {
  if (x.size() == dim_) return x;
  require(padded() && x.size() == input_dim_,
          "input has dimension " + std::to_string(x.size()) +
              ", network expects " + std::to_string(input_dim_));
  Vec out = Vec::Zero(dim_);
  out.head(input_dim_) = x;
  return out;
}

Mat RevNetParams::pad_rows(const Mat& rows) const {
  if (rows.cols() == dim_) return rows;
  require(padded() && rows.cols() == input_dim_,
          "sample width does not match the network input dimension");
  Mat out = Mat::Zero(rows.rows(), dim_);
  out.leftCols(input_dim_) = rows;
  return out;
}

RevNetParams init_params(int n, int layers, int width, double tau,
                         std::uint64_t seed, double scale, bool pad_odd) {
  require(n >= 1, "dimension must be positive");
  require(scale >= 0.0, "initialization scale must be non-negative");
  if (n % 2 != 0 && !pad_odd) {
    throw ValidationError(
        "odd input dimension " + std::to_string(n) +
        " needs padding: the weight-tied Verlet update requires equal channel "
        "sizes (enable pad_odd)");
  }
  const int dim = n + (n % 2);
  if (width <= 0) width = dim / 2;
  RevNetParams params(dim, layers, width, tau, n);
  if (scale == 0.0) return params;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Vec values = Vec::Zero(params.size());
  for (int l = 0; l < layers; ++l) {
    auto layer = params.layer_of(values, l);
    for (Index i = 0; i < layer.K1.size(); ++i) layer.K1.data()[i] = normal(rng);
    for (Index i = 0; i < layer.K2.size(); ++i) layer.K2.data()[i] = normal(rng);
  }
  params.set_values(values);
  return params;
}

Mat forward(const RevNetParams& params, const Mat& xs) {
  check_rows(params, xs.rows(), "forward");
  const Index h = params.half();
  const double tau = params.tau();
  Mat u = xs.topRows(h), v = xs.bottomRows(h);
  for (int l = 0; l < params.num_layers(); ++l) {
    const auto layer = params.layer(l);
    u += tau * layer.K1.transpose() * tanh_of((layer.K1 * v).colwise() + layer.b1);
    v -= tau * layer.K2.transpose() * tanh_of((layer.K2 * u).colwise() + layer.b2);
  }
  Mat z(xs.rows(), xs.cols());
  z << u, v;
  return z;
}

Vec forward(const RevNetParams& params, const Vec& x) {
  return forward(params, Mat(x)).col(0);
}

Mat inverse(const RevNetParams& params, const Mat& zs) {
  check_rows(params, zs.rows(), "inverse");
  const Index h = params.half();
  const double tau = params.tau();
  Mat u = zs.topRows(h), v = zs.bottomRows(h);
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const auto layer = params.layer(l);
    v += tau * layer.K2.transpose() * tanh_of((layer.K2 * u).colwise() + layer.b2);
    u -= tau * layer.K1.transpose() * tanh_of((layer.K1 * v).colwise() + layer.b1);
  }
  Mat x(zs.rows(), zs.cols());
  x << u, v;
  return x;
}

Vec inverse(const RevNetParams& params, const Vec& z) {
  return inverse(params, Mat(z)).col(0);
}

Tape forward_with_tape(const RevNetParams& params, const Mat& xs,
                       const Mat& seeds, int block) {
  check_rows(params, xs.rows(), "forward_with_tape");
  require(block >= 0, "seed block size must be non-negative");
  if (block > 0) {
    check_rows(params, seeds.rows(), "forward_with_tape seeds");
    require(seeds.cols() == xs.cols() * block,
            "seed columns must equal samples x block");
  }
  const Index h = params.half();
  const double tau = params.tau();

  Tape tape;
  tape.version = params.version();
  tape.block = block;
  tape.x = xs;
  tape.layers.resize(params.num_layers());

  Mat u = xs.topRows(h), v = xs.bottomRows(h);
  Mat alpha, beta;
  if (block > 0) {
    alpha = seeds.topRows(h);
    beta = seeds.bottomRows(h);
  }
  // The inverse network's transpose Jacobian is applied layer by layer from
  // the x side: the K1 shear subtracts from beta, the K2 shear adds to alpha.
  for (int l = 0; l < params.num_layers(); ++l) {
    const auto layer = params.layer(l);
    LayerRecord& rec = tape.layers[l];

    rec.v_in = v;
    rec.t1 = tanh_of((layer.K1 * v).colwise() + layer.b1);
    u += tau * layer.K1.transpose() * rec.t1;
    if (block > 0) {
      rec.alpha_in = alpha;
      rec.p1 = layer.K1 * alpha;
      beta -= tau * layer.K1.transpose() * scale_blocks(dtanh_from(rec.t1), rec.p1, block);
    }

    rec.u_out = u;
    rec.t2 = tanh_of((layer.K2 * u).colwise() + layer.b2);
    v -= tau * layer.K2.transpose() * rec.t2;
    if (block > 0) {
      rec.beta_mid = beta;
      rec.p2 = layer.K2 * beta;
      alpha += tau * layer.K2.transpose() * scale_blocks(dtanh_from(rec.t2), rec.p2, block);
    }
  }
  tape.z.resize(xs.rows(), xs.cols());
  tape.z << u, v;
  if (block > 0) {
    tape.w.resize(seeds.rows(), seeds.cols());
    tape.w << alpha, beta;
  }
  return tape;
}

Tape forward_with_tape(const RevNetParams& params, const Vec& x) {
  return forward_with_tape(params, Mat(x), Mat(), 0);
}

void check_fresh(const RevNetParams& params, const Tape& tape) {
  if (tape.version != params.version()) {
    throw StaleTapeError("tape recorded at parameter version " +
                         std::to_string(tape.version) +
                         " but parameters are at version " +
                         std::to_string(params.version()));
  }
  require(static_cast<int>(tape.layers.size()) == params.num_layers(),
          "tape layer count does not match the network");
}

Mat replay(const RevNetParams& params, const Tape& tape) {
  check_fresh(params, tape);
  const Index h = params.half();
  const double tau = params.tau();
  Mat u = tape.x.topRows(h), v = tape.x.bottomRows(h);
  for (int l = 0; l < params.num_layers(); ++l) {
    const auto layer = params.layer(l);
    u += tau * layer.K1.transpose() * tape.layers[l].t1;
    v -= tau * layer.K2.transpose() * tape.layers[l].t2;
  }
  Mat z(tape.x.rows(), tape.x.cols());
  z << u, v;
  return z;
}

Vec backprop(const RevNetParams& params, const Tape& tape, const Mat& w_bar,
             const Mat* z_bar) {
  check_fresh(params, tape);
  const Index h = params.half();
  const Index samples = tape.x.cols();
  const int block = tape.block;
  const double tau = params.tau();

  Mat ub = Mat::Zero(h, samples), vb = Mat::Zero(h, samples);
  if (z_bar != nullptr) {
    check_rows(params, z_bar->rows(), "backprop z_bar");
    require(z_bar->cols() == samples, "z_bar column count mismatch");
    ub = z_bar->topRows(h);
    vb = z_bar->bottomRows(h);
  }
  Mat ab, bb;
  if (block > 0) {
    require(w_bar.rows() == tape.w.rows() && w_bar.cols() == tape.w.cols(),
            "w_bar shape must match the tape output");
    ab = w_bar.topRows(h);
    bb = w_bar.bottomRows(h);
  }

  Vec grad = Vec::Zero(params.size());
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const auto layer = params.layer(l);
    auto g = params.layer_of(grad, l);
    const LayerRecord& rec = tape.layers[l];
    const Mat s1 = dtanh_from(rec.t1);
    const Mat s2 = dtanh_from(rec.t2);

    Mat t2b = -tau * (layer.K2 * vb);
    g.K2.noalias() -= tau * rec.t2 * vb.transpose();
    Mat t1b;
    if (block > 0) {
      // alpha += tau K2^T q2,  q2 = s2 * p2,  p2 = K2 beta
      const Mat q2 = scale_blocks(s2, rec.p2, block);
      const Mat q2b = tau * (layer.K2 * ab);
      g.K2.noalias() += tau * q2 * ab.transpose();
      const Mat p2b = scale_blocks(s2, q2b, block);
      const Mat s2b = reduce_blocks(rec.p2, q2b, block);
      bb.noalias() += layer.K2.transpose() * p2b;
      g.K2.noalias() += p2b * rec.beta_mid.transpose();
      t2b.array() -= 2.0 * rec.t2.array() * s2b.array();
    }
    const Mat a2b = t2b.cwiseProduct(s2);
    g.K2.noalias() += a2b * rec.u_out.transpose();
    g.b2 += a2b.rowwise().sum();
    ub.noalias() += layer.K2.transpose() * a2b;

    t1b = tau * (layer.K1 * ub);
    g.K1.noalias() += tau * rec.t1 * ub.transpose();
    if (block > 0) {
      // beta -= tau K1^T q1,  q1 = s1 * p1,  p1 = K1 alpha
      const Mat q1 = scale_blocks(s1, rec.p1, block);
      const Mat q1b = -tau * (layer.K1 * bb);
      g.K1.noalias() -= tau * q1 * bb.transpose();
      const Mat p1b = scale_blocks(s1, q1b, block);
      const Mat s1b = reduce_blocks(rec.p1, q1b, block);
      ab.noalias() += layer.K1.transpose() * p1b;
      g.K1.noalias() += p1b * rec.alpha_in.transpose();
      t1b.array() -= 2.0 * rec.t1.array() * s1b.array();
    }
    const Mat a1b = t1b.cwiseProduct(s1);
    g.K1.noalias() += a1b * rec.v_in.transpose();
    g.b1 += a1b.rowwise().sum();
    vb.noalias() += layer.K1.transpose() * a1b;
  }
  return grad;
}

Vec inverse_vjp(const RevNetParams& params, const Vec& z, const Vec& w) {
  check_rows(params, z.size(), "inverse_vjp");
  check_rows(params, w.size(), "inverse_vjp cotangent");
  const Vec x = inverse(params, z);
  return forward_with_tape(params, Mat(x), Mat(w), 1).w.col(0);
}

Mat inverse_jacobian(const RevNetParams& params, const Vec& z) {
  check_rows(params, z.size(), "inverse_jacobian");
  const Vec x = inverse(params, z);
  const Mat identity = Mat::Identity(params.dim(), params.dim());
  // The sweep with identity seeds yields J_h^T.
  return forward_with_tape(params, Mat(x), identity, params.dim()).w.transpose();
}

Mat forward_jacobian(const RevNetParams& params, const Vec& x) {
  check_rows(params, x.size(), "forward_jacobian");
  const Index h = params.half();
  const double tau = params.tau();
  Vec u = x.head(h), v = x.tail(h);
  Mat du = Mat::Identity(params.dim(), params.dim()).topRows(h);
  Mat dv = Mat::Identity(params.dim(), params.dim()).bottomRows(h);
  for (int l = 0; l < params.num_layers(); ++l) {
    const auto layer = params.layer(l);
    const Vec t1 = (layer.K1 * v + layer.b1).array().tanh().matrix();
    const Vec s1 = (1.0 - t1.array().square()).matrix();
    u += tau * layer.K1.transpose() * t1;
    du += tau * layer.K1.transpose() * (s1.asDiagonal() * (layer.K1 * dv));
    const Vec t2 = (layer.K2 * u + layer.b2).array().tanh().matrix();
    const Vec s2 = (1.0 - t2.array().square()).matrix();
    v -= tau * layer.K2.transpose() * t2;
    dv -= tau * layer.K2.transpose() * (s2.asDiagonal() * (layer.K2 * du));
  }
  Mat jac(params.dim(), params.dim());
  jac << du, dv;
  return jac;
}

}  // namespace nll
