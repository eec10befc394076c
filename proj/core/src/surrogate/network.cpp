#include "msurr/surrogate/network.hpp"

#include <cmath>

#include <Eigen/QR>

#include "msurr/error.hpp"
#include "recurrent.hpp"

namespace msurr::surrogate {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

void check_input(const NetworkShape& shape, const MatrixXd& x, int steps) {
  if (steps < 1) throw ConfigError("sequence length must be at least 1");
  if (x.rows() != shape.input) {
    throw ConfigError("feature dimension mismatch: model expects " + std::to_string(shape.input) + ", got " +
                      std::to_string(x.rows()));
  }
  if (x.cols() == 0 || x.cols() % steps != 0) throw ConfigError("input columns must be a multiple of the steps");
}

void forward_layer_cached(CellType cell, const Network::ConstMap& w, const Network::ConstMap& u,
                          const Network::ConstMap& b, int steps, Network::LayerCache& c) {
  c.gates.noalias() = w * c.input;
  c.gates.colwise() += b.col(0);
  detail::forward_recurrent<double>(cell, u, steps, c);
}

// Adds one layer's parameter gradients; writes dL/d(layer input) when asked.
void backward_layer(CellType cell, const Network::ConstMap& w, const Network::ConstMap& u,
                    const Network::LayerCache& c, const MatrixXd& d_hidden, int steps, double* gw, double* gu,
                    double* gb, MatrixXd* d_input) {
  const Index g = u.rows();
  Eigen::Map<MatrixXd> grad_u(gu, g, u.cols());
  const MatrixXd dz = detail::backward_recurrent<double>(cell, u, c, d_hidden, steps, &grad_u);
  Eigen::Map<MatrixXd>(gw, g, w.cols()).noalias() += dz * c.input.transpose();
  Eigen::Map<Eigen::VectorXd>(gb, g) += dz.rowwise().sum();
  if (d_input) {
    d_input->noalias() = w.transpose() * dz;
    if (c.mask.size() > 0) d_input->array() *= c.mask.array();
  }
}

MatrixXd dropout_mask(Index rows, Index cols, double p, Rng& rng) {
  MatrixXd m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform() < p ? 0.0 : keep;
  }
  return m;
}

}  // namespace

std::string_view to_string(CellType cell) { return cell == CellType::Lstm ? "lstm" : "gru"; }

CellType cell_from_string(std::string_view name) {
  if (name == "lstm" || name == "LSTM") return CellType::Lstm;
  if (name == "gru" || name == "GRU") return CellType::Gru;
  throw ConfigError("unknown recurrent cell '" + std::string(name) + "' (expected lstm or gru)");
}

Index NetworkShape::parameter_count() const {
  const Index g = gates();
  return g * hidden1 * (input + hidden1 + 1) + g * hidden2 * (hidden1 + hidden2 + 1) +
         static_cast<Index>(output) * (hidden2 + 1);
}

void NetworkShape::validate() const {
  if (input < 1 || hidden1 < 1 || hidden2 < 1 || output < 1) throw ConfigError("network dimensions must be positive");
  constexpr int kMax = 1 << 16;
  if (input > kMax || hidden1 > kMax || hidden2 > kMax || output > kMax) throw ConfigError("network dimensions too large");
}

Network::Network(const NetworkShape& shape) : shape_(shape) {
  shape.validate();
  const Index g = shape.gates();
  auto& l = layout_;
  l.w1 = 0;
  l.u1 = l.w1 + g * shape.hidden1 * shape.input;
  l.b1 = l.u1 + g * shape.hidden1 * shape.hidden1;
  l.w2 = l.b1 + g * shape.hidden1;
  l.u2 = l.w2 + g * shape.hidden2 * shape.hidden1;
  l.b2 = l.u2 + g * shape.hidden2 * shape.hidden2;
  l.wd = l.b2 + g * shape.hidden2;
  l.bd = l.wd + static_cast<Index>(shape.output) * shape.hidden2;
  l.end = l.bd + shape.output;
  theta_ = Eigen::VectorXd::Zero(l.end);
}

Network Network::initialized(const NetworkShape& shape, std::uint64_t seed) {
  Network net(shape);
  Rng rng(seed);
  auto& theta = net.theta_;
  auto glorot = [&](Index offset, Index rows, Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (Index k = 0; k < rows * cols; ++k) theta(offset + k) = limit * (2.0 * rng.uniform() - 1.0);
  };
  auto orthogonal = [&](Index offset, Index gates, Index h) {
    Map u(theta.data() + offset, gates * h, h);
    for (Index gate = 0; gate < gates; ++gate) {
      MatrixXd a(h, h);
      for (Index j = 0; j < h; ++j) {
        for (Index i = 0; i < h; ++i) a(i, j) = rng.normal();
      }
      Eigen::HouseholderQR<MatrixXd> qr(a);
      MatrixXd q = qr.householderQ();
      const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (Index j = 0; j < h; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
      }
      u.middleRows(gate * h, h) = q;
    }
  };
  const Index g = shape.gates();
  const auto& l = net.layout_;
  glorot(l.w1, g * shape.hidden1, shape.input);
  orthogonal(l.u1, g, shape.hidden1);
  glorot(l.w2, g * shape.hidden2, shape.hidden1);
  orthogonal(l.u2, g, shape.hidden2);
  glorot(l.wd, shape.output, shape.hidden2);
  if (shape.cell == CellType::Lstm) {
    theta.segment(l.b1 + shape.hidden1, shape.hidden1).setOnes();
    theta.segment(l.b2 + shape.hidden2, shape.hidden2).setOnes();
  }
  return net;
}

MatrixXd Network::forward(const MatrixXd& x, int steps) const {
  check_input(shape_, x, steps);
  const MatrixXd h1 = detail::run_layer<double>(shape_.cell, w1(), u1(), b1(), x, steps);
  const MatrixXd h2 = detail::run_layer<double>(shape_.cell, w2(), u2(), b2(), h1, steps);
  return detail::run_head<double>(wd(), bd(), h2);
}

const MatrixXd& Network::forward(const MatrixXd& x, int steps, Cache& cache, double dropout, Rng* rng) const {
  check_input(shape_, x, steps);
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (dropout > 0.0 && !rng) throw ConfigError("dropout needs a random stream");
  cache.steps = steps;
  cache.batch = static_cast<int>(x.cols() / steps);

  auto prepare = [&](LayerCache& c, const MatrixXd& input) {
    if (dropout > 0.0) {
      c.mask = dropout_mask(input.rows(), input.cols(), dropout, *rng);
      c.input = input.cwiseProduct(c.mask);
    } else {
      c.mask.resize(0, 0);
      c.input = input;
    }
  };
  prepare(cache.layer1, x);
  forward_layer_cached(shape_.cell, w1(), u1(), b1(), steps, cache.layer1);
  prepare(cache.layer2, cache.layer1.hidden);
  forward_layer_cached(shape_.cell, w2(), u2(), b2(), steps, cache.layer2);
  cache.output = detail::run_head<double>(wd(), bd(), cache.layer2.hidden);
  return cache.output;
}

void Network::backward(const Cache& cache, const MatrixXd& d_output, Eigen::VectorXd& grad, MatrixXd* d_input) const {
  if (d_output.rows() != cache.output.rows() || d_output.cols() != cache.output.cols()) {
    throw ConfigError("upstream gradient shape does not match the cached output");
  }
  if (grad.size() != theta_.size()) throw ConfigError("gradient vector has the wrong size");
  const auto& l = layout_;
  const MatrixXd d_pre = (d_output.array() * cache.output.array() * (1.0 - cache.output.array())).matrix();
  Eigen::Map<MatrixXd>(grad.data() + l.wd, shape_.output, shape_.hidden2).noalias() +=
      d_pre * cache.layer2.hidden.transpose();
  grad.segment(l.bd, shape_.output) += d_pre.rowwise().sum();
  const MatrixXd d_h2 = wd().transpose() * d_pre;

  MatrixXd d_h1;
  backward_layer(shape_.cell, w2(), u2(), cache.layer2, d_h2, cache.steps, grad.data() + l.w2, grad.data() + l.u2,
                 grad.data() + l.b2, &d_h1);
  backward_layer(shape_.cell, w1(), u1(), cache.layer1, d_h1, cache.steps, grad.data() + l.w1, grad.data() + l.u1,
                 grad.data() + l.b1, d_input);
}

FloatNetwork::FloatNetwork(const Network& net)
    : shape_(net.shape()),
      w1_(net.w1().cast<float>()),
      u1_(net.u1().cast<float>()),
      w2_(net.w2().cast<float>()),
      u2_(net.u2().cast<float>()),
      wd_(net.wd().cast<float>()),
      b1_(net.b1().cast<float>()),
      b2_(net.b2().cast<float>()),
      bd_(net.bd().cast<float>()) {}

Eigen::MatrixXf FloatNetwork::forward(const Eigen::MatrixXf& x, int steps) const {
  if (steps < 1 || x.rows() != shape_.input || x.cols() == 0 || x.cols() % steps != 0) {
    throw ConfigError("input does not match the network");
  }
  const Eigen::MatrixXf h1 = detail::run_layer<float>(shape_.cell, w1_, u1_, b1_, x, steps);
  const Eigen::MatrixXf h2 = detail::run_layer<float>(shape_.cell, w2_, u2_, b2_, h1, steps);
  return detail::run_head<float>(wd_, bd_, h2);
}

}  // namespace msurr::surrogate
