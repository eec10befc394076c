#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "msurr/rng.hpp"

namespace msurr::surrogate {

enum class CellType { Lstm, Gru };

std::string_view to_string(CellType cell);
CellType cell_from_string(std::string_view name);

/// Activations of one recurrent layer over a time-major batch.
template <class S>
struct RecurrentState {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix gates;      // input projection on entry to the recurrence, activations after
  Matrix cell;       // LSTM cell state
  Matrix cell_tanh;
  Matrix rec_n;      // GRU recurrent candidate term U_n h_{t-1}
  Matrix hidden;
};

/// Two stacked recurrent layers and a dense sigmoid head.
struct NetworkShape {
  int input = 371;
  int hidden1 = 383;
  int hidden2 = 365;
  int output = 365;
  CellType cell = CellType::Lstm;

  int gates() const { return cell == CellType::Lstm ? 4 : 3; }
  Eigen::Index parameter_count() const;
  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

/// Sequence batches are stored time-major in one matrix: column
/// t * batch + b holds step t of sequence b.
///
/// LSTM (gate order i, f, g, o):
///   a = W x_t + U h_{t-1} + b
///   i, f, o = σ(a_i, a_f, a_o),  g = tanh(a_g)
///   c_t = f ⊙ c_{t-1} + i ⊙ g,   h_t = o ⊙ tanh(c_t)
/// GRU (gate order z, r, n; reset applied after the recurrent product):
///   a = W x_t + b,  r_t = U h_{t-1}
///   z = σ(a_z + r_z),  r = σ(a_r + r_r),  n = tanh(a_n + r ⊙ r_n)
///   h_t = (1 - z) ⊙ n + z ⊙ h_{t-1}
/// Head: y_t = σ(W_d h2_t + b_d). Initial states are zero.
class Network {
 public:
  Network() = default;
  /// All parameters zero.
  explicit Network(const NetworkShape& shape);

  /// Orthogonal recurrent blocks (per gate), Glorot-uniform input and head
  /// weights, zero biases except an LSTM forget-gate bias of 1.
  static Network initialized(const NetworkShape& shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }

  struct Layout {
    Eigen::Index w1, u1, b1, w2, u2, b2, wd, bd, end;
  };
  const Layout& layout() const { return layout_; }

  using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
  using Map = Eigen::Map<Eigen::MatrixXd>;
  ConstMap w1() const { return block(layout_.w1, shape_.gates() * shape_.hidden1, shape_.input); }
  ConstMap u1() const { return block(layout_.u1, shape_.gates() * shape_.hidden1, shape_.hidden1); }
  ConstMap b1() const { return block(layout_.b1, shape_.gates() * shape_.hidden1, 1); }
  ConstMap w2() const { return block(layout_.w2, shape_.gates() * shape_.hidden2, shape_.hidden1); }
  ConstMap u2() const { return block(layout_.u2, shape_.gates() * shape_.hidden2, shape_.hidden2); }
  ConstMap b2() const { return block(layout_.b2, shape_.gates() * shape_.hidden2, 1); }
  ConstMap wd() const { return block(layout_.wd, shape_.output, shape_.hidden2); }
  ConstMap bd() const { return block(layout_.bd, shape_.output, 1); }

  struct LayerCache : RecurrentState<double> {
    Eigen::MatrixXd input;  // layer input after dropout
    Eigen::MatrixXd mask;   // dropout mask (scaled), empty without dropout
  };
  struct Cache {
    int steps = 0;
    int batch = 0;
    LayerCache layer1, layer2;
    Eigen::MatrixXd output;
  };

  /// Inference pass: output x (steps * batch).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, int steps) const;

  /// Training pass keeping what backward() needs. With dropout > 0 each
  /// layer's input is masked (inverted dropout) using `rng`.
  const Eigen::MatrixXd& forward(const Eigen::MatrixXd& x, int steps, Cache& cache, double dropout = 0.0,
                                 Rng* rng = nullptr) const;

  /// Reverse-mode pass for upstream gradient dL/dy (same layout as the
  /// output). Adds parameter gradients into `grad` and, when requested,
  /// writes dL/dx into `d_input`.
  void backward(const Cache& cache, const Eigen::MatrixXd& d_output, Eigen::VectorXd& grad,
                Eigen::MatrixXd* d_input = nullptr) const;

 private:
  ConstMap block(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) const {
    return ConstMap(theta_.data() + offset, rows, cols);
  }

  NetworkShape shape_;
  Layout layout_{};
  Eigen::VectorXd theta_;
};

/// Network weights converted to single precision for fast inference; same
/// recurrences as Network::forward.
class FloatNetwork {
 public:
  FloatNetwork() = default;
  explicit FloatNetwork(const Network& net);

  const NetworkShape& shape() const { return shape_; }
  Eigen::MatrixXf forward(const Eigen::MatrixXf& x, int steps) const;

 private:
  NetworkShape shape_;
  Eigen::MatrixXf w1_, u1_, w2_, u2_, wd_;
  Eigen::VectorXf b1_, b2_, bd_;
};

}  // namespace msurr::surrogate
