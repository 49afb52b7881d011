#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tailcast/common.hpp"

namespace tailcast::nn {

/// Batches are column-major: one sample per column.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A trainable tensor and its gradient accumulator.
struct ParamRef {
  Matrix* value;
  Matrix* grad;
  bool regularize = true;  // false for biases
};

enum class Activation { linear, relu, tanh, sigmoid, leaky_relu };

inline Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "leaky_relu") return Activation::leaky_relu;
  throw Error("unknown activation '" + s + "'");
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "?";
}

inline Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

inline Matrix activate(Activation a, const Matrix& z, double alpha) {
  switch (a) {
    case Activation::linear: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::sigmoid: return sigmoid(z);
    case Activation::leaky_relu: return (z.array() > 0.0).select(z, alpha * z);
  }
  return z;
}

/// dL/dz from dL/da, given the pre-activation z and output a.
inline Matrix activation_backward(Activation act, const Matrix& z, const Matrix& a, const Matrix& da, double alpha) {
  switch (act) {
    case Activation::linear: return da;
    case Activation::relu: return (z.array() > 0.0).select(da, 0.0);
    case Activation::tanh: return (da.array() * (1.0 - a.array().square())).matrix();
    case Activation::sigmoid: return (da.array() * a.array() * (1.0 - a.array())).matrix();
    case Activation::leaky_relu: return (z.array() > 0.0).select(da, alpha * da);
  }
  return da;
}

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
inline void init_uniform(Matrix& m, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
}

inline void check_finite(const Matrix& m, const std::string& where) {
  if (!m.allFinite()) throw Error(where + ": non-finite activation");
}

/// Fully connected layer: out = act(W * in + b).
class Dense {
 public:
  struct Cache {
    Matrix input;
    Matrix pre;
    Matrix out;
  };

  Dense(std::size_t in, std::size_t out, Activation act = Activation::linear, double alpha = 0.2)
      : weights(Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in))),
        bias(Matrix::Zero(static_cast<Eigen::Index>(out), 1)),
        activation(act),
        alpha(alpha) {
    if (in == 0 || out == 0) throw Error("dense layer: dimensions must be positive");
    zero_grad();
  }

  Dense(std::size_t in, std::size_t out, Activation act, double alpha, std::mt19937_64& rng)
      : Dense(in, out, act, alpha) {
    init_uniform(weights, in, rng);
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights.rows()); }

  std::string describe() const {
    return "dense " + std::to_string(input_dim()) + "->" + std::to_string(output_dim()) + " " + to_string(activation);
  }

  Matrix forward(const Matrix& x, Cache& cache) const {
    if (x.rows() != weights.cols())
      throw Error(describe() + ": expected input of " + std::to_string(weights.cols()) + " rows, got " +
                  std::to_string(x.rows()));
    cache.input = x;
    cache.pre = (weights * x).colwise() + bias.col(0);
    cache.out = activate(activation, cache.pre, alpha);
    return cache.out;
  }

  Matrix backward(const Matrix& dy, const Cache& cache) {
    const Matrix dz = activation_backward(activation, cache.pre, cache.out, dy, alpha);
    grad_weights.noalias() += dz * cache.input.transpose();
    grad_bias += dz.rowwise().sum();
    return weights.transpose() * dz;
  }

  void zero_grad() {
    grad_weights = Matrix::Zero(weights.rows(), weights.cols());
    grad_bias = Matrix::Zero(bias.rows(), 1);
  }

  void collect(std::vector<ParamRef>& out) {
    out.push_back({&weights, &grad_weights});
    out.push_back({&bias, &grad_bias, false});
  }

  Matrix weights;
  Matrix bias;
  Matrix grad_weights;
  Matrix grad_bias;
  Activation activation;
  double alpha;
};

/// Long short-term memory layer. Gate blocks are stacked i, f, g, o in the
/// 4H rows of the input (W), recurrent (U) and bias parameters. `activation`
/// is applied to the candidate g and to the cell state on output.
class Lstm {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // x_t
    std::vector<Matrix> gates;   // 4H x B, post-activation
    std::vector<Matrix> cells;   // c_t
    std::vector<Matrix> hidden;  // h_t
  };

  Lstm(std::size_t in, std::size_t hidden, Activation act = Activation::tanh)
      : input_weights(Matrix::Zero(4 * static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(in))),
        recurrent_weights(Matrix::Zero(4 * static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(hidden))),
        bias(Matrix::Zero(4 * static_cast<Eigen::Index>(hidden), 1)),
        activation(act) {
    if (in == 0 || hidden == 0) throw Error("lstm layer: dimensions must be positive");
    if (act != Activation::tanh && act != Activation::relu) throw Error("lstm layer: activation must be tanh or relu");
    zero_grad();
  }

  Lstm(std::size_t in, std::size_t hidden, Activation act, std::mt19937_64& rng) : Lstm(in, hidden, act) {
    init_uniform(input_weights, in, rng);
    init_uniform(recurrent_weights, hidden, rng);
    bias.block(static_cast<Eigen::Index>(hidden), 0, static_cast<Eigen::Index>(hidden), 1).setOnes();
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(input_weights.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(recurrent_weights.cols()); }
  std::size_t output_dim() const { return hidden_dim(); }

  std::string describe() const {
    return "lstm " + std::to_string(input_dim()) + "->" + std::to_string(hidden_dim()) + " " + to_string(activation);
  }

  /// Runs the whole sequence from zero initial state; returns h_t per step.
  std::vector<Matrix> forward(const std::vector<Matrix>& xs, Cache& cache) const {
    if (xs.empty()) throw Error(describe() + ": empty sequence");
    const Eigen::Index h = recurrent_weights.cols();
    const Eigen::Index batch = xs.front().cols();
    cache.inputs = xs;
    cache.gates.assign(xs.size(), Matrix());
    cache.cells.assign(xs.size(), Matrix());
    cache.hidden.assign(xs.size(), Matrix());
    Matrix h_prev = Matrix::Zero(h, batch);
    Matrix c_prev = Matrix::Zero(h, batch);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      if (xs[t].rows() != input_weights.cols() || xs[t].cols() != batch)
        throw Error(describe() + ": step " + std::to_string(t) + " has shape " + std::to_string(xs[t].rows()) + "x" +
                    std::to_string(xs[t].cols()) + ", expected " + std::to_string(input_weights.cols()) + "x" +
                    std::to_string(batch));
      Matrix z = input_weights * xs[t] + recurrent_weights * h_prev;
      z.colwise() += bias.col(0);
      Matrix gates(4 * h, batch);
      gates.topRows(2 * h) = sigmoid(z.topRows(2 * h));
      gates.middleRows(2 * h, h) = activate(activation, z.middleRows(2 * h, h), 0.0);
      gates.bottomRows(h) = sigmoid(z.bottomRows(h));
      Matrix c = gates.middleRows(h, h).cwiseProduct(c_prev) + gates.topRows(h).cwiseProduct(gates.middleRows(2 * h, h));
      Matrix hidden = gates.bottomRows(h).cwiseProduct(activate(activation, c, 0.0));
      cache.gates[t] = std::move(gates);
      cache.cells[t] = c;
      cache.hidden[t] = hidden;
      c_prev = std::move(c);
      h_prev = std::move(hidden);
    }
    return cache.hidden;
  }

  /// Backpropagation through time. `dh[t]` is dL/dh_t from layers above;
  /// returns dL/dx_t.
  std::vector<Matrix> backward(const std::vector<Matrix>& dh, const Cache& cache) {
    const std::size_t steps = cache.inputs.size();
    if (dh.size() != steps) throw Error(describe() + ": gradient sequence length mismatch");
    const Eigen::Index h = recurrent_weights.cols();
    const Eigen::Index batch = cache.inputs.front().cols();
    std::vector<Matrix> dx(steps);
    Matrix dh_next = Matrix::Zero(h, batch);
    Matrix dc_next = Matrix::Zero(h, batch);
    Matrix dz(4 * h, batch);
    for (std::size_t t = steps; t-- > 0;) {
      const Matrix& gates = cache.gates[t];
      const auto i = gates.topRows(h).array();
      const auto f = gates.middleRows(h, h).array();
      const auto g = gates.middleRows(2 * h, h).array();
      const auto o = gates.bottomRows(h).array();
      const Matrix& c = cache.cells[t];
      const Matrix act_c = activate(activation, c, 0.0);
      const Matrix c_prev = t > 0 ? cache.cells[t - 1] : Matrix::Zero(h, batch);
      const Matrix h_prev = t > 0 ? cache.hidden[t - 1] : Matrix::Zero(h, batch);

      const Matrix dh_t = dh[t] + dh_next;
      const Matrix dc = activation_backward(activation, c, act_c, dh_t.cwiseProduct(gates.bottomRows(h)), 0.0) + dc_next;
      const Matrix d_o = dh_t.cwiseProduct(act_c);
      const Matrix d_i = dc.cwiseProduct(gates.middleRows(2 * h, h));
      const Matrix d_g = dc.cwiseProduct(gates.topRows(h));
      const Matrix d_f = dc.cwiseProduct(c_prev);

      dz.topRows(h) = (d_i.array() * i * (1.0 - i)).matrix();
      dz.middleRows(h, h) = (d_f.array() * f * (1.0 - f)).matrix();
      if (activation == Activation::tanh) {
        dz.middleRows(2 * h, h) = (d_g.array() * (1.0 - g.square())).matrix();
      } else {
        dz.middleRows(2 * h, h) = (g > 0.0).select(d_g.array(), 0.0).matrix();
      }
      dz.bottomRows(h) = (d_o.array() * o * (1.0 - o)).matrix();

      grad_input_weights.noalias() += dz * cache.inputs[t].transpose();
      grad_recurrent_weights.noalias() += dz * h_prev.transpose();
      grad_bias += dz.rowwise().sum();
      dx[t] = input_weights.transpose() * dz;
      dh_next = recurrent_weights.transpose() * dz;
      dc_next = dc.cwiseProduct(gates.middleRows(h, h));
    }
    return dx;
  }

  void zero_grad() {
    grad_input_weights = Matrix::Zero(input_weights.rows(), input_weights.cols());
    grad_recurrent_weights = Matrix::Zero(recurrent_weights.rows(), recurrent_weights.cols());
    grad_bias = Matrix::Zero(bias.rows(), 1);
  }

  void collect(std::vector<ParamRef>& out) {
    out.push_back({&input_weights, &grad_input_weights});
    out.push_back({&recurrent_weights, &grad_recurrent_weights});
    out.push_back({&bias, &grad_bias, false});
  }

  Matrix input_weights;
  Matrix recurrent_weights;
  Matrix bias;
  Matrix grad_input_weights;
  Matrix grad_recurrent_weights;
  Matrix grad_bias;
  Activation activation;
};

/// Forward LSTM over the sequence and backward LSTM over its reversal. Step t
/// of the output is [h_fwd(t); h_bwd(t)] with the backward states re-aligned
/// to original time order, so the width is 2H.
class BiLstm {
 public:
  struct Cache {
    Lstm::Cache forward;
    Lstm::Cache backward;
  };

  BiLstm(Lstm fwd, Lstm bwd) : fwd_(std::move(fwd)), bwd_(std::move(bwd)) {
    if (fwd_.hidden_dim() != bwd_.hidden_dim() || fwd_.input_dim() != bwd_.input_dim())
      throw Error("bilstm: forward and backward layers differ in shape");
  }
  BiLstm(std::size_t in, std::size_t hidden, Activation act, std::mt19937_64& rng)
      : fwd_(in, hidden, act, rng), bwd_(in, hidden, act, rng) {}
  BiLstm(std::size_t in, std::size_t hidden, Activation act) : fwd_(in, hidden, act), bwd_(in, hidden, act) {}

  std::size_t input_dim() const { return fwd_.input_dim(); }
  std::size_t hidden_dim() const { return fwd_.hidden_dim(); }
  std::size_t output_dim() const { return 2 * fwd_.hidden_dim(); }
  std::string describe() const {
    return "bilstm " + std::to_string(input_dim()) + "->2x" + std::to_string(hidden_dim()) + " " +
           to_string(fwd_.activation);
  }

  Lstm& forward_layer() { return fwd_; }
  Lstm& backward_layer() { return bwd_; }
  const Lstm& forward_layer() const { return fwd_; }
  const Lstm& backward_layer() const { return bwd_; }

  std::vector<Matrix> forward(const std::vector<Matrix>& xs, Cache& cache) const {
    const std::size_t steps = xs.size();
    std::vector<Matrix> reversed(xs.rbegin(), xs.rend());
    auto hf = fwd_.forward(xs, cache.forward);
    auto hb = bwd_.forward(reversed, cache.backward);
    const Eigen::Index h = static_cast<Eigen::Index>(hidden_dim());
    std::vector<Matrix> out(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      out[t].resize(2 * h, hf[t].cols());
      out[t].topRows(h) = hf[t];
      out[t].bottomRows(h) = hb[steps - 1 - t];
    }
    return out;
  }

  std::vector<Matrix> backward(const std::vector<Matrix>& dout, const Cache& cache) {
    const std::size_t steps = dout.size();
    const Eigen::Index h = static_cast<Eigen::Index>(hidden_dim());
    std::vector<Matrix> dhf(steps), dhb(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      dhf[t] = dout[t].topRows(h);
      dhb[steps - 1 - t] = dout[t].bottomRows(h);
    }
    auto dxf = fwd_.backward(dhf, cache.forward);
    auto dxb = bwd_.backward(dhb, cache.backward);
    for (std::size_t t = 0; t < steps; ++t) dxf[t] += dxb[steps - 1 - t];
    return dxf;
  }

  void zero_grad() {
    fwd_.zero_grad();
    bwd_.zero_grad();
  }
  void collect(std::vector<ParamRef>& out) {
    fwd_.collect(out);
    bwd_.collect(out);
  }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

}  // namespace tailcast::nn
