#pragma once

#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "tailcast/nn/layers.hpp"

namespace tailcast::nn {

/// Networks bump a generation counter whenever their parameters change so a
/// cache recorded before an update cannot feed backward().
class Versioned {
 public:
  std::uint64_t generation() const { return generation_; }
  void mark_updated() { ++generation_; }

 protected:
  struct Stamp {
    const void* owner = nullptr;
    std::uint64_t generation = 0;
  };
  Stamp stamp() const { return {this, generation_}; }
  void check_stamp(const Stamp& s, const char* what) const {
    if (s.owner != this || s.generation != generation_)
      throw Error(std::string(what) + ": stale cache (parameters changed since forward)");
  }

 private:
  std::uint64_t generation_ = 0;
};

/// Stack of dense layers mapping a vector to a vector.
class Mlp : public Versioned {
 public:
  struct Cache {
    std::vector<Dense::Cache> layers;
    Stamp stamp;
  };

  Mlp() = default;
  explicit Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error("mlp: needs at least one layer");
    for (std::size_t k = 1; k < layers_.size(); ++k)
      if (layers_[k].input_dim() != layers_[k - 1].output_dim())
        throw Error("mlp: layer " + std::to_string(k) + " (" + layers_[k].describe() + ") does not accept " +
                    std::to_string(layers_[k - 1].output_dim()) + " inputs");
  }

  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.back().output_dim(); }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& layers() { return layers_; }

  Matrix forward(const Matrix& x, Cache& cache) const {
    cache.layers.resize(layers_.size());
    cache.stamp = stamp();
    Matrix h = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      try {
        h = layers_[k].forward(h, cache.layers[k]);
      } catch (const Error& e) {
        throw Error("layer " + std::to_string(k) + " (" + e.what() + ")");
      }
      check_finite(h, "layer " + std::to_string(k) + " (" + layers_[k].describe() + ")");
    }
    return h;
  }

  Matrix forward(const Matrix& x) const {
    Cache cache;
    return forward(x, cache);
  }

  Matrix backward(const Matrix& dy, const Cache& cache) {
    check_stamp(cache.stamp, "mlp backward");
    Matrix d = dy;
    for (std::size_t k = layers_.size(); k-- > 0;) d = layers_[k].backward(d, cache.layers[k]);
    return d;
  }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    for (auto& l : layers_) l.collect(out);
    return out;
  }

  void zero_grad() {
    for (auto& l : layers_) l.zero_grad();
  }

 private:
  std::vector<Dense> layers_;
};

using RecurrentLayer = std::variant<Lstm, BiLstm>;

/// Recurrent stack over a univariate window (row t of the input batch is
/// time step t, oldest first) with a dense head on the final summary. The
/// summary of an LSTM is its last hidden state; of a BiLSTM, the last forward
/// state next to the backward state after it has consumed the whole window.
class RecurrentNet : public Versioned {
 public:
  struct Cache {
    std::vector<std::variant<Lstm::Cache, BiLstm::Cache>> layers;
    Dense::Cache head;
    std::size_t steps = 0;
    Stamp stamp;
  };

  RecurrentNet(std::vector<RecurrentLayer> layers, Dense head) : layers_(std::move(layers)), head_(std::move(head)) {
    if (layers_.empty()) throw Error("recurrent net: needs at least one recurrent layer");
    if (layer_input(0) != 1) throw Error("recurrent net: first layer must take 1 feature per step");
    for (std::size_t k = 1; k < layers_.size(); ++k)
      if (layer_input(k) != layer_output(k - 1))
        throw Error("recurrent net: layer " + std::to_string(k) + " input width mismatch");
    if (head_.input_dim() != layer_output(layers_.size() - 1))
      throw Error("recurrent net: head input width mismatch");
  }

  std::size_t output_dim() const { return head_.output_dim(); }
  const std::vector<RecurrentLayer>& layers() const { return layers_; }
  std::vector<RecurrentLayer>& layers() { return layers_; }
  const Dense& head() const { return head_; }
  Dense& head() { return head_; }

  Matrix forward(const Matrix& x, Cache& cache) const {
    const auto steps = static_cast<std::size_t>(x.rows());
    if (steps == 0) throw Error("recurrent net: empty window");
    cache.stamp = stamp();
    cache.steps = steps;
    cache.layers.clear();
    std::vector<Matrix> seq(steps);
    for (std::size_t t = 0; t < steps; ++t) seq[t] = x.row(static_cast<Eigen::Index>(t));
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      seq = std::visit(
          [&](const auto& layer) {
            using L = std::decay_t<decltype(layer)>;
            cache.layers.emplace_back(typename L::Cache{});
            auto& c = std::get<typename L::Cache>(cache.layers.back());
            try {
              return layer.forward(seq, c);
            } catch (const Error& e) {
              throw Error("layer " + std::to_string(k) + " (" + e.what() + ")");
            }
          },
          layers_[k]);
      for (const auto& m : seq) check_finite(m, "layer " + std::to_string(k) + " (" + describe(k) + ")");
    }
    Matrix summary = summarize(seq, layers_.back());
    Matrix out = head_.forward(summary, cache.head);
    check_finite(out, "head (" + head_.describe() + ")");
    return out;
  }

  Matrix forward(const Matrix& x) const {
    Cache cache;
    return forward(x, cache);
  }

  /// Returns dL/dx with the same D x B shape as the input.
  Matrix backward(const Matrix& dy, const Cache& cache) {
    check_stamp(cache.stamp, "recurrent backward");
    const std::size_t steps = cache.steps;
    Matrix dsummary = head_.backward(dy, cache.head);
    const Eigen::Index batch = dy.cols();

    std::vector<Matrix> dseq(steps);
    const auto width = static_cast<Eigen::Index>(layer_output(layers_.size() - 1));
    for (auto& m : dseq) m = Matrix::Zero(width, batch);
    if (std::holds_alternative<Lstm>(layers_.back())) {
      dseq[steps - 1] = dsummary;
    } else {
      const Eigen::Index h = width / 2;
      dseq[steps - 1].topRows(h) = dsummary.topRows(h);
      dseq[0].bottomRows(h) = dsummary.bottomRows(h);
    }
    for (std::size_t k = layers_.size(); k-- > 0;) {
      dseq = std::visit(
          [&](auto& layer) {
            using L = std::decay_t<decltype(layer)>;
            return layer.backward(dseq, std::get<typename L::Cache>(cache.layers[k]));
          },
          layers_[k]);
    }
    Matrix dx(static_cast<Eigen::Index>(steps), batch);
    for (std::size_t t = 0; t < steps; ++t) dx.row(static_cast<Eigen::Index>(t)) = dseq[t];
    return dx;
  }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    for (auto& l : layers_) std::visit([&](auto& layer) { layer.collect(out); }, l);
    head_.collect(out);
    return out;
  }

  void zero_grad() {
    for (auto& l : layers_) std::visit([](auto& layer) { layer.zero_grad(); }, l);
    head_.zero_grad();
  }

  std::string describe(std::size_t k) const {
    return std::visit([](const auto& layer) { return layer.describe(); }, layers_[k]);
  }

 private:
  std::size_t layer_input(std::size_t k) const {
    return std::visit([](const auto& l) { return l.input_dim(); }, layers_[k]);
  }
  std::size_t layer_output(std::size_t k) const {
    return std::visit([](const auto& l) { return l.output_dim(); }, layers_[k]);
  }

  static Matrix summarize(const std::vector<Matrix>& seq, const RecurrentLayer& last) {
    if (std::holds_alternative<Lstm>(last)) return seq.back();
    const Eigen::Index h = seq.front().rows() / 2;
    Matrix s(2 * h, seq.front().cols());
    s.topRows(h) = seq.back().topRows(h);
    s.bottomRows(h) = seq.front().bottomRows(h);
    return s;
  }

  std::vector<RecurrentLayer> layers_;
  Dense head_;
};

/// Anything the generic trainer and optimizer can drive.
template <typename Net>
concept Trainable = requires(Net& net, const Net& cnet, const Matrix& m, typename Net::Cache& cache) {
  { cnet.forward(m, cache) } -> std::same_as<Matrix>;
  { net.backward(m, cache) } -> std::same_as<Matrix>;
  { net.parameters() } -> std::same_as<std::vector<ParamRef>>;
  net.zero_grad();
  net.mark_updated();
};

template <Trainable Net>
std::size_t parameter_count(Net& net) {
  std::size_t n = 0;
  for (const auto& p : net.parameters()) n += static_cast<std::size_t>(p.value->size());
  return n;
}

/// D -> LSTM(units, tanh) -> dense(P): the unidirectional forecaster.
inline RecurrentNet make_lstm_forecaster(std::size_t horizon, std::size_t units, std::mt19937_64& rng) {
  std::vector<RecurrentLayer> layers;
  layers.emplace_back(Lstm(1, units, Activation::tanh, rng));
  Dense head(units, horizon, Activation::linear, 0.0, rng);
  return RecurrentNet(std::move(layers), std::move(head));
}

/// D -> BiLSTM(hidden, relu) -> BiLSTM(hidden, relu) -> dense(P).
inline RecurrentNet make_bdlstm_forecaster(std::size_t horizon, std::size_t hidden, std::mt19937_64& rng,
                                           std::size_t depth = 2) {
  std::vector<RecurrentLayer> layers;
  std::size_t in = 1;
  for (std::size_t k = 0; k < depth; ++k) {
    layers.emplace_back(BiLstm(in, hidden, Activation::relu, rng));
    in = 2 * hidden;
  }
  Dense head(in, horizon, Activation::linear, 0.0, rng);
  return RecurrentNet(std::move(layers), std::move(head));
}

}  // namespace tailcast::nn
