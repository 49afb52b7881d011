#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tailcast/embedding.hpp"
#include "tailcast/nn/network.hpp"
#include "tailcast/nn/optim.hpp"

namespace tailcast::nn {

enum class LossKind { mse, bce };

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;
  std::optional<double> clip_norm = 5.0;
  /// Adds l2 * sum(W^2) over weight matrices (biases excluded) to the loss.
  double l2 = 0.0;

  void validate() const {
    if (epochs == 0 || batch_size == 0) throw Error("train config: epochs and batch size must be positive");
    if (!(learning_rate > 0.0)) throw Error("train config: learning rate must be positive");
    if (clip_norm && !(*clip_norm > 0.0)) throw Error("train config: clip norm must be positive");
    if (!(l2 >= 0.0)) throw Error("train config: l2 must be >= 0");
  }
};

struct TrainHistory {
  std::vector<double> loss;  // mean data loss per epoch, penalty excluded
};

/// Inputs as D x N and targets as P x N.
struct Batch {
  Matrix inputs;
  Matrix targets;
};

inline Batch to_matrices(const WindowDataset& ds) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  Batch b{Matrix(static_cast<Eigen::Index>(ds.window()), n), Matrix(static_cast<Eigen::Index>(ds.horizon()), n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& p = ds[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < p.x.size(); ++i) b.inputs(static_cast<Eigen::Index>(i), j) = p.x[i];
    for (std::size_t i = 0; i < p.y.size(); ++i) b.targets(static_cast<Eigen::Index>(i), j) = p.y[i];
  }
  return b;
}

inline LossValue evaluate_loss(LossKind kind, const Matrix& pred, const Matrix& target) {
  return kind == LossKind::mse ? mse_loss(pred, target) : bce_loss(pred, target);
}

/// Mini-batch Adam on (inputs, targets) columns. Sample order is reshuffled
/// each epoch from `cfg.seed`; the optimizer state persists in `adam`.
template <Trainable Net>
TrainHistory train(Net& net, const Matrix& inputs, const Matrix& targets, const TrainConfig& cfg, AdamState& adam) {
  cfg.validate();
  if (inputs.cols() == 0) throw Error("train: empty dataset");
  if (inputs.cols() != targets.cols()) throw Error("train: inputs and targets differ in sample count");
  adam.lr = cfg.learning_rate;
  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.seed);
  TrainHistory hist;
  typename Net::Cache cache;
  auto params = net.parameters();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const auto cols = static_cast<Eigen::Index>(stop - start);
      Matrix xb(inputs.rows(), cols), yb(targets.rows(), cols);
      for (Eigen::Index j = 0; j < cols; ++j) {
        xb.col(j) = inputs.col(order[start + static_cast<std::size_t>(j)]);
        yb.col(j) = targets.col(order[start + static_cast<std::size_t>(j)]);
      }
      net.zero_grad();
      const Matrix pred = net.forward(xb, cache);
      const LossValue loss = evaluate_loss(cfg.loss, pred, yb);
      if (!std::isfinite(loss.value))
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                    std::to_string(start));
      net.backward(loss.grad, cache);
      if (cfg.l2 > 0.0)
        for (const auto& p : params)
          if (p.regularize) *p.grad += (2.0 * cfg.l2) * *p.value;
      if (cfg.clip_norm) clip_global_norm(params, *cfg.clip_norm);
      adam_step(params, adam);
      net.mark_updated();
      total += loss.value * static_cast<double>(cols);
    }
    hist.loss.push_back(total / static_cast<double>(n));
  }
  return hist;
}

template <Trainable Net>
TrainHistory train(Net& net, const WindowDataset& ds, const TrainConfig& cfg) {
  if (ds.empty()) throw Error("train: empty dataset");
  AdamState adam;
  const Batch b = to_matrices(ds);
  const Matrix probe = net.forward(b.inputs.leftCols(1));
  if (static_cast<std::size_t>(probe.rows()) != ds.horizon())
    throw Error("train: network emits " + std::to_string(probe.rows()) + " outputs, dataset horizon is " +
                std::to_string(ds.horizon()));
  return train(net, b.inputs, b.targets, cfg, adam);
}

/// Forecasts for a D x B batch of windows.
template <Trainable Net>
Matrix predict(const Net& net, const Matrix& windows) {
  return net.forward(windows);
}

template <Trainable Net>
std::vector<double> predict(const Net& net, std::span<const double> window) {
  Matrix x(static_cast<Eigen::Index>(window.size()), 1);
  for (std::size_t i = 0; i < window.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = window[i];
  const Matrix y = net.forward(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

}  // namespace tailcast::nn
