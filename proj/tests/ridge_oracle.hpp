#pragma once

#include <algorithm>
#include <random>

#include "tailcast/nn/ridge.hpp"
#include "tailcast/nn/train.hpp"

namespace tailcast::testing {

struct RidgeOracleResult {
  double max_abs_diff = 0.0;
  double final_loss = 0.0;
};

/// Trains a single linear dense layer with the ridge penalty expressed in the
/// trainer's units (mean squared error + l2 * |W|^2, l2 = lambda / (n * P)) and
/// compares it with the closed-form solution on y = B x + c + noise.
inline RidgeOracleResult ridge_vs_sgd(std::uint64_t seed, double lambda) {
  constexpr Eigen::Index D = 5, P = 3, n = 400;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  nn::Matrix x(D, n), b(P, D), c(P, 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = g(rng);
  nn::Matrix y = (b * x).colwise() + c.col(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += 0.1 * g(rng);

  const nn::RidgeModel closed = nn::ridge_fit(x, y, lambda);
  nn::Mlp net({nn::Dense(D, P, nn::Activation::linear, 0.0, rng)});
  nn::AdamState adam;
  nn::TrainConfig cfg;
  cfg.seed = seed + 1;
  cfg.clip_norm = std::nullopt;
  cfg.l2 = lambda / static_cast<double>(n * P);
  // mini-batch warm-up, then full-batch steps to the fixed point
  cfg.batch_size = 32;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-2;
  nn::train(net, x, y, cfg, adam);
  cfg.batch_size = n;
  cfg.epochs = 3000;
  cfg.learning_rate = 1e-3;
  auto hist = nn::train(net, x, y, cfg, adam);

  const auto& layer = net.layers().front();
  RidgeOracleResult out;
  out.max_abs_diff = std::max((layer.weights - closed.coefficients).cwiseAbs().maxCoeff(),
                              (layer.bias - closed.intercept).cwiseAbs().maxCoeff());
  out.final_loss = hist.loss.back();
  return out;
}

}  // namespace tailcast::testing
