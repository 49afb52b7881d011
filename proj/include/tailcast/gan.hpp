#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/embedding.hpp"
#include "tailcast/nn/network.hpp"
#include "tailcast/nn/optim.hpp"
#include "tailcast/nn/train.hpp"
#include "tailcast/relevance.hpp"
#include "tailcast/resampling.hpp"

namespace tailcast {

struct GanTrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double lr_generator = 2e-4;
  double lr_discriminator = 2e-4;
  double adam_beta1 = 0.5;  // 0.9 oscillates around point-mass targets
  std::size_t latent_dim = 32;
  std::uint64_t seed = 0;
  bool label_smoothing = false;  // real label 0.9 instead of 1
  std::size_t diversity_samples = 100;

  void validate() const {
    if (epochs == 0 || batch_size == 0 || latent_dim == 0)
      throw Error("gan config: epochs, batch size and latent dim must be positive");
    if (!(lr_generator > 0.0 && lr_discriminator > 0.0)) throw Error("gan config: learning rates must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw Error("gan config: adam beta1 must lie in [0,1)");
  }
};

/// Fully connected GAN over flattened (x ++ y) windows. The generator ends in a
/// sigmoid so samples live in [0,1]^(D+P), matching scaled data.
struct GanModel {
  nn::Mlp generator;
  nn::Mlp discriminator;
  std::size_t latent_dim = 0;
  std::size_t window = 0;
  std::size_t horizon = 0;
  nn::AdamState generator_adam;
  nn::AdamState discriminator_adam;

  std::size_t sample_dim() const { return window + horizon; }

  nn::Matrix latent_batch(std::size_t n, std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    nn::Matrix z(static_cast<Eigen::Index>(latent_dim), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = gauss(rng);
    return z;
  }

  /// Generator loss BCE(D(G(z)), 1). Leaves dL/dtheta in the generator's
  /// gradient buffers (zeroed first); discriminator gradients are discarded.
  double generator_gradients(const nn::Matrix& z) {
    generator.zero_grad();
    nn::Mlp::Cache gc, dc;
    const nn::Matrix fake = generator.forward(z, gc);
    const nn::Matrix p = discriminator.forward(fake, dc);
    const auto loss = nn::bce_loss(p, nn::Matrix::Ones(1, p.cols()));
    const nn::Matrix dfake = discriminator.backward(loss.grad, dc);
    discriminator.zero_grad();
    generator.backward(dfake, gc);
    return loss.value;
  }
};

inline GanModel build_1d_gan(std::size_t window, std::size_t horizon, std::size_t latent_dim, std::mt19937_64& rng,
                             const std::vector<std::size_t>& generator_hidden = {64, 128, 256},
                             const std::vector<std::size_t>& discriminator_hidden = {256, 128, 64}) {
  if (window + horizon < 1 || latent_dim < 1) throw Error("build_1d_gan: dimensions must be positive");
  using nn::Activation;
  using nn::Dense;
  const std::size_t dim = window + horizon;
  std::vector<Dense> g, d;
  std::size_t in = latent_dim;
  for (std::size_t h : generator_hidden) {
    g.emplace_back(in, h, Activation::leaky_relu, 0.2, rng);
    in = h;
  }
  g.emplace_back(in, dim, Activation::sigmoid, 0.0, rng);
  in = dim;
  for (std::size_t h : discriminator_hidden) {
    d.emplace_back(in, h, Activation::leaky_relu, 0.2, rng);
    in = h;
  }
  d.emplace_back(in, 1, Activation::sigmoid, 0.0, rng);
  return GanModel{nn::Mlp(std::move(g)), nn::Mlp(std::move(d)), latent_dim, window, horizon, {}, {}};
}

/// Mean Euclidean distance over all pairs of columns.
inline double mean_pairwise_distance(const nn::Matrix& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) sum += (samples.col(i) - samples.col(j)).norm();
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

struct GanCurves {
  std::vector<double> discriminator_loss;
  std::vector<double> generator_loss;
  std::vector<double> diversity;  // telemetry only
};

inline void write_csv(const std::string& path, const GanCurves& curves) {
  csv::Writer w(path);
  w.row({"epoch", "d_loss", "g_loss", "diversity"});
  for (std::size_t e = 0; e < curves.generator_loss.size(); ++e)
    w.row({std::to_string(e + 1), format_double(curves.discriminator_loss[e]), format_double(curves.generator_loss[e]),
           format_double(curves.diversity[e])});
}

/// Alternating updates per batch: one discriminator step on real (1) and
/// fake (0) samples, then one generator step pushing fresh fakes towards 1.
inline GanCurves train_gan(GanModel& gan, const WindowDataset& extremes, const GanTrainConfig& cfg) {
  cfg.validate();
  if (extremes.window() != gan.window || extremes.horizon() != gan.horizon)
    throw Error("train_gan: dataset shape does not match the GAN");
  if (extremes.size() < cfg.batch_size)
    throw Error("train_gan: " + std::to_string(extremes.size()) + " extremes is fewer than the batch size " +
                std::to_string(cfg.batch_size));
  const auto n = extremes.size();
  nn::Matrix real(static_cast<Eigen::Index>(gan.sample_dim()), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto v = flatten_pair(extremes[j]);
    for (std::size_t i = 0; i < v.size(); ++i) real(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i];
  }
  gan.generator_adam.lr = cfg.lr_generator;
  gan.discriminator_adam.lr = cfg.lr_discriminator;
  gan.generator_adam.beta1 = cfg.adam_beta1;
  gan.discriminator_adam.beta1 = cfg.adam_beta1;
  auto gparams = gan.generator.parameters();
  auto dparams = gan.discriminator.parameters();
  std::mt19937_64 rng(cfg.seed);
  std::mt19937_64 telemetry_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const double real_label = cfg.label_smoothing ? 0.9 : 1.0;

  GanCurves curves;
  nn::Mlp::Cache gc, dc;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double d_total = 0.0, g_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + cfg.batch_size <= n; start += cfg.batch_size) {
      const auto b = static_cast<Eigen::Index>(cfg.batch_size);
      nn::Matrix mixed(real.rows(), 2 * b);
      for (Eigen::Index j = 0; j < b; ++j) mixed.col(j) = real.col(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(j)]));
      mixed.rightCols(b) = gan.generator.forward(gan.latent_batch(cfg.batch_size, rng));
      nn::Matrix labels(1, 2 * b);
      labels.leftCols(b).setConstant(real_label);
      labels.rightCols(b).setZero();

      gan.discriminator.zero_grad();
      const nn::Matrix p = gan.discriminator.forward(mixed, dc);
      const auto d_loss = nn::bce_loss(p, labels);
      gan.discriminator.backward(d_loss.grad, dc);
      nn::adam_step(dparams, gan.discriminator_adam);
      gan.discriminator.mark_updated();

      const double g_loss = gan.generator_gradients(gan.latent_batch(cfg.batch_size, rng));
      nn::adam_step(gparams, gan.generator_adam);
      gan.generator.mark_updated();

      if (!std::isfinite(d_loss.value) || !std::isfinite(g_loss))
        throw Error("train_gan: non-finite loss at epoch " + std::to_string(epoch));
      d_total += d_loss.value;
      g_total += g_loss;
      ++batches;
    }
    curves.discriminator_loss.push_back(d_total / static_cast<double>(batches));
    curves.generator_loss.push_back(g_total / static_cast<double>(batches));
    const nn::Matrix probe = gan.generator.forward(gan.latent_batch(cfg.diversity_samples, telemetry_rng));
    curves.diversity.push_back(mean_pairwise_distance(probe));
  }
  return curves;
}

/// n generated windows from standard normal latents, marked as GAN output.
inline WindowDataset sample_synthetic(const GanModel& gan, std::size_t n, std::mt19937_64& rng,
                                      const std::string& source = "gan") {
  if (n == 0) throw Error("sample_synthetic: n must be positive");
  WindowDataset out(gan.window, gan.horizon, source);
  const nn::Matrix samples = gan.generator.forward(gan.latent_batch(n, rng));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    std::vector<double> v(samples.col(j).data(), samples.col(j).data() + samples.rows());
    WindowPair p = unflatten(v, gan.window, gan.horizon);
    p.origin = kSyntheticOrigin;
    p.provenance = {Source::gan, -1, -1};
    out.push_back(std::move(p));
  }
  return out;
}

struct GanResampleOptions {
  GanTrainConfig train;
  /// Keep only generated windows whose target relevance reaches the threshold.
  const RelevanceFunction* relevance_filter = nullptr;
  Aggregator aggregator = Aggregator::max;
};

/// GAN strategy: undersampled commons and extremes plus generated windows.
/// The batch size shrinks to the extreme count when there are fewer extremes.
inline Resampled gan_resample(const Partition& part, const ResampleStrategy& strat, const GanResampleOptions& opts,
                              GanCurves* curves_out = nullptr) {
  if (part.extremes.empty()) throw Error("gan_resample: no extremes");
  Resampled res = no_resample(part, strat);
  const std::size_t wanted = planned_synthetic(part, strat);
  if (wanted == 0) return res;
  GanTrainConfig cfg = opts.train;
  cfg.batch_size = std::min(cfg.batch_size, part.extremes.size());
  std::mt19937_64 rng(strat.rng_seed ^ 0xa5a5a5a5ull);
  GanModel gan = build_1d_gan(part.extremes.window(), part.extremes.horizon(), cfg.latent_dim, rng);
  cfg.seed = strat.rng_seed;
  GanCurves curves = train_gan(gan, part.extremes, cfg);
  if (curves_out) *curves_out = std::move(curves);
  const WindowDataset synth = sample_synthetic(gan, wanted, rng);
  for (const auto& p : synth) {
    if (opts.relevance_filter && window_relevance(*opts.relevance_filter, p.y, opts.aggregator) < part.threshold)
      continue;
    res.dataset.push_back(p);
    ++res.synthetic;
  }
  return res;
}

}  // namespace tailcast
