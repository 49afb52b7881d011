#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "tailcast/embedding.hpp"
#include "tailcast/experiment/config.hpp"
#include "tailcast/gan.hpp"
#include "tailcast/metrics.hpp"
#include "tailcast/nn/network.hpp"
#include "tailcast/nn/ridge.hpp"
#include "tailcast/nn/train.hpp"
#include "tailcast/relevance.hpp"
#include "tailcast/resampling.hpp"
#include "tailcast/series.hpp"

namespace tailcast::experiment {

/// One dataset after cleaning, scaling, splitting and embedding.
struct PreparedData {
  std::string name;
  Scaler scaler;
  TimeSeries scaled;
  TimeSeries train;
  TimeSeries test;
  WindowDataset train_windows;
  WindowDataset test_windows;
  RelevanceFunction relevance;
};

/// The scaler and the relevance function are fitted on the full cleaned series
/// (ScalerFit::full) or on the training part only (ScalerFit::train).
inline PreparedData prepare(const TimeSeries& raw, const std::string& name, std::size_t window, std::size_t horizon,
                            double train_fraction, ScalerFit fit, const RelevanceSpec& rel) {
  const TimeSeries clean = drop_missing(raw);
  const auto raw_split = split(clean, train_fraction);
  const Scaler scaler = Scaler::fit(fit == ScalerFit::full ? clean : raw_split.train);
  TimeSeries scaled = scaler.apply(clean);
  auto parts = split(scaled, train_fraction);
  RelevanceFunction relevance = rel.build(fit == ScalerFit::full ? scaled : parts.train);
  WindowDataset train_windows = embed(parts.train, window, horizon);
  WindowDataset test_windows = embed(parts.test, window, horizon);
  return PreparedData{name,
                      scaler,
                      std::move(scaled),
                      std::move(parts.train),
                      std::move(parts.test),
                      std::move(train_windows),
                      std::move(test_windows),
                      std::move(relevance)};
}

inline PreparedData prepare(const DatasetSpec& spec, const ExperimentConfig& cfg) {
  return prepare(spec.load(), spec.name, cfg.window, cfg.horizon, cfg.train_fraction, cfg.scaler_fit, cfg.relevance);
}

/// A trained forecaster of any supported family.
class Forecaster {
 public:
  explicit Forecaster(nn::RidgeModel m) : model_(std::move(m)) {}
  explicit Forecaster(nn::RecurrentNet m) : model_(std::move(m)) {}

  /// n x P forecasts for every window of `ds`.
  Eigen::MatrixXd predict(const WindowDataset& ds) const {
    const nn::Batch b = nn::to_matrices(ds);
    nn::Matrix out = std::visit(
        [&](const auto& m) -> nn::Matrix {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, nn::RidgeModel>) {
            return m.predict(b.inputs);
          } else {
            return m.forward(b.inputs);
          }
        },
        model_);
    return out.transpose();
  }

  const std::variant<nn::RidgeModel, nn::RecurrentNet>& model() const { return model_; }

 private:
  std::variant<nn::RidgeModel, nn::RecurrentNet> model_;
};

struct FitResult {
  Forecaster forecaster;
  std::vector<double> loss_history;
};

/// Builds and trains one forecaster. `seed` drives initialisation and shuffling.
inline FitResult fit_forecaster(ModelKind kind, const WindowDataset& train, const ModelSettings& settings,
                                std::uint64_t seed) {
  if (kind == ModelKind::ridge) return {Forecaster(nn::ridge_ar_fit(train, settings.ridge_lambda)), {}};
  std::mt19937_64 init(seed);
  nn::RecurrentNet net = kind == ModelKind::lstm
                             ? nn::make_lstm_forecaster(train.horizon(), settings.lstm_units, init)
                             : nn::make_bdlstm_forecaster(train.horizon(), settings.bdlstm_hidden, init,
                                                          settings.bdlstm_depth);
  nn::TrainConfig tc = settings.train;
  tc.seed = seed + 1;
  auto hist = nn::train(net, train, tc);
  return {Forecaster(std::move(net)), std::move(hist.loss)};
}

struct TrainingSet {
  WindowDataset data;
  Partition partition;
  std::size_t synthetic = 0;
  std::size_t singleton_fallbacks = 0;
};

/// Partitions the training windows at `threshold` and applies the strategy.
/// "none" trains on every window regardless of the threshold.
inline TrainingSet build_training_set(const PreparedData& data, double threshold, const ResampleStrategy& strategy,
                                      const RelevanceSpec& rel, const GanSettings& gan) {
  Partition part = partition(data.train_windows, data.relevance, threshold, rel.aggregator);
  Resampled res = [&] {
    switch (strategy.kind) {
      case StrategyKind::none: {
        Resampled r{data.train_windows};
        r.extremes = part.extremes.size();
        r.kept_commons = part.commons.size();
        return r;
      }
      case StrategyKind::replicate: return replicate_oversample(part, strategy);
      case StrategyKind::smoter: return smoter(part, strategy);
      case StrategyKind::smoter_bin: return smoter_bin(part, strategy);
      case StrategyKind::gan: {
        GanResampleOptions opts;
        opts.train = gan.train;
        opts.relevance_filter = gan.relevance_filter ? &data.relevance : nullptr;
        opts.aggregator = rel.aggregator;
        return gan_resample(part, strategy, opts);
      }
    }
    throw Error("unhandled strategy");
  }();
  return TrainingSet{std::move(res.dataset), std::move(part), res.synthetic, res.singleton_fallbacks};
}

}  // namespace tailcast::experiment
