#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/gan.hpp"
#include "tailcast/generators.hpp"
#include "tailcast/nn/train.hpp"
#include "tailcast/relevance.hpp"
#include "tailcast/resampling.hpp"
#include "tailcast/series.hpp"

namespace tailcast::experiment {

using json = nlohmann::json;

/// A dataset is either a CSV column or a generated series.
struct DatasetSpec {
  std::string name;
  std::string kind = "csv";  // csv | lorenz | sine
  std::string path;
  std::string column = "0";
  std::size_t n = 2000;
  double dt = 0.01;
  LorenzState initial{1.0, 1.0, 1.0};
  double period = 50.0;
  double amplitude = 1.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  SpikeParams spikes;

  TimeSeries load() const {
    if (kind == "csv") return load_csv(path, column);
    if (kind == "lorenz") return gen_lorenz(n, dt, initial);
    if (kind == "sine") return gen_sine(n, period, amplitude, noise_sd, seed, spikes);
    throw Error("dataset '" + name + "': unknown kind '" + kind + "'");
  }

  json to_json() const {
    json j{{"name", name}, {"kind", kind}};
    if (kind == "csv") {
      j["path"] = path;
      j["column"] = column;
    } else if (kind == "lorenz") {
      j.update({{"n", n}, {"dt", dt}, {"initial", initial}});
    } else {
      j.update({{"n", n},
                {"period", period},
                {"amplitude", amplitude},
                {"noise_sd", noise_sd},
                {"seed", seed},
                {"spike_rate", spikes.rate},
                {"spike_height", spikes.height},
                {"spike_decay", spikes.decay}});
    }
    return j;
  }
};

enum class ModelKind { ridge, lstm, bdlstm };

inline ModelKind parse_model(const std::string& s) {
  if (s == "ridge") return ModelKind::ridge;
  if (s == "lstm") return ModelKind::lstm;
  if (s == "bdlstm") return ModelKind::bdlstm;
  throw Error("unknown model '" + s + "' (expected ridge, lstm or bdlstm)");
}

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::ridge: return "ridge";
    case ModelKind::lstm: return "lstm";
    case ModelKind::bdlstm: return "bdlstm";
  }
  return "?";
}

struct RelevanceSpec {
  Tail tail = Tail::upper;
  double iqr_multiplier = 1.5;
  Aggregator aggregator = Aggregator::max;
  std::optional<std::vector<ControlPoint>> control_points;

  RelevanceFunction build(const TimeSeries& scaled) const {
    if (control_points) return RelevanceFunction(ControlPoints(*control_points));
    return RelevanceFunction(boxplot_control_points(scaled, tail, iqr_multiplier));
  }

  json to_json() const {
    json j{{"tail", to_string(tail)}, {"iqr_multiplier", iqr_multiplier}, {"aggregator", to_string(aggregator)}};
    if (control_points) {
      json pts = json::array();
      for (const auto& p : *control_points) pts.push_back({p.value, p.relevance});
      j["control_points"] = pts;
    }
    return j;
  }
};

struct ModelSettings {
  std::size_t lstm_units = 64;
  std::size_t bdlstm_hidden = 32;
  std::size_t bdlstm_depth = 2;
  double ridge_lambda = 1e-3;
  nn::TrainConfig train;

  json to_json() const {
    return json{{"lstm_units", lstm_units},
                {"bdlstm_hidden", bdlstm_hidden},
                {"bdlstm_depth", bdlstm_depth},
                {"ridge_lambda", ridge_lambda},
                {"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"learning_rate", train.learning_rate},
                {"clip_norm", train.clip_norm ? json(*train.clip_norm) : json(nullptr)}};
  }
};

struct GanSettings {
  GanTrainConfig train;
  bool relevance_filter = false;

  json to_json() const {
    return json{{"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"lr_generator", train.lr_generator},
                {"lr_discriminator", train.lr_discriminator},
                {"adam_beta1", train.adam_beta1},
                {"latent_dim", train.latent_dim},
                {"label_smoothing", train.label_smoothing},
                {"relevance_filter", relevance_filter}};
  }
};

enum class ScalerFit { full, train };

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::size_t window = 5;
  std::size_t horizon = 5;
  std::size_t delay = 1;
  double train_fraction = 0.7;
  ScalerFit scaler_fit = ScalerFit::full;
  RelevanceSpec relevance;
  std::vector<double> thresholds{0.7, 0.8, 0.9};
  std::vector<ResampleStrategy> strategies;
  std::vector<ModelKind> models;
  ModelSettings model;
  GanSettings gan;
  std::size_t repeats = 10;
  std::uint64_t base_seed = 42;
  std::string output_dir = "results";
  std::size_t workers = 1;

  void validate() const {
    if (datasets.empty()) throw Error("config: no datasets");
    if (strategies.empty()) throw Error("config: no strategies");
    if (models.empty()) throw Error("config: no models");
    if (thresholds.empty()) throw Error("config: no thresholds");
    if (repeats < 1) throw Error("config: repeats must be >= 1");
    if (window < 1 || horizon < 1) throw Error("config: window and horizon must be positive");
    if (delay != 1) throw Error("config: only delay = 1 is supported");
    if (workers < 1) throw Error("config: workers must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("config: train_fraction must lie in (0,1)");
    for (double t : thresholds)
      if (!(t >= 0.0 && t <= 1.0)) throw Error("config: thresholds must lie in [0,1]");
    for (const auto& s : strategies) s.validate();
    for (std::size_t i = 0; i < datasets.size(); ++i)
      for (std::size_t j = i + 1; j < datasets.size(); ++j)
        if (datasets[i].name == datasets[j].name) throw Error("config: duplicate dataset name '" + datasets[i].name + "'");
    model.train.validate();
    gan.train.validate();
  }
};

namespace detail {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw Error("config: unknown key '" + k + "' in " + where);
  }
}

inline DatasetSpec parse_dataset(const json& j) {
  DatasetSpec d;
  if (j.is_string()) {
    d.kind = "csv";
    d.path = j.get<std::string>();
    d.name = d.path;
    return d;
  }
  check_keys(j,
             {"name", "csv", "column", "generator", "n", "dt", "initial", "period", "amplitude", "noise_sd", "seed",
              "spike_rate", "spike_height", "spike_decay"},
             "dataset");
  if (j.contains("csv")) {
    d.kind = "csv";
    d.path = j.at("csv").get<std::string>();
    if (j.contains("column")) {
      const auto& c = j.at("column");
      d.column = c.is_number() ? std::to_string(c.get<long long>()) : c.get<std::string>();
    }
  } else if (j.contains("generator")) {
    d.kind = j.at("generator").get<std::string>();
    if (d.kind != "lorenz" && d.kind != "sine") throw Error("config: unknown generator '" + d.kind + "'");
  } else {
    throw Error("config: dataset needs either 'csv' or 'generator'");
  }
  read(j, "n", d.n);
  read(j, "dt", d.dt);
  if (j.contains("initial")) {
    auto v = j.at("initial").get<std::vector<double>>();
    if (v.size() != 3) throw Error("config: lorenz 'initial' needs 3 values");
    d.initial = {v[0], v[1], v[2]};
  }
  read(j, "period", d.period);
  read(j, "amplitude", d.amplitude);
  read(j, "noise_sd", d.noise_sd);
  read(j, "seed", d.seed);
  read(j, "spike_rate", d.spikes.rate);
  read(j, "spike_height", d.spikes.height);
  read(j, "spike_decay", d.spikes.decay);
  d.name = j.value("name", d.kind == "csv" ? d.path : d.kind);
  return d;
}

inline ResampleStrategy parse_strategy_entry(const json& j) {
  ResampleStrategy s;
  if (j.is_string()) {
    s.kind = parse_strategy(j.get<std::string>());
    return s;
  }
  check_keys(j, {"kind", "k", "over_ratio", "under_fraction"}, "strategy");
  s.kind = parse_strategy(j.at("kind").get<std::string>());
  read(j, "k", s.k_neighbors);
  if (j.contains("over_ratio") && !j.at("over_ratio").is_null()) s.over_ratio = j.at("over_ratio").get<double>();
  read(j, "under_fraction", s.under_fraction);
  return s;
}

}  // namespace detail

/// Parses the declarative experiment description; unknown keys are errors.
inline ExperimentConfig config_from_json(const json& j) {
  using detail::read;
  detail::check_keys(j,
                     {"datasets", "window", "horizon", "delay", "train_fraction", "scaler_fit", "relevance",
                      "thresholds", "strategies", "models", "training", "gan", "repeats", "base_seed", "output_dir",
                      "workers"},
                     "top level");
  ExperimentConfig c;
  for (const auto& d : j.at("datasets")) c.datasets.push_back(detail::parse_dataset(d));
  read(j, "window", c.window);
  read(j, "horizon", c.horizon);
  read(j, "delay", c.delay);
  read(j, "train_fraction", c.train_fraction);
  if (j.contains("scaler_fit")) {
    const auto s = j.at("scaler_fit").get<std::string>();
    if (s == "full") c.scaler_fit = ScalerFit::full;
    else if (s == "train") c.scaler_fit = ScalerFit::train;
    else throw Error("config: scaler_fit must be 'full' or 'train'");
  }
  if (j.contains("relevance")) {
    const auto& r = j.at("relevance");
    detail::check_keys(r, {"tail", "iqr_multiplier", "aggregator", "control_points"}, "relevance");
    if (r.contains("tail")) c.relevance.tail = parse_tail(r.at("tail").get<std::string>());
    read(r, "iqr_multiplier", c.relevance.iqr_multiplier);
    if (r.contains("aggregator")) c.relevance.aggregator = parse_aggregator(r.at("aggregator").get<std::string>());
    if (r.contains("control_points")) {
      std::vector<ControlPoint> pts;
      for (const auto& p : r.at("control_points")) {
        auto v = p.get<std::vector<double>>();
        if (v.size() != 2) throw Error("config: control points are [value, relevance] pairs");
        pts.push_back({v[0], v[1]});
      }
      ControlPoints check(pts);
      c.relevance.control_points = std::move(pts);
    }
  }
  read(j, "thresholds", c.thresholds);
  if (j.contains("strategies"))
    for (const auto& s : j.at("strategies")) c.strategies.push_back(detail::parse_strategy_entry(s));
  if (j.contains("models"))
    for (const auto& m : j.at("models")) c.models.push_back(parse_model(m.get<std::string>()));
  if (j.contains("training")) {
    const auto& t = j.at("training");
    detail::check_keys(t,
                       {"epochs", "batch_size", "learning_rate", "clip_norm", "lstm_units", "bdlstm_hidden",
                        "bdlstm_depth", "ridge_lambda"},
                       "training");
    read(t, "epochs", c.model.train.epochs);
    read(t, "batch_size", c.model.train.batch_size);
    read(t, "learning_rate", c.model.train.learning_rate);
    if (t.contains("clip_norm"))
      c.model.train.clip_norm = t.at("clip_norm").is_null() ? std::nullopt : std::optional(t.at("clip_norm").get<double>());
    read(t, "lstm_units", c.model.lstm_units);
    read(t, "bdlstm_hidden", c.model.bdlstm_hidden);
    read(t, "bdlstm_depth", c.model.bdlstm_depth);
    read(t, "ridge_lambda", c.model.ridge_lambda);
  }
  if (j.contains("gan")) {
    const auto& g = j.at("gan");
    detail::check_keys(g,
                       {"epochs", "batch_size", "lr_generator", "lr_discriminator", "adam_beta1", "latent_dim",
                        "label_smoothing", "relevance_filter"},
                       "gan");
    read(g, "epochs", c.gan.train.epochs);
    read(g, "batch_size", c.gan.train.batch_size);
    read(g, "lr_generator", c.gan.train.lr_generator);
    read(g, "lr_discriminator", c.gan.train.lr_discriminator);
    read(g, "adam_beta1", c.gan.train.adam_beta1);
    read(g, "latent_dim", c.gan.train.latent_dim);
    read(g, "label_smoothing", c.gan.train.label_smoothing);
    read(g, "relevance_filter", c.gan.relevance_filter);
  }
  read(j, "repeats", c.repeats);
  read(j, "base_seed", c.base_seed);
  read(j, "output_dir", c.output_dir);
  read(j, "workers", c.workers);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error("config '" + path + "': " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw Error("config '" + path + "': " + e.what());
  }
}

}  // namespace tailcast::experiment
