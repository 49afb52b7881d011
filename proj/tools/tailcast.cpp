#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tailcast/experiment/runner.hpp"
#include "tailcast/generators.hpp"
#include "tailcast/nn/serialize.hpp"

namespace tc = tailcast;
namespace ex = tailcast::experiment;
using nlohmann::json;

namespace {

/// Flags shared by the subcommands that read an experiment config.
struct ConfigArgs {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> window;
  std::optional<std::size_t> horizon;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", path, "experiment config (JSON, comments allowed)")->required()->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "override base_seed");
    app->add_option("--output-dir", output_dir, "override output_dir");
    app->add_option("--repeats", repeats, "override repeats");
    app->add_option("--workers", workers, "override workers");
    app->add_option("--epochs", epochs, "override training epochs");
    app->add_option("--window", window, "override window length D");
    app->add_option("--horizon", horizon, "override horizon P");
  }

  ex::ExperimentConfig load() const {
    std::ifstream in(path);
    json j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    if (seed) j["base_seed"] = *seed;
    if (output_dir) j["output_dir"] = *output_dir;
    if (repeats) j["repeats"] = *repeats;
    if (workers) j["workers"] = *workers;
    if (epochs) j["training"]["epochs"] = *epochs;
    if (window) j["window"] = *window;
    if (horizon) j["horizon"] = *horizon;
    return ex::config_from_json(j);
  }
};

/// Picks one dataset, strategy, threshold and model out of a config.
struct CellArgs {
  std::string dataset;
  std::string strategy;
  std::optional<double> threshold;
  std::string model = "ridge";
  std::optional<std::size_t> k;
  std::optional<double> over_ratio;
  std::optional<double> under_fraction;

  void add_to(CLI::App* app, bool with_model) {
    app->add_option("--dataset", dataset, "dataset name (default: first in config)");
    app->add_option("--strategy", strategy, "none|replicate|smoter|smoter-bin|gan (default: first in config)");
    app->add_option("--threshold", threshold, "relevance threshold R_T (default: first in config)");
    app->add_option("--k", k, "neighbours for smoter variants");
    app->add_option("--over-ratio", over_ratio, "extremes multiplier after oversampling");
    app->add_option("--under-fraction", under_fraction, "fraction of commons kept");
    if (with_model) app->add_option("--model", model, "ridge|lstm|bdlstm");
  }

  const tc::experiment::DatasetSpec& pick_dataset(const ex::ExperimentConfig& cfg) const {
    if (dataset.empty()) return cfg.datasets.front();
    for (const auto& d : cfg.datasets)
      if (d.name == dataset) return d;
    throw tc::Error("no dataset named '" + dataset + "' in the config");
  }

  tc::ResampleStrategy pick_strategy(const ex::ExperimentConfig& cfg, std::uint64_t seed) const {
    tc::ResampleStrategy s = strategy.empty() ? cfg.strategies.front() : tc::ResampleStrategy{};
    if (!strategy.empty()) s.kind = tc::parse_strategy(strategy);
    if (k) s.k_neighbors = *k;
    if (over_ratio) s.over_ratio = *over_ratio;
    if (under_fraction) s.under_fraction = *under_fraction;
    s.rng_seed = seed;
    s.validate();
    return s;
  }

  double pick_threshold(const ex::ExperimentConfig& cfg) const { return threshold.value_or(cfg.thresholds.front()); }
};

void print_report(const char* split, const tc::MetricReport& r, double threshold) {
  nlohmann::ordered_json j{{"split", split}, {"threshold", threshold}, {"rmse", r.rmse}};
  j["ser_rt"] = r.ser_rt.rmse ? nlohmann::ordered_json(*r.ser_rt.rmse) : nlohmann::ordered_json(nullptr);
  j["ser_rt_count"] = r.ser_rt.count;
  for (std::size_t k = 0; k < tc::kSerPercents.size(); ++k)
    j["ser_" + tc::format_double(tc::kSerPercents[k])] = r.ser_percentile[k];
  j["rmse_step"] = r.rmse_step;
  j["ser5_step"] = r.ser5_step;
  std::cout << j.dump() << '\n';
}

ex::Forecaster load_forecaster(const std::string& path) {
  auto saved = tc::nn::load_file(path);
  if (auto* r = std::get_if<tc::nn::RidgeModel>(&saved)) return ex::Forecaster(std::move(*r));
  if (auto* n = std::get_if<tc::nn::RecurrentNet>(&saved)) return ex::Forecaster(std::move(*n));
  throw tc::Error("model file '" + path + "' does not hold a forecaster");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extreme-value time series forecasting with resampling"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "clean and min-max scale a CSV column");
  std::string in_path, in_column = "0", out_path;
  double train_fraction = 0.7;
  std::string scaler_fit = "full";
  ingest->add_option("-i,--input", in_path, "input CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--column", in_column, "column name or zero-based index");
  ingest->add_option("-o,--output", out_path, "scaled series CSV")->required();
  ingest->add_option("--train-fraction", train_fraction, "split used when fitting on train only");
  ingest->add_option("--scaler-fit", scaler_fit, "full|train")->check(CLI::IsMember({"full", "train"}));

  // generators
  auto* lorenz = app.add_subcommand("gen-lorenz", "x-coordinate of the Lorenz system");
  std::size_t n = 2000;
  double dt = 0.01;
  std::vector<double> initial{1.0, 1.0, 1.0};
  std::optional<std::uint64_t> gen_seed;
  lorenz->add_option("-n", n, "series length");
  lorenz->add_option("--dt", dt, "RK4 step");
  lorenz->add_option("--initial", initial, "initial x y z")->expected(3);
  lorenz->add_option("--seed", gen_seed, "perturb the initial state");
  lorenz->add_option("-o,--output", out_path, "output CSV")->required();

  auto* sine = app.add_subcommand("gen-sine", "noisy sinusoid with optional decaying spikes");
  double period = 50.0, amplitude = 1.0, noise_sd = 0.0;
  std::uint64_t sine_seed = 0;
  tc::SpikeParams spikes;
  sine->add_option("-n", n, "series length");
  sine->add_option("--period", period, "period in steps");
  sine->add_option("--amplitude", amplitude, "amplitude");
  sine->add_option("--noise", noise_sd, "Gaussian noise sd");
  sine->add_option("--seed", sine_seed, "noise seed");
  sine->add_option("--spike-rate", spikes.rate, "per-step spike probability");
  sine->add_option("--spike-height", spikes.height, "spike height");
  sine->add_option("--spike-decay", spikes.decay, "spike decay constant");
  sine->add_option("-o,--output", out_path, "output CSV")->required();

  // relevance
  auto* relevance = app.add_subcommand("relevance", "fit the relevance function and tabulate it");
  std::string tail = "upper", out_dir;
  double iqr = 1.5;
  std::size_t grid = 101;
  bool scale = false;
  relevance->add_option("-i,--input", in_path, "series CSV")->required()->check(CLI::ExistingFile);
  relevance->add_option("--column", in_column, "column name or zero-based index");
  relevance->add_option("--tail", tail, "upper|lower|both")->check(CLI::IsMember({"upper", "lower", "both"}));
  relevance->add_option("--iqr", iqr, "whisker multiplier");
  relevance->add_option("--grid", grid, "points in the phi table")->check(CLI::Range(2, 1000000));
  relevance->add_flag("--scale", scale, "min-max scale the series first");
  relevance->add_option("-o,--output-dir", out_dir, "directory for the tables")->required();

  // resample / train / evaluate
  auto* resample = app.add_subcommand("resample", "write the training set a strategy produces");
  ConfigArgs resample_cfg;
  CellArgs resample_cell;
  resample_cfg.add_to(resample);
  resample_cell.add_to(resample, false);
  resample->add_option("-o,--output", out_path, "dataset CSV")->required();

  auto* train = app.add_subcommand("train", "train one forecaster and save it");
  ConfigArgs train_cfg;
  CellArgs train_cell;
  train_cfg.add_to(train);
  train_cell.add_to(train, true);
  train->add_option("-o,--output", out_path, "model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score a saved forecaster on the train and test windows");
  ConfigArgs eval_cfg;
  CellArgs eval_cell;
  std::string model_path;
  eval_cfg.add_to(evaluate);
  eval_cell.add_to(evaluate, false);
  evaluate->add_option("-m,--model-file", model_path, "model saved by train")->required()->check(CLI::ExistingFile);

  // experiment / report
  auto* experiment = app.add_subcommand("experiment", "run the full grid, resuming existing records");
  ConfigArgs exp_cfg;
  bool quiet = false;
  exp_cfg.add_to(experiment);
  experiment->add_flag("-q,--quiet", quiet, "no per-cell progress");

  auto* report = app.add_subcommand("report", "rebuild summary.csv and per_step.csv from records.csv");
  std::string records_path;
  report->add_option("-r,--records", records_path, "records.csv")->required()->check(CLI::ExistingFile);
  report->add_option("-o,--output-dir", out_dir, "directory for the summaries (default: alongside records)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto clean = tc::drop_missing(tc::load_csv(in_path, in_column));
      const auto basis = scaler_fit == "full" ? clean : tc::split(clean, train_fraction).train;
      const auto scaler = tc::Scaler::fit(basis);
      tc::write_csv(out_path, scaler.apply(clean));
      std::cout << "rows " << clean.size() << " min " << tc::format_double(scaler.min()) << " max "
                << tc::format_double(scaler.max()) << '\n';
    } else if (*lorenz) {
      if (initial.size() != 3) throw tc::Error("--initial needs three values");
      tc::write_csv(out_path, tc::gen_lorenz(n, dt, {initial[0], initial[1], initial[2]}, gen_seed));
    } else if (*sine) {
      tc::write_csv(out_path, tc::gen_sine(n, period, amplitude, noise_sd, sine_seed, spikes));
    } else if (*relevance) {
      auto series = tc::drop_missing(tc::load_csv(in_path, in_column));
      if (scale) series = tc::Scaler::fit(series).apply(series);
      const tc::Tail t = tc::parse_tail(tail);
      const tc::RelevanceFunction f(tc::boxplot_control_points(series, t, iqr));
      namespace fs = std::filesystem;
      fs::create_directories(out_dir);
      {
        tc::csv::Writer w((fs::path(out_dir) / "control_points.csv").string());
        w.row({"value", "relevance"});
        for (const auto& p : f.knots().points()) w.row({tc::format_double(p.value), tc::format_double(p.relevance)});
      }
      {
        tc::csv::Writer w((fs::path(out_dir) / "phi.csv").string());
        w.row({"value", "relevance"});
        const double lo = f.knots().points().front().value, hi = f.knots().points().back().value;
        for (std::size_t i = 0; i < grid; ++i) {
          const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
          w.row({tc::format_double(x), tc::format_double(f(x))});
        }
      }
      {
        tc::csv::Writer w((fs::path(out_dir) / "thresholds.csv").string());
        w.row({"tail", "threshold", "value"});
        for (tc::Tail side : {tc::Tail::lower, tc::Tail::upper}) {
          if (t != tc::Tail::both && t != side) continue;
          for (int k = 1; k <= 19; ++k) {
            const double rt = k / 20.0;
            std::string v;
            try {
              v = tc::format_double(tc::threshold_to_value(f, rt, side));
            } catch (const tc::Error&) {
            }
            w.row({tc::to_string(side), tc::format_double(rt), v});
          }
        }
      }
    } else if (*resample) {
      const auto cfg = resample_cfg.load();
      const auto data = ex::prepare(resample_cell.pick_dataset(cfg), cfg);
      const auto strat = resample_cell.pick_strategy(cfg, cfg.base_seed);
      const double rt = resample_cell.pick_threshold(cfg);
      const auto set = ex::build_training_set(data, rt, strat, cfg.relevance, cfg.gan);
      tc::write_csv(out_path, set.data, /*provenance=*/true);
      std::cout << "windows " << set.data.size() << " extremes " << set.partition.extremes.size() << " synthetic "
                << set.synthetic << '\n';
    } else if (*train) {
      const auto cfg = train_cfg.load();
      const auto data = ex::prepare(train_cell.pick_dataset(cfg), cfg);
      const auto strat = train_cell.pick_strategy(cfg, cfg.base_seed);
      const auto set = ex::build_training_set(data, train_cell.pick_threshold(cfg), strat, cfg.relevance, cfg.gan);
      const auto fit = ex::fit_forecaster(ex::parse_model(train_cell.model), set.data, cfg.model, cfg.base_seed + 2);
      std::visit([&](const auto& m) { tc::nn::save_file(out_path, m); }, fit.forecaster.model());
      if (!fit.loss_history.empty())
        std::cout << "final loss " << tc::format_double(fit.loss_history.back()) << " over "
                  << fit.loss_history.size() << " epochs\n";
    } else if (*evaluate) {
      const auto cfg = eval_cfg.load();
      const auto data = ex::prepare(eval_cell.pick_dataset(cfg), cfg);
      const auto model = load_forecaster(model_path);
      const double rt = eval_cell.pick_threshold(cfg);
      for (const auto& [name, ds] : {std::pair<const char*, const tc::WindowDataset*>{"train", &data.train_windows},
                                     {"test", &data.test_windows}}) {
        const auto fr = tc::make_frame(*ds, model.predict(*ds), data.relevance, cfg.relevance.aggregator);
        print_report(name, tc::evaluate(fr, rt), rt);
      }
    } else if (*experiment) {
      const auto cfg = exp_cfg.load();
      const auto stats = ex::run_experiment(cfg, [&](const ex::RunRecord& r, std::size_t done, std::size_t total) {
        if (quiet) return;
        std::cerr << '[' << done << '/' << total << "] " << r.dataset << ' ' << r.strategy << ' '
                  << tc::format_double(r.threshold) << ' ' << r.model << " repeat " << r.repeat << ' '
                  << (r.ok ? "ok" : "error: " + r.error) << '\n';
      });
      std::cout << "cells " << stats.total_cells << " computed " << stats.computed << " skipped " << stats.skipped
                << " failed " << stats.failed << '\n';
    } else if (*report) {
      if (out_dir.empty()) out_dir = std::filesystem::path(records_path).parent_path().string();
      if (out_dir.empty()) out_dir = ".";
      ex::report(records_path, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "tailcast: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
