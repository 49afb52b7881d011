#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/experiment/config.hpp"
#include "tailcast/experiment/pipeline.hpp"
#include "tailcast/metrics.hpp"

namespace tailcast::experiment {

/// One point of the grid: dataset x strategy x threshold x model x repeat.
struct Cell {
  std::size_t dataset;
  std::size_t strategy;
  std::size_t threshold;
  std::size_t model;
  std::size_t repeat;
};

inline std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s)
      for (std::size_t t = 0; t < cfg.thresholds.size(); ++t)
        for (std::size_t m = 0; m < cfg.models.size(); ++m)
          for (std::size_t r = 0; r < cfg.repeats; ++r) cells.push_back({d, s, t, m, r});
  return cells;
}

namespace detail {

inline json strategy_json(const ResampleStrategy& s) {
  return json{{"kind", to_string(s.kind)},
              {"k", s.k_neighbors},
              {"over_ratio", s.over_ratio ? json(*s.over_ratio) : json(nullptr)},
              {"under_fraction", s.under_fraction}};
}

/// Everything that influences a cell except the repeat and threshold.
inline json cell_identity(const ExperimentConfig& cfg, const Cell& c, bool with_threshold) {
  const auto& strat = cfg.strategies[c.strategy];
  json j{{"dataset", cfg.datasets[c.dataset].to_json()},
         {"window", cfg.window},
         {"horizon", cfg.horizon},
         {"train_fraction", cfg.train_fraction},
         {"scaler_fit", cfg.scaler_fit == ScalerFit::full ? "full" : "train"},
         {"relevance", cfg.relevance.to_json()},
         {"strategy", strategy_json(strat)},
         {"model", to_string(cfg.models[c.model])},
         {"model_settings", cfg.model.to_json()}};
  if (strat.kind == StrategyKind::gan) j["gan"] = cfg.gan.to_json();
  if (with_threshold) j["threshold"] = cfg.thresholds[c.threshold];
  return j;
}

}  // namespace detail

/// Stable identifier of a cell's full configuration including the repeat.
inline std::string fingerprint(const ExperimentConfig& cfg, const Cell& c) {
  json j = detail::cell_identity(cfg, c, true);
  j["repeat"] = c.repeat;
  j["base_seed"] = cfg.base_seed;
  return hex64(fnv1a(j.dump()));
}

/// Seed for a cell: run seed (base_seed + repeat) mixed with the cell identity,
/// so scheduling order cannot influence results. Strategy "none" ignores the
/// threshold, so its cells share a seed across thresholds.
inline std::uint64_t cell_seed(const ExperimentConfig& cfg, const Cell& c) {
  const bool uses_threshold = cfg.strategies[c.strategy].kind != StrategyKind::none;
  const std::uint64_t run_seed = cfg.base_seed + c.repeat;
  const std::uint64_t h = fnv1a(detail::cell_identity(cfg, c, uses_threshold).dump());
  std::uint64_t z = run_seed ^ h;  // splitmix64 finaliser
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct RunRecord {
  std::string fingerprint;
  std::string dataset;
  std::string model;
  std::string strategy;
  double threshold = 0.0;
  std::size_t repeat = 0;
  std::uint64_t run_seed = 0;
  bool ok = true;
  std::string error;
  double wall_ms = 0.0;
  std::size_t train_size = 0;
  std::size_t extremes = 0;
  std::size_t synthetic = 0;
  std::size_t singleton_fallbacks = 0;
  std::string notes;
  MetricReport train;
  MetricReport test;
};

/// Runs the whole pipeline for one cell; failures become error records.
inline RunRecord run_cell(const ExperimentConfig& cfg, const Cell& c, const PreparedData* data,
                          const std::string& load_error = {}) {
  RunRecord rec;
  rec.fingerprint = fingerprint(cfg, c);
  rec.dataset = cfg.datasets[c.dataset].name;
  rec.model = to_string(cfg.models[c.model]);
  rec.strategy = cfg.strategies[c.strategy].label();
  rec.threshold = cfg.thresholds[c.threshold];
  rec.repeat = c.repeat;
  rec.run_seed = cfg.base_seed + c.repeat;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (!data) throw Error(load_error.empty() ? "dataset unavailable" : load_error);
    const std::uint64_t seed = cell_seed(cfg, c);
    ResampleStrategy strat = cfg.strategies[c.strategy];
    strat.rng_seed = seed;
    TrainingSet ts = build_training_set(*data, rec.threshold, strat, cfg.relevance, cfg.gan);
    rec.train_size = ts.data.size();
    rec.extremes = ts.partition.extremes.size();
    rec.synthetic = ts.synthetic;
    rec.singleton_fallbacks = ts.singleton_fallbacks;
    if (cfg.models[c.model] == ModelKind::lstm) rec.notes = "lstm stands in for convlstm2d (1x1 kernel)";
    if (ts.singleton_fallbacks > 0) {
      if (!rec.notes.empty()) rec.notes += "; ";
      rec.notes += "singleton bins replicated: " + std::to_string(ts.singleton_fallbacks);
    }
    FitResult fit = fit_forecaster(cfg.models[c.model], ts.data, cfg.model, seed + 2);
    const auto evaluate_on = [&](const WindowDataset& ds) {
      const EvalFrame fr = make_frame(ds, fit.forecaster.predict(ds), data->relevance, cfg.relevance.aggregator);
      return evaluate(fr, rec.threshold);
    };
    rec.train = evaluate_on(data->train_windows);
    rec.test = evaluate_on(data->test_windows);
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// ---- records.csv ---------------------------------------------------------

inline std::vector<std::string> record_header(std::size_t horizon) {
  std::vector<std::string> h{"dataset", "model", "strategy", "threshold", "run_seed", "rmse", "ser_rt"};
  for (double p : kSerPercents) h.push_back("ser_" + std::to_string(static_cast<int>(p)));
  for (std::size_t s = 1; s <= horizon; ++s) h.push_back("ser5_step" + std::to_string(s));
  for (const char* extra : {"split", "repeat", "fingerprint", "status", "ser_rt_sum", "ser_rt_count"}) h.emplace_back(extra);
  for (std::size_t s = 1; s <= horizon; ++s) h.push_back("rmse_step" + std::to_string(s));
  for (const char* extra : {"train_size", "extremes", "synthetic", "singleton_fallbacks", "wall_ms", "notes", "error"})
    h.emplace_back(extra);
  return h;
}

inline std::vector<std::string> record_row(const RunRecord& r, bool test_split, std::size_t horizon) {
  const MetricReport& m = test_split ? r.test : r.train;
  auto num = [&](double v) { return r.ok ? format_double(v) : std::string(); };
  std::vector<std::string> row{r.dataset, r.model, r.strategy, format_double(r.threshold), std::to_string(r.run_seed),
                               num(m.rmse), r.ok && m.ser_rt.rmse ? format_double(*m.ser_rt.rmse) : std::string()};
  for (std::size_t k = 0; k < kSerPercents.size(); ++k) row.push_back(num(m.ser_percentile[k]));
  for (std::size_t s = 0; s < horizon; ++s) row.push_back(r.ok && s < m.ser5_step.size() ? format_double(m.ser5_step[s]) : "");
  row.emplace_back(test_split ? "test" : "train");
  row.push_back(std::to_string(r.repeat));
  row.push_back(r.fingerprint);
  row.emplace_back(r.ok ? "ok" : "error");
  row.push_back(r.ok && m.ser_rt.sum ? format_double(*m.ser_rt.sum) : std::string());
  row.push_back(r.ok ? std::to_string(m.ser_rt.count) : std::string());
  for (std::size_t s = 0; s < horizon; ++s) row.push_back(r.ok && s < m.rmse_step.size() ? format_double(m.rmse_step[s]) : "");
  row.push_back(std::to_string(r.train_size));
  row.push_back(std::to_string(r.extremes));
  row.push_back(std::to_string(r.synthetic));
  row.push_back(std::to_string(r.singleton_fallbacks));
  row.push_back(format_double(std::round(r.wall_ms * 1000.0) / 1000.0));
  row.push_back(r.notes);
  row.push_back(r.error);
  return row;
}

/// One parsed row of records.csv (a record seen from one split).
struct RecordRow {
  std::string fingerprint;
  std::string dataset;
  std::string model;
  std::string strategy;
  double threshold = 0.0;
  std::size_t repeat = 0;
  std::string split;
  bool ok = true;
  std::map<std::string, std::optional<double>> metrics;  // rmse, ser_rt, ser_1.., ser5_stepK, rmse_stepK
};

inline std::vector<RecordRow> read_records(const std::string& path) {
  csv::Table t = csv::read(path);
  std::vector<RecordRow> rows;
  const auto col = [&](const char* name) { return t.require(name); };
  const std::size_t c_fp = col("fingerprint"), c_ds = col("dataset"), c_model = col("model"),
                    c_strat = col("strategy"), c_thr = col("threshold"), c_rep = col("repeat"),
                    c_split = col("split"), c_status = col("status");
  std::vector<std::pair<std::string, std::size_t>> metric_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& h = t.header[i];
    if (h == "rmse" || h == "ser_rt" || h.rfind("ser_", 0) == 0 || h.rfind("ser5_step", 0) == 0 ||
        h.rfind("rmse_step", 0) == 0) {
      if (h == "ser_rt_sum" || h == "ser_rt_count") continue;
      metric_cols.emplace_back(h, i);
    }
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw Error("records: row " + std::to_string(r + 1) + " of '" + path + "' has " + std::to_string(row.size()) +
                  " fields, expected " + std::to_string(t.header.size()));
    RecordRow rec;
    rec.fingerprint = row[c_fp];
    rec.dataset = row[c_ds];
    rec.model = row[c_model];
    rec.strategy = row[c_strat];
    rec.threshold = parse_double(row[c_thr]).value_or(0.0);
    rec.repeat = static_cast<std::size_t>(parse_int(row[c_rep]).value_or(0));
    rec.split = row[c_split];
    rec.ok = row[c_status] == "ok";
    for (const auto& [name, i] : metric_cols) rec.metrics[name] = parse_double(row[i]);
    rows.push_back(std::move(rec));
  }
  return rows;
}

// ---- aggregation -----------------------------------------------------------

struct SummaryRow {
  std::string dataset;
  std::string strategy;
  double threshold = 0.0;
  std::string model;
  std::string split;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  std::string flag;  // best | second | worst | empty
};

/// Mean and sample standard deviation (0 for a single value).
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(v.size() - 1))};
}

inline const std::vector<std::string>& summary_metrics() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"rmse", "ser_rt"};
    for (double p : kSerPercents) n.push_back("ser_" + std::to_string(static_cast<int>(p)));
    return n;
  }();
  return names;
}

/// Marks, within each group, the strictly smallest mean "best", the strictly
/// next "second" and the strictly largest "worst". Groups of one get no flag.
inline void assign_flags(std::vector<SummaryRow*>& group) {
  if (group.size() < 2) return;
  std::vector<SummaryRow*> g(group);
  std::stable_sort(g.begin(), g.end(), [](const SummaryRow* a, const SummaryRow* b) { return a->mean < b->mean; });
  const std::size_t n = g.size();
  if (g[0]->mean < g[1]->mean) {
    g[0]->flag = "best";
    if (n > 2 && g[1]->mean < g[2]->mean) g[1]->flag = "second";
  }
  if (g[n - 1]->mean > g[n - 2]->mean && g[n - 1]->flag.empty()) g[n - 1]->flag = "worst";
}

using CellKey = std::tuple<std::string, std::string, double, std::string, std::string>;

/// Per-cell mean +- std for every metric over successful repeats, with flags
/// per (dataset, threshold, split, metric) across strategies and models.
inline std::vector<SummaryRow> aggregate(const std::vector<RecordRow>& records) {
  std::map<std::pair<CellKey, std::string>, std::vector<double>> values;
  for (const auto& r : records) {
    if (!r.ok) continue;
    CellKey key{r.dataset, r.strategy, r.threshold, r.model, r.split};
    for (const auto& m : summary_metrics()) {
      auto& slot = values[{key, m}];
      auto it = r.metrics.find(m);
      if (it != r.metrics.end() && it->second) slot.push_back(*it->second);
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& [k, v] : values) {
    if (v.empty()) continue;
    const auto& [cell, metric] = k;
    auto [mean, sd] = mean_std(v);
    out.push_back({std::get<0>(cell), std::get<1>(cell), std::get<2>(cell), std::get<3>(cell), std::get<4>(cell), metric,
                   v.size(), mean, sd, ""});
  }
  std::map<std::tuple<std::string, double, std::string, std::string>, std::vector<SummaryRow*>> groups;
  for (auto& row : out) groups[{row.dataset, row.threshold, row.split, row.metric}].push_back(&row);
  for (auto& [k, g] : groups) assign_flags(g);
  return out;
}

struct StepSummaryRow {
  std::string dataset, strategy, model, split;
  double threshold = 0.0;
  std::size_t step = 0;
  std::size_t n = 0;
  double rmse_mean = 0.0, rmse_std = 0.0, ser5_mean = 0.0, ser5_std = 0.0;
};

inline std::vector<StepSummaryRow> aggregate_steps(const std::vector<RecordRow>& records) {
  std::map<std::pair<CellKey, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> values;
  for (const auto& r : records) {
    if (!r.ok) continue;
    CellKey key{r.dataset, r.strategy, r.threshold, r.model, r.split};
    for (std::size_t s = 1;; ++s) {
      auto a = r.metrics.find("rmse_step" + std::to_string(s));
      auto b = r.metrics.find("ser5_step" + std::to_string(s));
      if (a == r.metrics.end() || b == r.metrics.end() || !a->second || !b->second) break;
      auto& slot = values[{key, s}];
      slot.first.push_back(*a->second);
      slot.second.push_back(*b->second);
    }
  }
  std::vector<StepSummaryRow> out;
  for (const auto& [k, v] : values) {
    const auto& [cell, step] = k;
    auto [rm, rs] = mean_std(v.first);
    auto [sm, ss] = mean_std(v.second);
    out.push_back({std::get<0>(cell), std::get<1>(cell), std::get<3>(cell), std::get<4>(cell), std::get<2>(cell), step,
                   v.first.size(), rm, rs, sm, ss});
  }
  return out;
}

inline void write_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
  csv::Writer w(path);
  w.row({"dataset", "strategy", "threshold", "model", "split", "metric", "n", "mean", "std", "flag"});
  for (const auto& r : rows)
    w.row({r.dataset, r.strategy, format_double(r.threshold), r.model, r.split, r.metric, std::to_string(r.n),
           format_double(r.mean), format_double(r.std), r.flag});
}

inline void write_per_step(const std::string& path, const std::vector<StepSummaryRow>& rows) {
  csv::Writer w(path);
  w.row({"dataset", "strategy", "threshold", "model", "split", "step", "n", "rmse_mean", "rmse_std", "ser5_mean",
         "ser5_std"});
  for (const auto& r : rows)
    w.row({r.dataset, r.strategy, format_double(r.threshold), r.model, r.split, std::to_string(r.step),
           std::to_string(r.n), format_double(r.rmse_mean), format_double(r.rmse_std), format_double(r.ser5_mean),
           format_double(r.ser5_std)});
}

/// Aggregates records.csv in `dir` into summary.csv and per_step.csv.
inline void report(const std::string& records_path, const std::string& out_dir) {
  const auto records = read_records(records_path);
  std::filesystem::create_directories(out_dir);
  write_summary((std::filesystem::path(out_dir) / "summary.csv").string(), aggregate(records));
  write_per_step((std::filesystem::path(out_dir) / "per_step.csv").string(), aggregate_steps(records));
}

// ---- runner ----------------------------------------------------------------

struct RunStats {
  std::size_t total_cells = 0;
  std::size_t skipped = 0;
  std::size_t computed = 0;
  std::size_t failed = 0;
};

/// Runs every cell not already present in <output_dir>/records.csv, appending
/// records as they finish, then rewrites summary.csv and per_step.csv.
/// `progress` (optional) is called after each computed cell.
inline RunStats run_experiment(const ExperimentConfig& cfg,
                               const std::function<void(const RunRecord&, std::size_t, std::size_t)>& progress = {}) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string records_path = (fs::path(cfg.output_dir) / "records.csv").string();
  const auto header = record_header(cfg.horizon);

  std::set<std::string> done;
  if (fs::exists(records_path)) {
    csv::Table existing = csv::read(records_path);
    if (existing.header != header)
      throw Error("records.csv in '" + cfg.output_dir + "' has a different schema; use a fresh output directory");
    for (const auto& r : read_records(records_path)) done.insert(r.fingerprint);
  } else {
    csv::Writer(records_path).row(header);
  }

  const auto cells = enumerate_cells(cfg);
  RunStats stats;
  stats.total_cells = cells.size();
  std::vector<Cell> pending;
  for (const auto& c : cells) {
    if (done.count(fingerprint(cfg, c))) {
      ++stats.skipped;
    } else {
      pending.push_back(c);
    }
  }

  std::vector<std::optional<PreparedData>> prepared(cfg.datasets.size());
  std::vector<std::string> load_errors(cfg.datasets.size());
  {
    std::vector<char> needed(cfg.datasets.size(), 0);
    for (const auto& c : pending) needed[c.dataset] = 1;
    for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
      if (!needed[d]) continue;
      try {
        prepared[d] = prepare(cfg.datasets[d], cfg);
      } catch (const std::exception& e) {
        load_errors[d] = e.what();
      }
    }
  }

  csv::Writer appender(records_path, /*append=*/true);
  std::mutex write_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const Cell& c = pending[i];
      const auto& data = prepared[c.dataset];
      RunRecord rec = run_cell(cfg, c, data ? &*data : nullptr, load_errors[c.dataset]);
      std::lock_guard lock(write_mutex);
      appender.row(record_row(rec, false, cfg.horizon));
      appender.row(record_row(rec, true, cfg.horizon));
      appender.flush();
      ++stats.computed;
      if (!rec.ok) ++stats.failed;
      if (progress) progress(rec, stats.computed, pending.size());
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(cfg.workers, std::max<std::size_t>(pending.size(), 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  appender.flush();
  report(records_path, cfg.output_dir);
  return stats;
}

}  // namespace tailcast::experiment
