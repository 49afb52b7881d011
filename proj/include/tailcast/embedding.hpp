#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/series.hpp"

namespace tailcast {

/// Where a window came from. Originals carry their own origin; synthetic
/// windows record the extremes they were derived from (-1 when unused).
enum class Source { original, replicate, smoter, smoter_bin, gan };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::original: return "original";
    case Source::replicate: return "replicate";
    case Source::smoter: return "smoter";
    case Source::smoter_bin: return "smoter-bin";
    case Source::gan: return "gan";
  }
  return "?";
}

struct Provenance {
  Source source = Source::original;
  std::int64_t seed_origin = -1;
  std::int64_t neighbor_origin = -1;

  bool synthetic() const { return source != Source::original; }
  bool operator==(const Provenance&) const = default;
};

inline constexpr std::int64_t kSyntheticOrigin = -1;

/// One supervised sample. `x` is stored oldest-first: x[D-1] is the
/// observation at `origin`, and y[0] the one immediately after it.
struct WindowPair {
  std::vector<double> x;
  std::vector<double> y;
  std::int64_t origin = 0;
  Provenance provenance;

  bool operator==(const WindowPair&) const = default;
};

class WindowDataset {
 public:
  WindowDataset(std::size_t window, std::size_t horizon, std::string source = "series")
      : window_(window), horizon_(horizon), source_(std::move(source)) {
    if (window_ == 0 || horizon_ == 0) throw Error("window dataset: D and P must be positive");
  }

  std::size_t window() const { return window_; }
  std::size_t horizon() const { return horizon_; }
  const std::string& source() const { return source_; }

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const WindowPair& operator[](std::size_t i) const { return pairs_[i]; }
  const std::vector<WindowPair>& pairs() const { return pairs_; }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

  void push_back(WindowPair p) {
    if (p.x.size() != window_ || p.y.size() != horizon_)
      throw Error("window dataset: pair of shape (" + std::to_string(p.x.size()) + "," +
                  std::to_string(p.y.size()) + ") does not match (" + std::to_string(window_) + "," +
                  std::to_string(horizon_) + ")");
    pairs_.push_back(std::move(p));
  }
  void reserve(std::size_t n) { pairs_.reserve(n); }

  /// Same D, P and source with no pairs.
  WindowDataset empty_like() const { return WindowDataset(window_, horizon_, source_); }

  bool operator==(const WindowDataset&) const = default;

 private:
  std::size_t window_;
  std::size_t horizon_;
  std::string source_;
  std::vector<WindowPair> pairs_;
};

/// Number of stride-1 pairs a length-n series yields.
inline std::size_t window_count(std::size_t n, std::size_t window, std::size_t horizon) {
  return n >= window + horizon ? n - window - horizon + 1 : 0;
}

/// Sliding-window embedding with unit delay. Origins are positions in `ts`.
inline WindowDataset embed(const TimeSeries& ts, std::size_t window, std::size_t horizon) {
  WindowDataset ds(window, horizon, ts.name());
  const std::size_t n = ts.size();
  if (n < window + horizon)
    throw Error("embed: series '" + ts.name() + "' of length " + std::to_string(n) +
                " is shorter than D+P=" + std::to_string(window + horizon));
  if (ts.has_missing()) throw Error("embed: series '" + ts.name() + "' contains missing values");
  const auto& v = ts.values();
  ds.reserve(window_count(n, window, horizon));
  for (std::size_t t = window - 1; t + horizon < n; ++t) {
    WindowPair p;
    p.x.assign(v.begin() + static_cast<std::ptrdiff_t>(t + 1 - window), v.begin() + static_cast<std::ptrdiff_t>(t + 1));
    p.y.assign(v.begin() + static_cast<std::ptrdiff_t>(t + 1), v.begin() + static_cast<std::ptrdiff_t>(t + 1 + horizon));
    p.origin = static_cast<std::int64_t>(t);
    ds.push_back(std::move(p));
  }
  return ds;
}

/// Joint vector x ++ y used by the resamplers and the GAN.
inline std::vector<double> flatten_pair(const WindowPair& p) {
  std::vector<double> out;
  out.reserve(p.x.size() + p.y.size());
  out.insert(out.end(), p.x.begin(), p.x.end());
  out.insert(out.end(), p.y.begin(), p.y.end());
  return out;
}

inline WindowPair unflatten(std::span<const double> v, std::size_t window, std::size_t horizon) {
  if (v.size() != window + horizon)
    throw Error("unflatten: vector of length " + std::to_string(v.size()) + " does not split into D=" +
                std::to_string(window) + ", P=" + std::to_string(horizon));
  WindowPair p;
  p.x.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(window));
  p.y.assign(v.begin() + static_cast<std::ptrdiff_t>(window), v.end());
  return p;
}

/// Columns x_1..x_D, y_1..y_P, origin; with `provenance` also synthetic,
/// seed_origin, neighbor_origin, source.
inline void write_csv(const std::string& path, const WindowDataset& ds, bool provenance = false) {
  csv::Writer w(path);
  std::vector<std::string> header;
  for (std::size_t i = 1; i <= ds.window(); ++i) header.push_back("x_" + std::to_string(i));
  for (std::size_t i = 1; i <= ds.horizon(); ++i) header.push_back("y_" + std::to_string(i));
  header.push_back("origin");
  if (provenance) {
    for (const char* h : {"synthetic", "seed_origin", "neighbor_origin", "source"}) header.emplace_back(h);
  }
  w.row(header);
  std::vector<std::string> row;
  for (const auto& p : ds) {
    row.clear();
    for (double v : p.x) row.push_back(format_double(v));
    for (double v : p.y) row.push_back(format_double(v));
    row.push_back(std::to_string(p.origin));
    if (provenance) {
      row.push_back(p.provenance.synthetic() ? "1" : "0");
      row.push_back(std::to_string(p.provenance.seed_origin));
      row.push_back(std::to_string(p.provenance.neighbor_origin));
      row.emplace_back(to_string(p.provenance.source));
    }
    w.row(row);
  }
}

/// Reads a dataset written by write_csv; D and P are inferred from the header.
inline WindowDataset read_window_csv(const std::string& path) {
  csv::Table t = csv::read(path);
  std::size_t window = 0, horizon = 0;
  for (const auto& h : t.header) {
    if (h.rfind("x_", 0) == 0) ++window;
    if (h.rfind("y_", 0) == 0) ++horizon;
  }
  WindowDataset ds(window, horizon, path);
  const std::size_t origin_col = t.require("origin");
  auto source_col = t.find("source");
  auto seed_col = t.find("seed_origin");
  auto neigh_col = t.find("neighbor_origin");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto num = [&](std::size_t c) {
      auto v = c < row.size() ? parse_double(row[c]) : std::nullopt;
      if (!v) throw Error("read_window_csv: bad value at row " + std::to_string(r + 1) + " of '" + path + "'");
      return *v;
    };
    WindowPair p;
    for (std::size_t i = 0; i < window; ++i) p.x.push_back(num(t.require("x_" + std::to_string(i + 1))));
    for (std::size_t i = 0; i < horizon; ++i) p.y.push_back(num(t.require("y_" + std::to_string(i + 1))));
    p.origin = static_cast<std::int64_t>(num(origin_col));
    if (source_col) {
      const std::string& s = row.at(*source_col);
      for (Source k : {Source::original, Source::replicate, Source::smoter, Source::smoter_bin, Source::gan})
        if (s == to_string(k)) p.provenance.source = k;
      if (seed_col) p.provenance.seed_origin = static_cast<std::int64_t>(num(*seed_col));
      if (neigh_col) p.provenance.neighbor_origin = static_cast<std::int64_t>(num(*neigh_col));
    }
    ds.push_back(std::move(p));
  }
  return ds;
}

}  // namespace tailcast
