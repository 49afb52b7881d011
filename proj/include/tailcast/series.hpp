#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tailcast/common.hpp"

namespace tailcast {

/// Marker stored in place of an absent observation.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Ordered univariate observations with strictly increasing integer stamps.
class TimeSeries {
 public:
  TimeSeries() = default;

  explicit TimeSeries(std::vector<double> values, std::string name = "series")
      : values_(std::move(values)), name_(std::move(name)) {
    index_.resize(values_.size());
    for (std::size_t i = 0; i < index_.size(); ++i) index_[i] = static_cast<std::int64_t>(i);
    validate();
  }

  TimeSeries(std::vector<double> values, std::vector<std::int64_t> index, std::string name)
      : values_(std::move(values)), index_(std::move(index)), name_(std::move(name)) {
    validate();
  }

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::int64_t>& index() const { return index_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool has_missing() const {
    return std::any_of(values_.begin(), values_.end(), [](double v) { return is_missing(v); });
  }

 private:
  void validate() const {
    if (values_.empty()) throw Error("time series '" + name_ + "' is empty");
    if (values_.size() != index_.size())
      throw Error("time series '" + name_ + "': values and index differ in length");
    for (std::size_t i = 1; i < index_.size(); ++i)
      if (index_[i] <= index_[i - 1])
        throw Error("time series '" + name_ + "': index not strictly increasing at position " +
                    std::to_string(i));
  }

  std::vector<double> values_;
  std::vector<std::int64_t> index_;
  std::string name_ = "series";
};

/// Reads one column of a headed CSV. Empty cells become kMissing; `column` is a
/// header name, or a zero-based position when no header matches it.
inline TimeSeries load_csv(const std::string& path, const std::string& column) {
  csv::Table table = csv::read(path);
  std::size_t col = 0;
  if (auto named = table.find(column)) {
    col = *named;
  } else if (auto pos = parse_int(column); pos && *pos >= 0 &&
                                           static_cast<std::size_t>(*pos) < table.header.size()) {
    col = static_cast<std::size_t>(*pos);
  } else {
    throw Error("load_csv: column '" + column + "' not found in '" + path + "'");
  }
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::string cell = col < row.size() ? row[col] : std::string();
    auto first = cell.find_first_not_of(" \t");
    if (first == std::string::npos) {
      values.push_back(kMissing);
      continue;
    }
    auto v = parse_double(cell);
    if (!v || !std::isfinite(*v))
      throw Error("load_csv: unparseable value '" + cell + "' at row " + std::to_string(r + 1) +
                  " of '" + path + "'");
    values.push_back(*v);
  }
  if (values.empty()) throw Error("load_csv: '" + path + "' has no data rows");
  std::string name = table.header[col].empty() ? "series" : table.header[col];
  return TimeSeries(std::move(values), name);
}

/// Writes columns `index,<name>`; missing values become empty cells.
inline void write_csv(const std::string& path, const TimeSeries& ts) {
  csv::Writer w(path);
  w.row({"index", ts.name()});
  for (std::size_t i = 0; i < ts.size(); ++i)
    w.row({std::to_string(ts.index()[i]), is_missing(ts[i]) ? std::string() : format_double(ts[i])});
}

/// Removes missing observations, keeping the original stamps of the survivors.
inline TimeSeries drop_missing(const TimeSeries& ts) {
  std::vector<double> values;
  std::vector<std::int64_t> index;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (is_missing(ts[i])) continue;
    values.push_back(ts[i]);
    index.push_back(ts.index()[i]);
  }
  if (values.empty()) throw Error("drop_missing: series '" + ts.name() + "' is empty after cleaning");
  return TimeSeries(std::move(values), std::move(index), ts.name());
}

/// Min-max scaling onto [0,1]. Values outside the fitted range extend linearly.
class Scaler {
 public:
  Scaler(double min, double max) : min_(min), max_(max) {
    if (!(max_ > min_)) throw Error("scaler: max must exceed min");
  }

  static Scaler fit(const TimeSeries& ts) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : ts.values()) {
      if (is_missing(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw Error("fit_scaler: series '" + ts.name() + "' is constant");
    return Scaler(lo, hi);
  }

  double min() const { return min_; }
  double max() const { return max_; }

  double apply(double v) const { return (v - min_) / (max_ - min_); }
  double invert(double v) const { return v * (max_ - min_) + min_; }

  TimeSeries apply(const TimeSeries& ts) const { return map(ts, [this](double v) { return apply(v); }); }
  TimeSeries invert(const TimeSeries& ts) const { return map(ts, [this](double v) { return invert(v); }); }

 private:
  template <typename F>
  static TimeSeries map(const TimeSeries& ts, F f) {
    std::vector<double> out(ts.values());
    for (double& v : out)
      if (!is_missing(v)) v = f(v);
    return TimeSeries(std::move(out), ts.index(), ts.name());
  }

  double min_;
  double max_;
};

inline Scaler fit_scaler(const TimeSeries& ts) { return Scaler::fit(ts); }
inline TimeSeries apply_scaler(const Scaler& s, const TimeSeries& ts) { return s.apply(ts); }
inline TimeSeries invert_scaler(const Scaler& s, const TimeSeries& ts) { return s.invert(ts); }

struct TrainTestSplit {
  TimeSeries train;
  TimeSeries test;
};

/// Chronological split: the first floor(N * fraction) observations train.
inline TrainTestSplit split(const TimeSeries& ts, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("split: train fraction must lie in (0,1)");
  const auto n = ts.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train >= n)
    throw Error("split: fraction " + format_double(train_fraction) + " leaves an empty part for N=" +
                std::to_string(n));
  auto slice = [&](std::size_t from, std::size_t to) {
    std::vector<double> v(ts.values().begin() + static_cast<std::ptrdiff_t>(from),
                          ts.values().begin() + static_cast<std::ptrdiff_t>(to));
    std::vector<std::int64_t> idx(ts.index().begin() + static_cast<std::ptrdiff_t>(from),
                                  ts.index().begin() + static_cast<std::ptrdiff_t>(to));
    return TimeSeries(std::move(v), std::move(idx), ts.name());
  };
  return {slice(0, n_train), slice(n_train, n)};
}

}  // namespace tailcast
