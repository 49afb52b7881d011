#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/embedding.hpp"
#include "tailcast/series.hpp"

namespace tailcast {

/// Linear interpolation between closest ranks: position q*(n-1) in sorted order.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of an empty sample");
  if (q < 0.0 || q > 1.0) throw Error("percentile rank must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct ControlPoint {
  double value;
  double relevance;
};

/// Knots of a relevance function: strictly increasing values, relevance in [0,1].
class ControlPoints {
 public:
  explicit ControlPoints(std::vector<ControlPoint> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw Error("control points: need at least 2 points");
    for (std::size_t k = 0; k < points_.size(); ++k) {
      const auto& p = points_[k];
      if (!std::isfinite(p.value) || !(p.relevance >= 0.0 && p.relevance <= 1.0))
        throw Error("control points: point " + std::to_string(k) + " out of range");
      if (k > 0 && !(p.value > points_[k - 1].value))
        throw Error("control points: values must be strictly increasing (point " + std::to_string(k) + ")");
    }
  }

  std::size_t size() const { return points_.size(); }
  const ControlPoint& operator[](std::size_t k) const { return points_[k]; }
  const std::vector<ControlPoint>& points() const { return points_; }

 private:
  std::vector<ControlPoint> points_;
};

enum class Tail { upper, lower, both };

inline Tail parse_tail(const std::string& s) {
  if (s == "upper") return Tail::upper;
  if (s == "lower") return Tail::lower;
  if (s == "both") return Tail::both;
  throw Error("unknown tail '" + s + "' (expected upper, lower or both)");
}

inline const char* to_string(Tail t) {
  switch (t) {
    case Tail::upper: return "upper";
    case Tail::lower: return "lower";
    case Tail::both: return "both";
  }
  return "?";
}

/// Boxplot construction: the median gets relevance 0 and the adjacent fence
/// (Q3 + m*IQR above, Q1 - m*IQR below, capped at the data range) gets 1.
inline ControlPoints boxplot_control_points(const TimeSeries& ts, Tail tail, double iqr_multiplier = 1.5) {
  std::vector<double> v;
  v.reserve(ts.size());
  for (double x : ts.values())
    if (!is_missing(x)) v.push_back(x);
  {
    std::vector<double> distinct(v);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4)
      throw Error("boxplot control points: series '" + ts.name() + "' has fewer than 4 distinct values");
  }
  const double q1 = percentile(v, 0.25);
  const double med = percentile(v, 0.5);
  const double q3 = percentile(v, 0.75);
  const double iqr = q3 - q1;
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  const double adj_high = std::min(q3 + iqr_multiplier * iqr, hi);
  const double adj_low = std::max(q1 - iqr_multiplier * iqr, lo);

  std::vector<ControlPoint> pts;
  if (tail == Tail::lower || tail == Tail::both) {
    if (!(adj_low < med)) throw Error("boxplot control points: degenerate lower fence");
    pts.push_back({adj_low, 1.0});
  }
  pts.push_back({med, 0.0});
  if (tail == Tail::upper || tail == Tail::both) {
    if (!(adj_high > med)) throw Error("boxplot control points: degenerate upper fence");
    pts.push_back({adj_high, 1.0});
  }
  return ControlPoints(std::move(pts));
}

/// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes, the
/// same limiter as SciPy's PchipInterpolator) with constant extension beyond
/// the end knots. Outputs are clamped to [0,1].
class RelevanceFunction {
 public:
  explicit RelevanceFunction(ControlPoints knots) : knots_(std::move(knots)) { slopes_ = compute_slopes(); }

  const ControlPoints& knots() const { return knots_; }
  const std::vector<double>& slopes() const { return slopes_; }

  double operator()(double x) const {
    const auto& p = knots_.points();
    if (!(x > p.front().value)) return p.front().relevance;
    if (!(x < p.back().value)) return p.back().relevance;
    auto it = std::upper_bound(p.begin(), p.end(), x,
                               [](double v, const ControlPoint& cp) { return v < cp.value; });
    const auto k = static_cast<std::size_t>(std::distance(p.begin(), it)) - 1;
    if (x == p[k].value) return p[k].relevance;
    const double h = p[k + 1].value - p[k].value;
    const double t = (x - p[k].value) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const double y = h00 * p[k].relevance + h10 * h * slopes_[k] + h01 * p[k + 1].relevance + h11 * h * slopes_[k + 1];
    return std::clamp(y, 0.0, 1.0);
  }

 private:
  std::vector<double> compute_slopes() const {
    const auto& p = knots_.points();
    const std::size_t n = p.size();
    std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = p[k + 1].value - p[k].value;
      delta[k] = (p[k + 1].relevance - p[k].relevance) / h[k];
    }
    if (n == 2) {
      d[0] = d[1] = delta[0];
      return d;
    }
    auto sign = [](double v) { return (v > 0) - (v < 0); };
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (sign(delta[k - 1]) * sign(delta[k]) <= 0) {
        d[k] = 0.0;
      } else {
        const double w1 = 2 * h[k] + h[k - 1];
        const double w2 = h[k] + 2 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    // non-centred three-point end slopes, shape preserving
    auto edge = [&](double h0, double h1, double m0, double m1) {
      double e = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
      if (sign(e) != sign(m0)) return 0.0;
      if (sign(m0) != sign(m1) && std::abs(e) > 3 * std::abs(m0)) return 3 * m0;
      return e;
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
  }

  ControlPoints knots_;
  std::vector<double> slopes_;
};

inline RelevanceFunction build_pchip(ControlPoints cp) { return RelevanceFunction(std::move(cp)); }

inline double eval_relevance(const RelevanceFunction& f, double x) { return f(x); }

/// How per-step relevances of a target window combine into one score.
enum class Aggregator { max, min, avg, first };

inline Aggregator parse_aggregator(const std::string& s) {
  if (s == "max") return Aggregator::max;
  if (s == "min") return Aggregator::min;
  if (s == "avg") return Aggregator::avg;
  if (s == "first") return Aggregator::first;
  throw Error("unknown aggregator '" + s + "' (expected max, min, avg or first)");
}

inline const char* to_string(Aggregator a) {
  switch (a) {
    case Aggregator::max: return "max";
    case Aggregator::min: return "min";
    case Aggregator::avg: return "avg";
    case Aggregator::first: return "first";
  }
  return "?";
}

inline double window_relevance(const RelevanceFunction& f, std::span<const double> y, Aggregator agg = Aggregator::max) {
  if (y.empty()) throw Error("window_relevance: empty window");
  switch (agg) {
    case Aggregator::first: return f(y.front());
    case Aggregator::max: {
      double best = f(y[0]);
      for (std::size_t i = 1; i < y.size(); ++i) best = std::max(best, f(y[i]));
      return best;
    }
    case Aggregator::min: {
      double best = f(y[0]);
      for (std::size_t i = 1; i < y.size(); ++i) best = std::min(best, f(y[i]));
      return best;
    }
    case Aggregator::avg: {
      double sum = 0.0;
      for (double v : y) sum += f(v);
      return sum / static_cast<double>(y.size());
    }
  }
  return 0.0;
}

/// Split of a dataset into extremes (score >= threshold) and commons, both in
/// input order. `extreme_index` / `common_index` are positions in the input.
struct Partition {
  WindowDataset extremes;
  WindowDataset commons;
  double threshold;
  std::vector<double> scores;
  std::vector<std::size_t> extreme_index;
  std::vector<std::size_t> common_index;

  double extreme_fraction() const {
    return scores.empty() ? 0.0 : static_cast<double>(extremes.size()) / static_cast<double>(scores.size());
  }
};

inline std::vector<double> score_windows(const WindowDataset& ds, const RelevanceFunction& f, Aggregator agg) {
  std::vector<double> scores;
  scores.reserve(ds.size());
  for (const auto& p : ds) scores.push_back(window_relevance(f, p.y, agg));
  return scores;
}

inline Partition partition_by_scores(const WindowDataset& ds, std::vector<double> scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("partition: threshold must lie in [0,1]");
  if (scores.size() != ds.size()) throw Error("partition: one score per window required");
  Partition part{ds.empty_like(), ds.empty_like(), threshold, std::move(scores), {}, {}};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (part.scores[i] >= threshold) {
      part.extremes.push_back(ds[i]);
      part.extreme_index.push_back(i);
    } else {
      part.commons.push_back(ds[i]);
      part.common_index.push_back(i);
    }
  }
  return part;
}

inline Partition partition(const WindowDataset& ds, const RelevanceFunction& f, double threshold,
                           Aggregator agg = Aggregator::max) {
  return partition_by_scores(ds, score_windows(ds, f, agg), threshold);
}

/// Inverts the relevance function on one monotone branch: the smallest (upper)
/// or largest (lower) value whose relevance reaches `threshold`. The branches
/// meet at the lowest-relevance knot.
inline double threshold_to_value(const RelevanceFunction& f, double threshold, Tail tail) {
  if (tail == Tail::both) throw Error("threshold_to_value: choose the upper or lower tail");
  const auto& p = f.knots().points();
  std::size_t valley = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k].relevance < p[valley].relevance) valley = k;

  double a = tail == Tail::upper ? p[valley].value : p.front().value;
  double b = tail == Tail::upper ? p.back().value : p[valley].value;
  const double reached = tail == Tail::upper ? f(b) : f(a);
  if (!(reached >= threshold))
    throw Error("threshold_to_value: relevance " + format_double(threshold) + " is not attained on the " +
                to_string(tail) + " tail");

  if (tail == Tail::upper) {
    if (f(a) >= threshold) return a;
    double lo = a, hi = b;  // f(lo) < threshold <= f(hi)
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) >= threshold ? hi : lo) = mid;
    }
    return hi;
  }
  if (f(b) >= threshold) return b;
  double lo = a, hi = b;  // f(lo) >= threshold > f(hi)
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= threshold ? lo : hi) = mid;
  }
  return lo;
}

/// Columns origin, score, class (extreme|common), in dataset order.
inline void write_csv(const std::string& path, const WindowDataset& ds, const Partition& part) {
  csv::Writer w(path);
  w.row({"origin", "score", "class"});
  for (std::size_t i = 0; i < ds.size(); ++i)
    w.row({std::to_string(ds[i].origin), format_double(part.scores[i]),
           part.scores[i] >= part.threshold ? "extreme" : "common"});
}

}  // namespace tailcast
