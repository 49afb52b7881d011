#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/embedding.hpp"
#include "tailcast/relevance.hpp"

namespace tailcast {

/// Row-aligned truths, forecasts and per-sample relevance of the true target.
/// truths and predictions are n x P.
struct EvalFrame {
  Eigen::MatrixXd truths;
  Eigen::MatrixXd predictions;
  std::vector<double> scores;
  std::vector<std::int64_t> origins;

  std::size_t size() const { return static_cast<std::size_t>(truths.rows()); }
  std::size_t horizon() const { return static_cast<std::size_t>(truths.cols()); }

  void validate() const {
    if (truths.rows() != predictions.rows() || truths.cols() != predictions.cols())
      throw Error("eval frame: truths and predictions differ in shape");
    if (scores.size() != size() || origins.size() != size())
      throw Error("eval frame: scores and origins must have one entry per row");
    if (!truths.allFinite() || !predictions.allFinite()) throw Error("eval frame: non-finite entries");
  }
};

/// Builds a frame from a dataset and its n x P forecasts; scores use the
/// relevance of the TRUE target window.
inline EvalFrame make_frame(const WindowDataset& ds, const Eigen::MatrixXd& predictions, const RelevanceFunction& f,
                            Aggregator agg = Aggregator::max) {
  EvalFrame fr;
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto p = static_cast<Eigen::Index>(ds.horizon());
  fr.truths.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) fr.truths(i, j) = ds[static_cast<std::size_t>(i)].y[static_cast<std::size_t>(j)];
  fr.predictions = predictions;
  fr.scores = score_windows(ds, f, agg);
  for (const auto& w : ds) fr.origins.push_back(w.origin);
  fr.validate();
  return fr;
}

namespace detail {

/// sqrt(mean squared error) over the selected rows and one or all columns,
/// summed in row order so that selecting everything reproduces rmse() exactly.
inline double masked_rmse(const EvalFrame& fr, const std::vector<char>& rows, std::optional<std::size_t> column) {
  double sum = 0.0;
  std::size_t count = 0;
  const auto p = static_cast<Eigen::Index>(fr.horizon());
  for (Eigen::Index i = 0; i < fr.truths.rows(); ++i) {
    if (!rows[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (column && static_cast<std::size_t>(j) != *column) continue;
      const double d = fr.truths(i, j) - fr.predictions(i, j);
      sum += d * d;
      ++count;
    }
  }
  if (count == 0) throw Error("metric over an empty selection");
  return std::sqrt(sum / static_cast<double>(count));
}

inline double masked_sse(const EvalFrame& fr, const std::vector<char>& rows) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < fr.truths.rows(); ++i) {
    if (!rows[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < fr.truths.cols(); ++j) {
      const double d = fr.truths(i, j) - fr.predictions(i, j);
      sum += d * d;
    }
  }
  return sum;
}

}  // namespace detail

inline double rmse(const EvalFrame& fr) {
  fr.validate();
  if (fr.size() == 0 || fr.horizon() == 0) throw Error("rmse: empty frame");
  return detail::masked_rmse(fr, std::vector<char>(fr.size(), 1), std::nullopt);
}

/// SER at a relevance threshold in both forms: RMSE over the samples with
/// score >= threshold, and the raw sum of squared errors over them. Undefined
/// (both nullopt) when no sample reaches the threshold.
struct SerThreshold {
  std::optional<double> rmse;
  std::optional<double> sum;
  std::size_t count = 0;

  bool defined() const { return rmse.has_value(); }
};

inline std::vector<char> threshold_mask(const EvalFrame& fr, double threshold) {
  std::vector<char> m(fr.size());
  for (std::size_t i = 0; i < fr.size(); ++i) m[i] = fr.scores[i] >= threshold;
  return m;
}

inline SerThreshold ser_threshold_full(const EvalFrame& fr, double threshold) {
  fr.validate();
  const auto mask = threshold_mask(fr, threshold);
  SerThreshold out;
  out.count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  if (out.count == 0) return out;
  out.rmse = detail::masked_rmse(fr, mask, std::nullopt);
  out.sum = detail::masked_sse(fr, mask);
  return out;
}

inline std::optional<double> ser_threshold(const EvalFrame& fr, double threshold) {
  return ser_threshold_full(fr, threshold).rmse;
}

/// Number of samples SER-p% evaluates: ceil(p/100 * n), at least 1.
inline std::size_t percentile_subset_size(std::size_t n, double percent) {
  if (!(percent > 0.0 && percent <= 100.0)) throw Error("ser_percentile: percent must lie in (0,100]");
  return std::clamp<std::size_t>(ceil_count(percent / 100.0 * static_cast<double>(n)), 1, n);
}

/// The top-p% most relevant rows. Ties on score prefer the higher mean truth,
/// then the lower origin, so the selection does not depend on row order.
inline std::vector<char> percentile_mask(const EvalFrame& fr, double percent) {
  const std::size_t n = fr.size();
  const std::size_t take = percentile_subset_size(n, percent);
  std::vector<double> truth_mean(n);
  for (std::size_t i = 0; i < n; ++i) truth_mean[i] = fr.truths.row(static_cast<Eigen::Index>(i)).mean();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fr.scores[a] != fr.scores[b]) return fr.scores[a] > fr.scores[b];
    if (truth_mean[a] != truth_mean[b]) return truth_mean[a] > truth_mean[b];
    return fr.origins[a] < fr.origins[b];
  });
  std::vector<char> mask(n, 0);
  for (std::size_t k = 0; k < take; ++k) mask[order[k]] = 1;
  return mask;
}

/// RMSE over the top-p% samples by relevance.
inline double ser_percentile(const EvalFrame& fr, double percent) {
  fr.validate();
  if (fr.size() == 0) throw Error("ser_percentile: empty frame");
  return detail::masked_rmse(fr, percentile_mask(fr, percent), std::nullopt);
}

enum class StepMetric { rmse, ser_percentile };

/// A metric restricted to horizon step `step` (1-based). For SER-p% the
/// sample selection is the same as for the whole window.
inline double per_step(const EvalFrame& fr, StepMetric metric, std::size_t step, double percent = 5.0) {
  fr.validate();
  if (step < 1 || step > fr.horizon())
    throw Error("per_step: step " + std::to_string(step) + " outside horizon 1.." + std::to_string(fr.horizon()));
  const auto mask = metric == StepMetric::rmse ? std::vector<char>(fr.size(), 1) : percentile_mask(fr, percent);
  return detail::masked_rmse(fr, mask, step - 1);
}

inline constexpr std::array<double, 7> kSerPercents = {1, 2, 5, 10, 25, 50, 75};

struct MetricReport {
  double rmse = 0.0;
  SerThreshold ser_rt;
  std::array<double, kSerPercents.size()> ser_percentile{};
  std::vector<double> rmse_step;  // per horizon step
  std::vector<double> ser5_step;
};

inline MetricReport evaluate(const EvalFrame& fr, double threshold) {
  MetricReport r;
  r.rmse = rmse(fr);
  r.ser_rt = ser_threshold_full(fr, threshold);
  for (std::size_t k = 0; k < kSerPercents.size(); ++k) r.ser_percentile[k] = ser_percentile(fr, kSerPercents[k]);
  for (std::size_t s = 1; s <= fr.horizon(); ++s) {
    r.rmse_step.push_back(per_step(fr, StepMetric::rmse, s));
    r.ser5_step.push_back(per_step(fr, StepMetric::ser_percentile, s, 5.0));
  }
  return r;
}

}  // namespace tailcast
