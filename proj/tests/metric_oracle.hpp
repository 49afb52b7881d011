#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "tailcast/metrics.hpp"

// Naive reference implementations of the error metrics, written independently
// of the library: plain loops over rows and columns.
namespace tailcast::testing {

inline double naive_rmse_rows(const EvalFrame& fr, const std::vector<std::size_t>& rows) {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i : rows)
    for (Eigen::Index j = 0; j < fr.truths.cols(); ++j) {
      const double e = fr.predictions(static_cast<Eigen::Index>(i), j) - fr.truths(static_cast<Eigen::Index>(i), j);
      s += e * e;
      ++k;
    }
  return std::sqrt(s / static_cast<double>(k));
}

inline double naive_rmse(const EvalFrame& fr) {
  std::vector<std::size_t> rows(fr.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return naive_rmse_rows(fr, rows);
}

inline double naive_ser_threshold(const EvalFrame& fr, double rt) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fr.size(); ++i)
    if (fr.scores[i] >= rt) rows.push_back(i);
  return rows.empty() ? std::nan("") : naive_rmse_rows(fr, rows);
}

/// Selection by repeated arg-max: highest score, then highest truth mean,
/// then lowest origin.
inline double naive_ser_percentile(const EvalFrame& fr, double percent) {
  const std::size_t n = fr.size();
  std::size_t take = static_cast<std::size_t>(std::ceil(percent * static_cast<double>(n) / 100.0 - 1e-9));
  take = std::clamp<std::size_t>(take, 1, n);
  std::vector<char> used(n, 0);
  std::vector<std::size_t> rows;
  auto mean = [&](std::size_t i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < fr.truths.cols(); ++j) s += fr.truths(static_cast<Eigen::Index>(i), j);
    return s / static_cast<double>(fr.truths.cols());
  };
  for (std::size_t k = 0; k < take; ++k) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      if (best == n) {
        best = i;
        continue;
      }
      const bool better = fr.scores[i] > fr.scores[best] ||
                          (fr.scores[i] == fr.scores[best] &&
                           (mean(i) > mean(best) || (mean(i) == mean(best) && fr.origins[i] < fr.origins[best])));
      if (better) best = i;
    }
    used[best] = 1;
    rows.push_back(best);
  }
  return naive_rmse_rows(fr, rows);
}

inline double naive_step_rmse(const EvalFrame& fr, std::size_t step) {
  double s = 0.0;
  for (std::size_t i = 0; i < fr.size(); ++i) {
    const double e = fr.predictions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(step - 1)) -
                     fr.truths(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(step - 1));
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(fr.size()));
}

/// Random frame with n rows; scores are drawn from a small set so ties occur.
inline EvalFrame random_frame(std::mt19937_64& rng, std::size_t n, std::size_t horizon) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EvalFrame fr;
  fr.truths.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(horizon));
  fr.predictions.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(horizon));
  for (Eigen::Index i = 0; i < fr.truths.size(); ++i) {
    fr.truths.data()[i] = u(rng);
    fr.predictions.data()[i] = u(rng);
  }
  const bool coarse = u(rng) < 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    fr.scores.push_back(coarse ? std::floor(u(rng) * 4) / 4 : u(rng));
    fr.origins.push_back(static_cast<std::int64_t>(i));
  }
  std::shuffle(fr.origins.begin(), fr.origins.end(), rng);
  return fr;
}

}  // namespace tailcast::testing
