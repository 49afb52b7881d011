#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/embedding.hpp"
#include "tailcast/relevance.hpp"

namespace tailcast {

enum class StrategyKind { none, replicate, smoter, smoter_bin, gan };

inline StrategyKind parse_strategy(const std::string& s) {
  if (s == "none") return StrategyKind::none;
  if (s == "replicate") return StrategyKind::replicate;
  if (s == "smoter") return StrategyKind::smoter;
  if (s == "smoter-bin") return StrategyKind::smoter_bin;
  if (s == "gan") return StrategyKind::gan;
  throw Error("unknown strategy '" + s + "' (expected none, replicate, smoter, smoter-bin or gan)");
}

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::none: return "none";
    case StrategyKind::replicate: return "replicate";
    case StrategyKind::smoter: return "smoter";
    case StrategyKind::smoter_bin: return "smoter-bin";
    case StrategyKind::gan: return "gan";
  }
  return "?";
}

/// Augmentation policy. An unset `over_ratio` means "balance": synthesize until
/// extremes roughly match the commons kept after undersampling.
struct ResampleStrategy {
  StrategyKind kind = StrategyKind::none;
  std::size_t k_neighbors = 5;
  std::optional<double> over_ratio;
  double under_fraction = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (k_neighbors < 1) throw Error("resample strategy: k_neighbors must be >= 1");
    if (over_ratio && !(*over_ratio >= 1.0)) throw Error("resample strategy: over_ratio must be >= 1");
    if (!(under_fraction > 0.0 && under_fraction <= 1.0))
      throw Error("resample strategy: under_fraction must lie in (0,1]");
  }

  /// Label used in reports, e.g. "smoter" or "smoter(k=3,over=2,under=0.5)".
  std::string label() const {
    std::string s = to_string(kind);
    if (kind == StrategyKind::none) return s;
    std::string args;
    if (k_neighbors != 5 && (kind == StrategyKind::smoter || kind == StrategyKind::smoter_bin))
      args += "k=" + std::to_string(k_neighbors);
    if (over_ratio) args += std::string(args.empty() ? "" : ",") + "over=" + format_double(*over_ratio);
    if (under_fraction != 1.0) args += std::string(args.empty() ? "" : ",") + "under=" + format_double(under_fraction);
    return args.empty() ? s : s + "(" + args + ")";
  }
};

/// Output of a resampler plus bookkeeping that belongs in run metadata.
struct Resampled {
  WindowDataset dataset;
  std::size_t kept_commons = 0;
  std::size_t extremes = 0;
  std::size_t synthetic = 0;
  std::size_t singleton_fallbacks = 0;
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// k nearest other members per row, by Euclidean distance on x ++ y; ties go
/// to the lower position. k is truncated to size-1.
inline std::vector<std::vector<std::size_t>> knn_table(const std::vector<std::vector<double>>& points, std::size_t k) {
  const std::size_t n = points.size();
  if (n < 2) throw Error("knn: need at least 2 extremes, got " + std::to_string(n));
  const std::size_t kk = std::min(k, n - 1);
  std::vector<std::vector<std::size_t>> table(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(squared_distance(points[i], points[j]), j);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(kk), cand.end());
    for (std::size_t m = 0; m < kk; ++m) table[i].push_back(cand[m].second);
  }
  return table;
}

inline std::vector<std::vector<std::size_t>> knn_extremes(const WindowDataset& extremes, std::size_t k) {
  std::vector<std::vector<double>> pts;
  pts.reserve(extremes.size());
  for (const auto& p : extremes) pts.push_back(flatten_pair(p));
  return knn_table(pts, k);
}

/// (1 - r) * seed + r * neighbor on inputs and targets alike; exact at r = 0 and r = 1.
inline WindowPair interpolate_pair(const WindowPair& seed, const WindowPair& neighbor, double r) {
  if (seed.x.size() != neighbor.x.size() || seed.y.size() != neighbor.y.size())
    throw Error("interpolate_pair: dimension mismatch");
  WindowPair out;
  out.x.resize(seed.x.size());
  out.y.resize(seed.y.size());
  for (std::size_t i = 0; i < seed.x.size(); ++i) out.x[i] = (1.0 - r) * seed.x[i] + r * neighbor.x[i];
  for (std::size_t i = 0; i < seed.y.size(); ++i) out.y[i] = (1.0 - r) * seed.y[i] + r * neighbor.y[i];
  out.origin = kSyntheticOrigin;
  out.provenance = {Source::smoter, seed.origin, neighbor.origin};
  return out;
}

/// Maximal runs of extreme windows whose origins step by exactly 1.
/// Members are positions in `part.extremes`.
struct Bin {
  std::vector<std::size_t> members;
};

inline std::vector<Bin> compute_bins(const Partition& part) {
  std::vector<Bin> bins;
  const auto& ex = part.extremes;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (i == 0 || ex[i].origin != ex[i - 1].origin + 1) bins.emplace_back();
    bins.back().members.push_back(i);
  }
  return bins;
}

namespace detail {

inline WindowDataset base_set(const Partition& part, const ResampleStrategy& strat, std::mt19937_64& rng,
                              std::size_t& kept) {
  const std::size_t n_commons = part.commons.size();
  kept = ceil_count(strat.under_fraction * static_cast<double>(n_commons));
  std::vector<std::size_t> keep(n_commons);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (kept < n_commons) {
    // partial Fisher-Yates, then restore temporal order
    for (std::size_t i = 0; i < kept; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_commons - 1);
      std::swap(keep[i], keep[pick(rng)]);
    }
    keep.resize(kept);
    std::sort(keep.begin(), keep.end());
  }
  // merge kept commons and all extremes back into dataset order
  WindowDataset out = part.extremes.empty_like();
  out.reserve(kept + part.extremes.size());
  std::size_t c = 0, e = 0;
  while (c < keep.size() || e < part.extremes.size()) {
    const bool take_common =
        e == part.extremes.size() ||
        (c < keep.size() && part.common_index[keep[c]] < part.extreme_index[e]);
    if (take_common) {
      out.push_back(part.commons[keep[c++]]);
    } else {
      out.push_back(part.extremes[e++]);
    }
  }
  return out;
}

inline std::size_t synthetic_count(const ResampleStrategy& strat, std::size_t kept, std::size_t extremes) {
  if (extremes == 0) return 0;
  const double ratio = strat.over_ratio
                           ? *strat.over_ratio
                           : std::max(1.0, static_cast<double>(kept) / static_cast<double>(extremes));
  return ceil_count((ratio - 1.0) * static_cast<double>(extremes));
}

}  // namespace detail

/// Number of synthetic windows a strategy adds to a partition.
inline std::size_t planned_synthetic(const Partition& part, const ResampleStrategy& strat) {
  return detail::synthetic_count(strat, ceil_count(strat.under_fraction * static_cast<double>(part.commons.size())),
                                 part.extremes.size());
}

/// Undersampled commons, all extremes, and exact copies of random extremes.
inline Resampled replicate_oversample(const Partition& part, const ResampleStrategy& strat) {
  strat.validate();
  if (part.extremes.empty()) throw Error("replicate_oversample: no extremes");
  std::mt19937_64 rng(strat.rng_seed);
  std::size_t kept = 0;
  Resampled res{detail::base_set(part, strat, rng, kept)};
  res.kept_commons = kept;
  res.extremes = part.extremes.size();
  res.synthetic = detail::synthetic_count(strat, res.kept_commons, res.extremes);
  std::uniform_int_distribution<std::size_t> pick(0, part.extremes.size() - 1);
  for (std::size_t s = 0; s < res.synthetic; ++s) {
    WindowPair copy = part.extremes[pick(rng)];
    copy.provenance = {Source::replicate, copy.origin, -1};
    copy.origin = kSyntheticOrigin;
    res.dataset.push_back(std::move(copy));
  }
  return res;
}

/// SMOTE for regression: each synthetic interpolates a uniformly drawn extreme
/// seed towards one of its k nearest extremes with r ~ U(0,1).
inline Resampled smoter(const Partition& part, const ResampleStrategy& strat) {
  strat.validate();
  if (part.extremes.size() < 2)
    throw Error("smoter: need at least 2 extremes, got " + std::to_string(part.extremes.size()));
  std::mt19937_64 rng(strat.rng_seed);
  std::size_t kept = 0;
  Resampled res{detail::base_set(part, strat, rng, kept)};
  res.kept_commons = kept;
  res.extremes = part.extremes.size();
  res.synthetic = detail::synthetic_count(strat, res.kept_commons, res.extremes);
  const auto table = knn_extremes(part.extremes, strat.k_neighbors);
  std::uniform_int_distribution<std::size_t> pick_seed(0, part.extremes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < res.synthetic; ++s) {
    const std::size_t seed = pick_seed(rng);
    const auto& nbrs = table[seed];
    std::uniform_int_distribution<std::size_t> pick_nbr(0, nbrs.size() - 1);
    const std::size_t nb = nbrs[pick_nbr(rng)];
    const double r = unit(rng);
    res.dataset.push_back(interpolate_pair(part.extremes[seed], part.extremes[nb], r));
  }
  return res;
}

/// SMOTE-R restricted to bins of consecutive extremes: seed and neighbour come
/// from the same bin. Seeds are uniform over extremes (so bins are picked in
/// proportion to their size); a seed alone in its bin is copied instead.
inline Resampled smoter_bin(const Partition& part, const ResampleStrategy& strat) {
  strat.validate();
  if (part.extremes.empty()) throw Error("smoter_bin: no extremes");
  std::mt19937_64 rng(strat.rng_seed);
  std::size_t kept = 0;
  Resampled res{detail::base_set(part, strat, rng, kept)};
  res.kept_commons = kept;
  res.extremes = part.extremes.size();
  res.synthetic = detail::synthetic_count(strat, res.kept_commons, res.extremes);

  const auto bins = compute_bins(part);
  std::vector<std::size_t> bin_of(part.extremes.size());
  std::vector<std::vector<std::size_t>> neighbors(part.extremes.size());
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const auto& members = bins[b].members;
    for (std::size_t m : members) bin_of[m] = b;
    if (members.size() < 2) continue;
    std::vector<std::vector<double>> pts;
    for (std::size_t m : members) pts.push_back(flatten_pair(part.extremes[m]));
    const auto local = knn_table(pts, strat.k_neighbors);
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j : local[i]) neighbors[members[i]].push_back(members[j]);
  }

  std::uniform_int_distribution<std::size_t> pick_seed(0, part.extremes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < res.synthetic; ++s) {
    const std::size_t seed = pick_seed(rng);
    const auto& nbrs = neighbors[seed];
    if (nbrs.empty()) {
      WindowPair copy = part.extremes[seed];
      copy.provenance = {Source::replicate, copy.origin, -1};
      copy.origin = kSyntheticOrigin;
      res.dataset.push_back(std::move(copy));
      ++res.singleton_fallbacks;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_nbr(0, nbrs.size() - 1);
    const std::size_t nb = nbrs[pick_nbr(rng)];
    const double r = unit(rng);
    WindowPair syn = interpolate_pair(part.extremes[seed], part.extremes[nb], r);
    syn.provenance.source = Source::smoter_bin;
    res.dataset.push_back(std::move(syn));
  }
  return res;
}

/// Training set without augmentation: undersampled commons plus extremes.
inline Resampled no_resample(const Partition& part, const ResampleStrategy& strat) {
  strat.validate();
  std::mt19937_64 rng(strat.rng_seed);
  std::size_t kept = 0;
  Resampled res{detail::base_set(part, strat, rng, kept)};
  res.kept_commons = kept;
  res.extremes = part.extremes.size();
  return res;
}

}  // namespace tailcast
