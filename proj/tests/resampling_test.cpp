#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tailcast/resampling.hpp"

namespace tc = tailcast;

namespace {

tc::WindowPair pair_at(std::int64_t origin, std::vector<double> x, std::vector<double> y) {
  return {std::move(x), std::move(y), origin, {}};
}

/// Dataset whose windows carry the given origins; extreme iff listed.
tc::Partition partition_with(const std::vector<std::int64_t>& origins, const std::set<std::int64_t>& extreme,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tc::WindowDataset ds(3, 2);
  std::vector<double> scores;
  for (auto o : origins) {
    ds.push_back(pair_at(o, {u(rng), u(rng), u(rng)}, {u(rng), u(rng)}));
    scores.push_back(extreme.count(o) ? 0.9 : 0.1);
  }
  return tc::partition_by_scores(ds, scores, 0.5);
}

tc::Partition random_partition(std::mt19937_64& rng, std::size_t min_extremes = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(20, 80);
  for (;;) {
    const std::size_t n = len(rng);
    const double p = 0.1 + 0.5 * u(rng);
    std::vector<std::int64_t> origins;
    std::set<std::int64_t> ex;
    bool in_run = false;
    for (std::size_t i = 0; i < n; ++i) {
      origins.push_back(static_cast<std::int64_t>(i));
      in_run = u(rng) < (in_run ? 0.7 : p * 0.5);
      if (in_run) ex.insert(static_cast<std::int64_t>(i));
    }
    auto part = partition_with(origins, ex, rng);
    if (part.extremes.size() >= min_extremes) return part;
  }
}

tc::ResampleStrategy random_strategy(tc::StrategyKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tc::ResampleStrategy s;
  s.kind = kind;
  s.k_neighbors = 1 + rng() % 6;
  if (u(rng) < 0.7) s.over_ratio = 1.0 + 3.0 * u(rng);
  s.under_fraction = u(rng) < 0.5 ? 1.0 : 0.05 + 0.95 * u(rng);
  s.rng_seed = rng();
  return s;
}

std::size_t expected_size(const tc::Partition& part, const tc::ResampleStrategy& s) {
  return tc::ceil_count(s.under_fraction * static_cast<double>(part.commons.size())) + part.extremes.size() +
         tc::planned_synthetic(part, s);
}

const tc::WindowPair* find_origin(const tc::WindowDataset& ds, std::int64_t origin) {
  for (const auto& p : ds)
    if (p.origin == origin) return &p;
  return nullptr;
}

}  // namespace

TEST(Knn, SmallExample) {
  auto t = tc::knn_table({{0, 0}, {1, 0}, {10, 0}}, 1);
  EXPECT_EQ(t, (std::vector<std::vector<std::size_t>>{{1}, {0}, {1}}));
}

TEST(Knn, TruncatesK) {
  auto t = tc::knn_table({{0}, {1}, {3}}, 5);
  for (const auto& row : t) EXPECT_EQ(row.size(), 2u);
}

TEST(Knn, NeedsTwoPoints) { EXPECT_THROW(tc::knn_table({{0}}, 1), tc::Error); }

TEST(Knn, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tc::WindowDataset ds(3, 2);
  for (int i = 0; i < 20; ++i) ds.push_back(pair_at(i, {u(rng), u(rng), u(rng)}, {u(rng), u(rng)}));
  auto t = tc::knn_extremes(ds, 3);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j == i) continue;
      double s = 0;
      auto a = tc::flatten_pair(ds[i]), b = tc::flatten_pair(ds[j]);
      for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
      all.emplace_back(std::sqrt(s), j);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> want{all[0].second, all[1].second, all[2].second};
    EXPECT_EQ(t[i], want);
  }
}

TEST(Interpolate, Midpoint) {
  auto out = tc::interpolate_pair(pair_at(3, {0.2, 0.4}, {0.6}), pair_at(7, {0.6, 0.8}, {1.0}), 0.5);
  EXPECT_NEAR(out.x[0], 0.4, 1e-15);
  EXPECT_NEAR(out.x[1], 0.6, 1e-15);
  EXPECT_NEAR(out.y[0], 0.8, 1e-15);
  EXPECT_EQ(out.origin, tc::kSyntheticOrigin);
  EXPECT_EQ(out.provenance, (tc::Provenance{tc::Source::smoter, 3, 7}));
}

TEST(Interpolate, Endpoints) {
  auto a = pair_at(1, {0.1, 0.9}, {0.3});
  auto b = pair_at(2, {0.7, 0.2}, {0.5});
  auto at0 = tc::interpolate_pair(a, b, 0.0);
  auto at1 = tc::interpolate_pair(a, b, 1.0);
  EXPECT_EQ(at0.x, a.x);
  EXPECT_EQ(at0.y, a.y);
  EXPECT_EQ(at1.x, b.x);
  EXPECT_EQ(at1.y, b.y);
}

TEST(Interpolate, SegmentRatio) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    auto a = pair_at(0, {u(rng), u(rng)}, {u(rng), u(rng)});
    auto b = pair_at(1, {u(rng), u(rng)}, {u(rng), u(rng)});
    const double r = u(rng);
    auto s = tc::interpolate_pair(a, b, r);
    const double ratio = std::sqrt(tc::squared_distance(tc::flatten_pair(s), tc::flatten_pair(a))) /
                         std::sqrt(tc::squared_distance(tc::flatten_pair(b), tc::flatten_pair(a)));
    EXPECT_NEAR(ratio, r, 1e-10);
  }
}

TEST(Interpolate, DimensionMismatch) {
  EXPECT_THROW(tc::interpolate_pair(pair_at(0, {0.1}, {0.2}), pair_at(1, {0.1, 0.2}, {0.3}), 0.5), tc::Error);
}

TEST(Bins, ConsecutiveRuns) {
  std::mt19937_64 rng(23);
  std::vector<std::int64_t> origins;
  for (int i = 0; i < 15; ++i) origins.push_back(i);
  auto part = partition_with(origins, {3, 4, 5, 9, 12, 13}, rng);
  auto bins = tc::compute_bins(part);
  ASSERT_EQ(bins.size(), 3u);
  std::vector<std::vector<std::int64_t>> got;
  for (const auto& b : bins) {
    got.emplace_back();
    for (auto m : b.members) got.back().push_back(part.extremes[m].origin);
  }
  EXPECT_EQ(got, (std::vector<std::vector<std::int64_t>>{{3, 4, 5}, {9}, {12, 13}}));
}

TEST(Bins, AllExtremeAndAlternating) {
  std::mt19937_64 rng(24);
  std::vector<std::int64_t> origins{0, 1, 2, 3, 4, 5};
  EXPECT_EQ(tc::compute_bins(partition_with(origins, {0, 1, 2, 3, 4, 5}, rng)).size(), 1u);
  auto alt = tc::compute_bins(partition_with(origins, {0, 2, 4}, rng));
  ASSERT_EQ(alt.size(), 3u);
  for (const auto& b : alt) EXPECT_EQ(b.members.size(), 1u);
  EXPECT_TRUE(tc::compute_bins(partition_with(origins, {}, rng)).empty());
}

TEST(Smoter, CountingExample) {
  std::mt19937_64 rng(25);
  std::vector<std::int64_t> origins;
  std::set<std::int64_t> ex;
  for (int i = 0; i < 40; ++i) {
    origins.push_back(i);
    if (i % 4 == 0) ex.insert(i);
  }
  auto part = partition_with(origins, ex, rng);
  ASSERT_EQ(part.extremes.size(), 10u);
  tc::ResampleStrategy s{tc::StrategyKind::smoter, 5, 3.0, 1.0, 99};
  auto res = tc::smoter(part, s);
  EXPECT_EQ(res.synthetic, 20u);
  EXPECT_EQ(res.dataset.size(), part.commons.size() + 30);
}

TEST(Smoter, OverRatioOneIsIdentityOnExtremes) {
  std::mt19937_64 rng(26);
  auto part = random_partition(rng);
  tc::ResampleStrategy s{tc::StrategyKind::smoter, 5, 1.0, 0.5, 3};
  auto res = tc::smoter(part, s);
  EXPECT_EQ(res.synthetic, 0u);
  EXPECT_EQ(res.dataset, tc::no_resample(part, s).dataset);
}

TEST(Smoter, DefaultRatioBalancesClasses) {
  std::mt19937_64 rng(27);
  auto part = random_partition(rng);
  tc::ResampleStrategy s{tc::StrategyKind::smoter, 5, std::nullopt, 1.0, 3};
  auto res = tc::smoter(part, s);
  EXPECT_GE(res.extremes + res.synthetic, std::min(part.commons.size(), part.extremes.size()));
  if (part.commons.size() > part.extremes.size()) {
    EXPECT_EQ(res.extremes + res.synthetic, part.commons.size());
  }
}

TEST(Smoter, TooFewExtremes) {
  std::mt19937_64 rng(28);
  auto part = partition_with({0, 1, 2}, {1}, rng);
  EXPECT_THROW(tc::smoter(part, {tc::StrategyKind::smoter, 5, std::nullopt}), tc::Error);
  EXPECT_THROW(tc::smoter_bin(partition_with({0, 1}, {}, rng), {tc::StrategyKind::smoter_bin, 5, std::nullopt}), tc::Error);
  EXPECT_THROW(tc::replicate_oversample(partition_with({0, 1}, {}, rng), {tc::StrategyKind::replicate, 5, std::nullopt}), tc::Error);
}

TEST(Strategy, Validation) {
  EXPECT_THROW((tc::ResampleStrategy{tc::StrategyKind::smoter, 0, std::nullopt}.validate()), tc::Error);
  EXPECT_THROW((tc::ResampleStrategy{tc::StrategyKind::smoter, 5, 0.5}.validate()), tc::Error);
  EXPECT_THROW((tc::ResampleStrategy{tc::StrategyKind::smoter, 5, 2.0, 0.0}.validate()), tc::Error);
  EXPECT_THROW((tc::ResampleStrategy{tc::StrategyKind::smoter, 5, 2.0, 1.5}.validate()), tc::Error);
  EXPECT_EQ(tc::parse_strategy("smoter-bin"), tc::StrategyKind::smoter_bin);
  EXPECT_EQ((tc::ResampleStrategy{tc::StrategyKind::smoter, 3, 2.0}.label()), "smoter(k=3,over=2)");
}

TEST(SmoterBin, ConfinedToBins) {
  std::mt19937_64 rng(29);
  auto part = partition_with({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {3, 4, 9}, rng);
  tc::ResampleStrategy s{tc::StrategyKind::smoter_bin, 5, 20.0 / 3.0, 1.0, 5};
  auto res = tc::smoter_bin(part, s);
  ASSERT_EQ(res.synthetic, 17u);
  std::size_t copies = 0;
  for (const auto& p : res.dataset) {
    if (!p.provenance.synthetic()) continue;
    if (p.provenance.source == tc::Source::replicate) {
      EXPECT_EQ(p.provenance.seed_origin, 9);
      EXPECT_EQ(p.x, find_origin(part.extremes, 9)->x);
      ++copies;
    } else {
      const std::set<std::int64_t> bin{3, 4};
      EXPECT_TRUE(bin.count(p.provenance.seed_origin));
      EXPECT_TRUE(bin.count(p.provenance.neighbor_origin));
    }
  }
  EXPECT_EQ(copies, res.singleton_fallbacks);
  EXPECT_GT(copies, 0u);
}

TEST(SmoterBin, SingleBinMatchesSmoter) {
  std::mt19937_64 rng(30);
  auto part = partition_with({0, 1, 2, 3, 4, 5, 6, 7}, {2, 3, 4, 5, 6}, rng);
  tc::ResampleStrategy s{tc::StrategyKind::smoter, 2, 3.0, 1.0, 77};
  auto a = tc::smoter(part, s);
  s.kind = tc::StrategyKind::smoter_bin;
  auto b = tc::smoter_bin(part, s);
  ASSERT_EQ(a.dataset.size(), b.dataset.size());
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    EXPECT_EQ(a.dataset[i].x, b.dataset[i].x);
    EXPECT_EQ(a.dataset[i].y, b.dataset[i].y);
    EXPECT_EQ(a.dataset[i].provenance.seed_origin, b.dataset[i].provenance.seed_origin);
  }
}

TEST(Replicate, CopiesAreExact) {
  std::mt19937_64 rng(31);
  auto part = partition_with({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {0, 2, 4, 6, 8}, rng);
  tc::ResampleStrategy s{tc::StrategyKind::replicate, 5, 2.0, 1.0, 1};
  auto res = tc::replicate_oversample(part, s);
  EXPECT_EQ(res.synthetic, 5u);
  for (const auto& p : res.dataset) {
    if (!p.provenance.synthetic()) continue;
    const auto* src = find_origin(part.extremes, p.provenance.seed_origin);
    ASSERT_NE(src, nullptr);
    EXPECT_EQ(p.x, src->x);
    EXPECT_EQ(p.y, src->y);
  }
  s.over_ratio = 1.0;
  EXPECT_EQ(tc::replicate_oversample(part, s).synthetic, 0u);
}

TEST(Undersampling, KeepsOrderAndFraction) {
  std::mt19937_64 rng(32);
  auto part = random_partition(rng);
  tc::ResampleStrategy s{tc::StrategyKind::none, 5, std::nullopt, 0.3, 8};
  auto res = tc::no_resample(part, s);
  EXPECT_EQ(res.kept_commons, tc::ceil_count(0.3 * static_cast<double>(part.commons.size())));
  for (std::size_t i = 1; i < res.dataset.size(); ++i) EXPECT_LT(res.dataset[i - 1].origin, res.dataset[i].origin);
}

// Randomized property sweep over partitions and strategies.
TEST(ResamplingProperties, RandomizedPartitions) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    auto part = random_partition(rng);
    std::map<std::int64_t, std::size_t> bin_of;
    const auto bins = tc::compute_bins(part);
    for (std::size_t b = 0; b < bins.size(); ++b)
      for (auto m : bins[b].members) bin_of[part.extremes[m].origin] = b;

    for (auto kind : {tc::StrategyKind::replicate, tc::StrategyKind::smoter, tc::StrategyKind::smoter_bin}) {
      const auto s = random_strategy(kind, rng);
      auto run = [&] {
        switch (kind) {
          case tc::StrategyKind::replicate: return tc::replicate_oversample(part, s);
          case tc::StrategyKind::smoter: return tc::smoter(part, s);
          default: return tc::smoter_bin(part, s);
        }
      };
      const auto res = run();
      ASSERT_EQ(res.dataset.size(), expected_size(part, s)) << "trial " << trial;
      EXPECT_EQ(run().dataset, res.dataset);
      for (const auto& p : res.dataset) {
        if (!p.provenance.synthetic()) continue;
        const auto* seed = find_origin(part.extremes, p.provenance.seed_origin);
        ASSERT_NE(seed, nullptr);
        if (p.provenance.source == tc::Source::replicate) continue;
        const auto* nb = find_origin(part.extremes, p.provenance.neighbor_origin);
        ASSERT_NE(nb, nullptr);
        const auto v = tc::flatten_pair(p), a = tc::flatten_pair(*seed), b = tc::flatten_pair(*nb);
        for (std::size_t d = 0; d < v.size(); ++d) {
          EXPECT_GE(v[d], std::min(a[d], b[d]) - 1e-15);
          EXPECT_LE(v[d], std::max(a[d], b[d]) + 1e-15);
        }
        if (kind == tc::StrategyKind::smoter_bin) {
          EXPECT_EQ(bin_of.at(seed->origin), bin_of.at(nb->origin));
        }
      }
    }
  }
}
