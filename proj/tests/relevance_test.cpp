#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tailcast/relevance.hpp"

namespace tc = tailcast;

namespace {

tc::RelevanceFunction make(std::vector<tc::ControlPoint> pts) { return tc::build_pchip(tc::ControlPoints(std::move(pts))); }

/// Random knots with relevance that falls to a valley and rises again.
tc::ControlPoints random_valley_knots(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(2, 7);
  const int n = count(rng);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = u(rng);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.size() < 2) xs = {0.0, 1.0};
  std::vector<double> rs(xs.size());
  for (auto& r : rs) r = u(rng);
  std::vector<tc::ControlPoint> pts;
  for (std::size_t k = 0; k < xs.size(); ++k) pts.push_back({xs[k], rs[k]});
  return tc::ControlPoints(pts);
}

}  // namespace

TEST(Percentile, LinearBetweenClosestRanks) {
  std::vector<double> v{0, 0.2, 0.3, 0.45, 1};
  EXPECT_DOUBLE_EQ(tc::percentile(v, 0.25), 0.2);
  EXPECT_DOUBLE_EQ(tc::percentile(v, 0.5), 0.3);
  EXPECT_DOUBLE_EQ(tc::percentile(v, 0.75), 0.45);
  EXPECT_DOUBLE_EQ(tc::percentile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_THROW(tc::percentile({}, 0.5), tc::Error);
}

TEST(ControlPoints, Validation) {
  EXPECT_THROW(tc::ControlPoints({{0, 0}}), tc::Error);
  EXPECT_THROW(tc::ControlPoints({{0, 0}, {0, 1}}), tc::Error);
  EXPECT_THROW(tc::ControlPoints({{0, 0}, {1, 1.5}}), tc::Error);
  EXPECT_NO_THROW(tc::ControlPoints({{0, 0}, {1, 1}}));
}

TEST(Boxplot, UpperTailFromQuartiles) {
  auto cp = tc::boxplot_control_points(tc::TimeSeries({0, 0.2, 0.3, 0.45, 1}), tc::Tail::upper);
  ASSERT_EQ(cp.size(), 2u);
  EXPECT_DOUBLE_EQ(cp[0].value, 0.3);
  EXPECT_EQ(cp[0].relevance, 0.0);
  EXPECT_DOUBLE_EQ(cp[1].value, 0.825);
  EXPECT_EQ(cp[1].relevance, 1.0);
}

TEST(Boxplot, FenceClampedToObservedMaximum) {
  auto cp = tc::boxplot_control_points(tc::TimeSeries({0, 0.1, 0.2, 0.3, 0.4}), tc::Tail::upper);
  EXPECT_DOUBLE_EQ(cp[1].value, 0.4);
}

TEST(Boxplot, SymmetricBothTails) {
  std::vector<double> v;
  for (int i = 0; i <= 20; ++i) v.push_back(i / 20.0);
  v.push_back(0.02);
  v.push_back(0.98);
  auto cp = tc::boxplot_control_points(tc::TimeSeries(v), tc::Tail::both, 0.5);
  ASSERT_EQ(cp.size(), 3u);
  EXPECT_DOUBLE_EQ(cp[1].value, 0.5);
  EXPECT_EQ(cp[0].relevance, 1.0);
  EXPECT_EQ(cp[2].relevance, 1.0);
  EXPECT_NEAR(cp[0].value + cp[2].value, 1.0, 1e-12);
}

TEST(Boxplot, LowerTail) {
  auto cp = tc::boxplot_control_points(tc::TimeSeries({0, 0.55, 0.7, 0.8, 1}), tc::Tail::lower);
  ASSERT_EQ(cp.size(), 2u);
  EXPECT_DOUBLE_EQ(cp[0].value, std::max(0.55 - 1.5 * 0.25, 0.0));
  EXPECT_EQ(cp[0].relevance, 1.0);
  EXPECT_DOUBLE_EQ(cp[1].value, 0.7);
}

TEST(Boxplot, ConstantSeriesIsError) {
  EXPECT_THROW(tc::boxplot_control_points(tc::TimeSeries({0.5, 0.5, 0.5, 0.5}), tc::Tail::upper), tc::Error);
}

TEST(Pchip, TwoPointsAreLinear) {
  auto f = make({{0, 0}, {1, 1}});
  EXPECT_DOUBLE_EQ(f(0.5), 0.5);
  EXPECT_DOUBLE_EQ(f(0.25), 0.25);
}

TEST(Pchip, FlatSegmentStaysFlat) {
  auto f = make({{0, 0}, {0.5, 0}, {1, 1}});
  EXPECT_EQ(f(0.25), 0.0);
  EXPECT_EQ(f(0.1), 0.0);
}

// Reference values from scipy.interpolate.PchipInterpolator.
TEST(Pchip, MatchesReferenceInterpolator) {
  auto f = make({{0, 0}, {0.5, 0.2}, {1, 1}});
  EXPECT_NEAR(f(0.75), 0.5025, 1e-10);
  EXPECT_NEAR(f(0.25), 0.060000000000000005, 1e-10);

  auto g = make({{0.1, 1}, {0.3, 0}, {0.45, 0.4}, {0.9, 1}});
  EXPECT_NEAR(g(0.2), 0.2654761904761904, 1e-10);
  EXPECT_NEAR(g(0.35), 0.0827886710239651, 1e-10);
  EXPECT_NEAR(g(0.6), 0.6699346405228759, 1e-10);
  EXPECT_NEAR(g(0.8), 0.936649721617042, 1e-10);
}

TEST(Pchip, ConstantTails) {
  auto f = make({{0.2, 0.1}, {0.6, 0.9}});
  EXPECT_EQ(f(-5.0), 0.1);
  EXPECT_EQ(f(0.0), 0.1);
  EXPECT_EQ(f(0.9), 0.9);
  EXPECT_EQ(f(1e9), 0.9);
}

TEST(Pchip, KnotsExactAndRangeBounded) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> probe(-0.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cp = random_valley_knots(rng);
    tc::RelevanceFunction f(cp);
    for (const auto& k : cp.points()) EXPECT_NEAR(f(k.value), k.relevance, 1e-12);
    for (int i = 0; i < 1000; ++i) {
      const double y = f(probe(rng));
      ASSERT_GE(y, 0.0);
      ASSERT_LE(y, 1.0);
    }
  }
}

TEST(Pchip, MonotoneBetweenKnots) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cp = random_valley_knots(rng);
    tc::RelevanceFunction f(cp);
    for (std::size_t k = 0; k + 1 < cp.size(); ++k) {
      const double a = cp[k].value, b = cp[k + 1].value;
      const bool up = cp[k + 1].relevance >= cp[k].relevance;
      double prev = f(a);
      for (int i = 1; i <= 200; ++i) {
        const double y = f(a + (b - a) * i / 200.0);
        if (up) {
          ASSERT_GE(y, prev - 1e-15);
        } else {
          ASSERT_LE(y, prev + 1e-15);
        }
        prev = y;
      }
    }
  }
}

TEST(WindowRelevance, Aggregators) {
  auto f = make({{0, 0}, {1, 1}});
  std::vector<double> y{0.2, 0.9, 0.4};
  EXPECT_DOUBLE_EQ(tc::window_relevance(f, y, tc::Aggregator::max), 0.9);
  EXPECT_DOUBLE_EQ(tc::window_relevance(f, y, tc::Aggregator::avg), 0.5);
  EXPECT_DOUBLE_EQ(tc::window_relevance(f, y, tc::Aggregator::first), 0.2);
  EXPECT_DOUBLE_EQ(tc::window_relevance(f, y, tc::Aggregator::min), 0.2);
}

TEST(WindowRelevance, AggregatorDominance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto f = make({{0.3, 0}, {0.7, 0.6}, {0.95, 1}});
  for (int i = 0; i < 500; ++i) {
    std::vector<double> y(5);
    for (auto& v : y) v = u(rng);
    const double lo = tc::window_relevance(f, y, tc::Aggregator::min);
    const double mid = tc::window_relevance(f, y, tc::Aggregator::avg);
    const double hi = tc::window_relevance(f, y, tc::Aggregator::max);
    EXPECT_LE(lo, mid + 1e-15);
    EXPECT_LE(mid, hi + 1e-15);
  }
}

TEST(Aggregator, ParseRoundTrip) {
  for (auto a : {tc::Aggregator::max, tc::Aggregator::min, tc::Aggregator::avg, tc::Aggregator::first})
    EXPECT_EQ(tc::parse_aggregator(tc::to_string(a)), a);
  EXPECT_THROW(tc::parse_aggregator("median"), tc::Error);
}

TEST(Partition, BoundaryIsInclusive) {
  tc::WindowDataset ds(1, 1);
  for (int i = 0; i < 3; ++i) ds.push_back({{0.0}, {0.0}, i, {}});
  auto part = tc::partition_by_scores(ds, {0.65, 0.7, 0.95}, 0.7);
  EXPECT_EQ(part.extreme_index, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(part.common_index, (std::vector<std::size_t>{0}));
  auto all = tc::partition_by_scores(ds, {0.65, 0.7, 0.95}, 0.0);
  EXPECT_EQ(all.extremes.size(), 3u);
  EXPECT_DOUBLE_EQ(all.extreme_fraction(), 1.0);
}

TEST(Partition, TotalDisjointOrdered) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto f = make({{0.4, 0}, {0.9, 1}});
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(60);
    for (auto& x : v) x = u(rng);
    auto ds = tc::embed(tc::TimeSeries(v), 3, 2);
    const double rt = u(rng);
    auto part = tc::partition(ds, f, rt);
    ASSERT_EQ(part.extremes.size() + part.commons.size(), ds.size());
    std::vector<std::size_t> all(part.extreme_index);
    all.insert(all.end(), part.common_index.begin(), part.common_index.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
    ASSERT_TRUE(std::is_sorted(part.extreme_index.begin(), part.extreme_index.end()));
    for (std::size_t i = 0; i < part.extremes.size(); ++i) {
      EXPECT_GE(tc::window_relevance(f, part.extremes[i].y), rt);
      EXPECT_EQ(part.extremes[i], ds[part.extreme_index[i]]);
    }
    for (const auto& w : part.commons) EXPECT_LT(tc::window_relevance(f, w.y), rt);
  }
}

TEST(ThresholdToValue, LinearInverse) {
  auto f = make({{0, 0}, {1, 1}});
  EXPECT_NEAR(tc::threshold_to_value(f, 0.7, tc::Tail::upper), 0.7, 1e-9);
}

TEST(ThresholdToValue, KnotAtFullRelevance) {
  auto f = make({{0.3, 0}, {0.825, 1}});
  EXPECT_NEAR(tc::threshold_to_value(f, 1.0, tc::Tail::upper), 0.825, 1e-9);
}

TEST(ThresholdToValue, LowerTail) {
  auto f = make({{0.1, 1}, {0.5, 0}});
  const double v = tc::threshold_to_value(f, 0.6, tc::Tail::lower);
  EXPECT_GE(f(v), 0.6);
  EXPECT_LT(f(v + 1e-6), 0.6);
}

TEST(ThresholdToValue, BracketsRandomKnots) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(4), rs(4);
    for (auto& x : xs) x = u(rng);
    for (auto& r : rs) r = u(rng);
    std::sort(xs.begin(), xs.end());
    std::sort(rs.begin(), rs.end());
    rs[0] = 0.0;
    if (std::adjacent_find(xs.begin(), xs.end()) != xs.end()) continue;
    std::vector<tc::ControlPoint> pts;
    for (int k = 0; k < 4; ++k) pts.push_back({xs[k], rs[k]});
    auto f = make(pts);
    const double rt = u(rng) * rs.back();
    const double v = tc::threshold_to_value(f, rt, tc::Tail::upper);
    EXPECT_GE(f(v), rt);
    EXPECT_LT(f(v - 1e-6), rt);
    ++checked;
  }
  EXPECT_GT(checked, 150);
}

TEST(ThresholdToValue, UnreachableIsError) {
  auto f = make({{0, 0}, {1, 0.5}});
  EXPECT_THROW(tc::threshold_to_value(f, 0.7, tc::Tail::upper), tc::Error);
  EXPECT_THROW(tc::threshold_to_value(f, 0.2, tc::Tail::both), tc::Error);
}

TEST(PartitionCsv, Columns) {
  const auto dir = tc::testing::scratch_dir();
  tc::WindowDataset ds(1, 1);
  for (int i = 0; i < 2; ++i) ds.push_back({{0.0}, {0.0}, i, {}});
  auto part = tc::partition_by_scores(ds, {0.1, 0.9}, 0.5);
  tc::write_csv((dir / "p.csv").string(), ds, part);
  auto t = tc::csv::read((dir / "p.csv").string());
  EXPECT_EQ(t.header, (std::vector<std::string>{"origin", "score", "class"}));
  EXPECT_EQ(t.rows[1][2], "extreme");
}
