#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tailcast/series.hpp"

namespace tc = tailcast;

TEST(LoadCsv, ReadsNamedColumn) {
  const auto dir = tc::testing::scratch_dir();
  tc::testing::write_text(dir / "a.csv", "v\n2\n4\n6\n");
  auto ts = tc::load_csv((dir / "a.csv").string(), "v");
  EXPECT_EQ(ts.values(), (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(ts.index(), (std::vector<std::int64_t>{0, 1, 2}));
  EXPECT_EQ(ts.name(), "v");
}

TEST(LoadCsv, ReadsColumnByPosition) {
  const auto dir = tc::testing::scratch_dir();
  tc::testing::write_text(dir / "a.csv", "t,v\n0,2\n1,4\n");
  auto ts = tc::load_csv((dir / "a.csv").string(), "1");
  EXPECT_EQ(ts.values(), (std::vector<double>{2, 4}));
}

TEST(LoadCsv, EmptyRowBecomesMissing) {
  const auto dir = tc::testing::scratch_dir();
  tc::testing::write_text(dir / "a.csv", "v\n2\n\n6\n");
  auto ts = tc::load_csv((dir / "a.csv").string(), "v");
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_TRUE(tc::is_missing(ts[1]));
  EXPECT_TRUE(ts.has_missing());
}

TEST(LoadCsv, UnparseableCellNamesRow) {
  const auto dir = tc::testing::scratch_dir();
  tc::testing::write_text(dir / "a.csv", "v\nabc\n");
  try {
    tc::load_csv((dir / "a.csv").string(), "v");
    FAIL() << "expected an error";
  } catch (const tc::Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, UnknownColumn) {
  const auto dir = tc::testing::scratch_dir();
  tc::testing::write_text(dir / "a.csv", "v\n1\n");
  EXPECT_THROW(tc::load_csv((dir / "a.csv").string(), "w"), tc::Error);
}

TEST(WriteCsv, RoundTripsValuesAndMissing) {
  const auto dir = tc::testing::scratch_dir();
  tc::TimeSeries ts({0.1, tc::kMissing, 1.0 / 3.0}, "x");
  tc::write_csv((dir / "o.csv").string(), ts);
  auto back = tc::load_csv((dir / "o.csv").string(), "x");
  EXPECT_EQ(back[0], 0.1);
  EXPECT_TRUE(tc::is_missing(back[1]));
  EXPECT_EQ(back[2], 1.0 / 3.0);
}

TEST(TimeSeries, RejectsBadIndex) {
  EXPECT_THROW(tc::TimeSeries({1, 2}, {0, 0}, "s"), tc::Error);
  EXPECT_THROW(tc::TimeSeries({1, 2}, {0}, "s"), tc::Error);
  EXPECT_THROW(tc::TimeSeries(std::vector<double>{}), tc::Error);
}

TEST(DropMissing, RemovesAndKeepsStamps) {
  auto out = tc::drop_missing(tc::TimeSeries({2, tc::kMissing, 6}));
  EXPECT_EQ(out.values(), (std::vector<double>{2, 6}));
  EXPECT_EQ(out.index(), (std::vector<std::int64_t>{0, 2}));
}

TEST(DropMissing, IdentityWithoutMissing) {
  tc::TimeSeries ts({2, 4, 6});
  auto out = tc::drop_missing(ts);
  EXPECT_EQ(out.values(), ts.values());
  EXPECT_EQ(out.index(), ts.index());
}

TEST(DropMissing, AllMissingIsError) {
  try {
    tc::drop_missing(tc::TimeSeries({tc::kMissing, tc::kMissing}));
    FAIL();
  } catch (const tc::Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty after cleaning"), std::string::npos);
  }
}

TEST(Scaler, FitApply) {
  tc::TimeSeries ts({2, 4, 6});
  auto s = tc::fit_scaler(ts);
  EXPECT_EQ(tc::apply_scaler(s, ts).values(), (std::vector<double>{0, 0.5, 1}));
}

TEST(Scaler, InvertRoundTrip) {
  tc::TimeSeries ts({-3.5, 0.25, 17.0, 4.0});
  auto s = tc::fit_scaler(ts);
  auto back = tc::invert_scaler(s, tc::apply_scaler(s, ts));
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_NEAR(back[i], ts[i], 1e-12);
}

TEST(Scaler, DoesNotClamp) {
  tc::Scaler s(2, 6);
  EXPECT_DOUBLE_EQ(s.apply(8), 1.5);
  EXPECT_DOUBLE_EQ(s.apply(0), -0.5);
}

TEST(Scaler, ConstantSeriesIsError) { EXPECT_THROW(tc::fit_scaler(tc::TimeSeries({3, 3, 3})), tc::Error); }

TEST(Split, Lengths) {
  auto ten = tc::split(tc::TimeSeries(std::vector<double>(10, 1.0)), 0.7);
  EXPECT_EQ(ten.train.size(), 7u);
  EXPECT_EQ(ten.test.size(), 3u);
  EXPECT_EQ(ten.test.index().front(), 7);
  auto three = tc::split(tc::TimeSeries({1, 2, 3}), 0.7);
  EXPECT_EQ(three.train.size(), 2u);
  EXPECT_EQ(three.test.size(), 1u);
  EXPECT_THROW(tc::split(tc::TimeSeries({1}), 0.7), tc::Error);
  EXPECT_THROW(tc::split(tc::TimeSeries({1, 2}), 1.0), tc::Error);
}
