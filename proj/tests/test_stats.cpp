#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "semtopo/stats.hpp"
#include "support.hpp"

using namespace semtopo;

TEST(Summary, KnownSample) {
  const std::vector<double> v{4, 1, 3, 2, 5};
  const auto s = summarize(v);
  EXPECT_EQ(s.count, 5u);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.q25, 2.0);
  EXPECT_DOUBLE_EQ(s.q75, 4.0);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.max, 5.0);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(s.iqr(), 2.0);
}

TEST(Summary, LinearInterpolation) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.q25, 1.75);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.q75, 3.25);
}

TEST(Summary, SingleValue) {
  const std::vector<double> v{0.3};
  const auto s = summarize(v);
  EXPECT_EQ(s.q25, 0.3);
  EXPECT_EQ(s.q75, 0.3);
  EXPECT_EQ(s.stddev, 0.0);
}

TEST(IqrDisjoint, Cases) {
  Summary a, b;
  a.q25 = 0.1, a.q75 = 0.2;
  b.q25 = 0.25, b.q75 = 0.3;
  EXPECT_TRUE(iqr_disjoint(a, b));
  EXPECT_TRUE(iqr_disjoint(b, a));
  b.q25 = 0.15;
  EXPECT_FALSE(iqr_disjoint(a, b));
}

TEST(Kde, IntegratesToOne) {
  auto rng = testgen::rng_for(4);
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(testgen::uniform(rng, 0.2, 0.6));
  const auto kde = gaussian_kde(v, 512);
  double area = 0;
  for (std::size_t i = 1; i < kde.x.size(); ++i)
    area += 0.5 * (kde.density[i] + kde.density[i - 1]) * (kde.x[i] - kde.x[i - 1]);
  EXPECT_NEAR(area, 1.0, 0.01);
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(kde.bandwidth, s.stddev * std::pow(200.0, -0.2));
}

TEST(Kde, SingleValueUsesBandwidthFloor) {
  const std::vector<double> v{0.42};
  const auto kde = gaussian_kde(v, 64);
  EXPECT_EQ(kde.bandwidth, kBandwidthFloor);
  const auto peak = std::max_element(kde.density.begin(), kde.density.end());
  EXPECT_NEAR(*peak, 1.0 / (kBandwidthFloor * std::sqrt(2 * M_PI)), 5.0);
  for (double d : kde.density) EXPECT_TRUE(std::isfinite(d));
}

TEST(Kde, EmptyIsAnError) {
  EXPECT_THROW(gaussian_kde(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(histogram(std::vector<double>{}), InvalidArgument);
  EXPECT_EQ(summarize(std::vector<double>{}).count, 0u);
}

TEST(Histogram, CountsEverything) {
  auto rng = testgen::rng_for(5);
  std::vector<double> v;
  for (int i = 0; i < 333; ++i) v.push_back(testgen::uniform(rng, -1, 1));
  const auto h = histogram(v, 7);
  ASSERT_EQ(h.edges.size(), 8u);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 333u);
  EXPECT_DOUBLE_EQ(h.edges.front(), *std::min_element(v.begin(), v.end()));
  EXPECT_DOUBLE_EQ(h.edges.back(), *std::max_element(v.begin(), v.end()));
}

TEST(Histogram, ConstantSample) {
  const std::vector<double> v{1.0, 1.0, 1.0};
  const auto h = histogram(v, 4);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 3u);
  EXPECT_LT(h.edges.front(), 1.0);
  EXPECT_GT(h.edges.back(), 1.0);
}
