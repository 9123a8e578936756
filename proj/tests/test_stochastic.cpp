#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "etfrp/stochastic.hpp"

using namespace etfrp;

namespace {

StochasticParams quiet() {
  StochasticParams p;
  p.rush_windows.clear();
  p.energy_noise_std = 0.0;
  return p;
}

}  // namespace

TEST(CounterStream, ValueDependsOnlyOnKeyAndIndex) {
  CounterStream a(99), b(99);
  for (int i = 0; i < 10; ++i) a.next_u64();
  EXPECT_EQ(a.at(3), b.at(3));
  EXPECT_EQ(a.next_u64(), b.at(10));
  EXPECT_NE(CounterStream(1).at(0), CounterStream(2).at(0));
}

TEST(CounterStream, UniformStaysInOpenInterval) {
  CounterStream s(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(CounterStream, NormalMoments) {
  CounterStream s(3);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(UniformIndex, CoversRangeWithoutBias) {
  CounterStream s(17);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 50000; ++i) ++hits[uniform_index(s, 5)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);
}

TEST(RandomStreams, NamedStreamsAreIndependent) {
  RandomStreams r(42);
  std::set<std::uint64_t> firsts;
  for (std::size_t i = 0; i < kStreamCount; ++i) firsts.insert(r.stream(static_cast<StreamId>(i)).at(0));
  EXPECT_EQ(firsts.size(), kStreamCount);
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    const auto id = static_cast<StreamId>(i);
    EXPECT_EQ(stream_from_name(stream_name(id)), id);
  }
  EXPECT_FALSE(stream_from_name("bogus").has_value());
}

TEST(RandomStreams, InjectionReproducesRecordedDraws) {
  auto p = StochasticParams{};
  p.unloading.stochastic = true;
  RandomStreams live(8);
  std::vector<double> values;
  for (int i = 0; i < 5; ++i) {
    values.push_back(sample_travel_time(1.5, 0.3 * i, p, live));
    values.push_back(sample_energy_coeff(1.7, 1.5, p, live));
    values.push_back(sample_unloading(p, live));
  }
  const auto log = live.take_log();
  EXPECT_TRUE(live.take_log().empty());

  RandomStreams replayed(12345);  // seed is irrelevant when injecting
  replayed.inject(log);
  std::vector<double> again;
  for (int i = 0; i < 5; ++i) {
    again.push_back(sample_travel_time(1.5, 0.3 * i, p, replayed));
    again.push_back(sample_energy_coeff(1.7, 1.5, p, replayed));
    again.push_back(sample_unloading(p, replayed));
  }
  EXPECT_EQ(values, again);
  EXPECT_EQ(replayed.take_log(), log);
  EXPECT_THROW(sample_unloading(p, replayed), ReplayExhausted);
}

TEST(RushOverlap, Examples) {
  const std::vector<RushWindow> morning{{7.0, 9.0}};
  const std::vector<RushWindow> both{{7.0, 9.0}, {16.0, 19.0}};
  EXPECT_DOUBLE_EQ(rush_overlap_fraction(7.0, 1.0, morning), 1.0);
  EXPECT_DOUBLE_EQ(rush_overlap_fraction(6.5, 1.0, morning), 0.5);
  EXPECT_DOUBLE_EQ(rush_overlap_fraction(10.0, 2.0, both), 0.0);
}

TEST(RushOverlap, WrapsPastMidnight) {
  const std::vector<RushWindow> w{{7.0, 9.0}};
  // 30:00 is 06:00 on the next day.
  EXPECT_DOUBLE_EQ(rush_overlap_fraction(30.0, 2.0, w), 0.5);
  EXPECT_DOUBLE_EQ(rush_overlap_fraction(23.0, 2.0, {{{0.0, 1.0}}}), 0.5);
}

TEST(TravelTime, DeterministicAndZeroVariance) {
  RandomStreams r(1);
  StochasticParams det;
  det.deterministic = true;
  EXPECT_EQ(sample_travel_time(2.0, 1.0, det, r), 2.0);
  StochasticParams flat = quiet();
  flat.travel_std_factor = 0.0;
  EXPECT_EQ(sample_travel_time(3.5, 1.0, flat, r), 3.5);
}

// Mean and spread against an independent clipped-Gaussian sampler.
TEST(TravelTime, MonteCarloMatchesIndependentSampler) {
  const auto p = quiet();
  RandomStreams r(2024);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = sample_travel_time(1.0, 10.0, p, r);
    ASSERT_GE(t, 0.5);
    ASSERT_LE(t, 2.0);
    sum += t;
    sq += t * t;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);

  std::mt19937_64 ref_rng(77);
  std::normal_distribution<double> g(1.0, 0.15);
  double rsum = 0.0, rsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = std::clamp(g(ref_rng), 0.5, 2.0);
    rsum += t;
    rsq += t * t;
  }
  const double rmean = rsum / n;
  const double rsd = std::sqrt(rsq / n - rmean * rmean);

  EXPECT_NEAR(mean, 1.0, 0.01);
  EXPECT_GE(sd, 0.13);
  EXPECT_LE(sd, 0.16);
  EXPECT_NEAR(mean, rmean, 0.005);
  EXPECT_NEAR(sd, rsd, 0.005);
}

TEST(TravelTime, RushHourWidensSpread) {
  auto p = quiet();
  p.rush_windows = {{7.0, 9.0}};
  p.day_start_hour = 0.0;
  auto spread = [&](double depart) {
    RandomStreams r(31);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double t = sample_travel_time(1.0, depart, p, r);
      sum += t;
      sq += t * t;
    }
    const double m = sum / 20000;
    return std::sqrt(sq / 20000 - m * m);
  };
  EXPECT_NEAR(spread(12.0), 0.15, 0.005);
  EXPECT_GT(spread(7.0), 0.25);
}

TEST(EnergyCoeff, Examples) {
  const auto p = quiet();
  RandomStreams r(1);
  EXPECT_DOUBLE_EQ(sample_energy_coeff(1.0, 1.0, p, r), 1.0);
  EXPECT_DOUBLE_EQ(sample_energy_coeff(1.4, 1.0, p, r), 1.2);
  EXPECT_DOUBLE_EQ(sample_energy_coeff(0.5, 1.0, p, r), 0.9);
}

TEST(EnergyCoeff, AlwaysWithinClip) {
  StochasticParams p;
  p.energy_noise_std = 0.5;
  RandomStreams r(9);
  for (int i = 0; i < 10000; ++i) {
    const double xi = sample_energy_coeff(0.5 + 1.5 * (i % 7) / 6.0, 1.0, p, r);
    ASSERT_GE(xi, p.xi_low);
    ASSERT_LE(xi, p.xi_high);
  }
}

TEST(Unloading, Examples) {
  RandomStreams r(4);
  StochasticParams fixed;
  EXPECT_EQ(sample_unloading(fixed, r), 0.2);

  StochasticParams st;
  st.unloading.stochastic = true;
  for (int i = 0; i < 10000; ++i) {
    const double u = sample_unloading(st, r);
    ASSERT_GE(u, 0.05);
    ASSERT_LE(u, 0.6);
  }
  st.deterministic = true;
  EXPECT_EQ(sample_unloading(st, r), 0.2);
}
