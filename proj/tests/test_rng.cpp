#include <gtest/gtest.h>

#include <random>
#include <set>

#include "spikelink/rng.hpp"
#include "spikelink/stats.hpp"

using namespace spikelink;

// Known-answer vectors published with the reference Philox implementation.
TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, SameSeedAndStreamReproduce) {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs_stream |= x != c();
    differs_seed |= x != d();
  }
  EXPECT_TRUE(differs_stream);
  EXPECT_TRUE(differs_seed);
}

TEST(RandomStream, UniformMomentsAndRange) {
  RandomStream s(1, 0);
  std::vector<double> u;
  for (int i = 0; i < 200000; ++i) {
    const double x = s.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    u.push_back(x);
  }
  EXPECT_NEAR(stats::mean(u), 0.5, 0.005);
  EXPECT_NEAR(stats::stddev(u), std::sqrt(1.0 / 12.0), 0.005);
  RandomStream t(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = t.uniform_open_closed();
    ASSERT_GT(x, 0.0);
    ASSERT_LE(x, 1.0);
  }
}

TEST(RandomStream, NormalMoments) {
  RandomStream s(9, 3);
  std::vector<double> z;
  for (int i = 0; i < 200000; ++i) z.push_back(s.normal());
  EXPECT_NEAR(stats::mean(z), 0.0, 0.01);
  EXPECT_NEAR(stats::stddev(z), 1.0, 0.01);
}

TEST(RandomStream, WorksWithStandardDistributions) {
  RandomStream s(5, 5);
  std::uniform_int_distribution<int> die(1, 6);
  std::set<int> seen;
  for (int i = 0; i < 600; ++i) seen.insert(die(s));
  EXPECT_EQ(seen.size(), 6u);
}

TEST(StreamId, DistinctPurposesAndIndices) {
  EXPECT_NE(stream_id(1, 0), stream_id(0, 1));
  EXPECT_EQ(stream_id(0x50, 3), (std::uint64_t{0x50} << 32) | 3u);
}
