#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "spikelink/core.hpp"

using namespace spikelink;

TEST(ValidateFrame, AcceptsInRangeFrame) {
  const ContinuousFrame f{0, {0.0, 0.5}};
  EXPECT_EQ(validate_frame(f, 2), f);
}

TEST(ValidateFrame, RejectsWrongWidth) {
  EXPECT_THROW(validate_frame(ContinuousFrame{0, {0.0}}, 2), WidthMismatch);
}

TEST(ValidateFrame, ReportsFirstOffendingIndex) {
  try {
    validate_frame(ContinuousFrame{0, {1.0001, 0.0}}, 2);
    FAIL() << "expected RangeViolation";
  } catch (const RangeViolation& e) {
    EXPECT_EQ(e.index(), 0u);
  }
  try {
    validate_frame(ContinuousFrame{0, {0.2, -7.0, 3.0}}, 3);
    FAIL() << "expected RangeViolation";
  } catch (const RangeViolation& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(ValidateFrame, NanIsOutOfRange) {
  EXPECT_THROW(validate_frame(ContinuousFrame{0, {std::nan("")}}, 1), RangeViolation);
}

TEST(ClampFrame, ClampsAndKeepsInRangeValues) {
  EXPECT_EQ(clamp_frame(std::vector<double>{2.0, -3.0}), (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(clamp_frame(std::vector<double>{0.25}), (std::vector<double>{0.25}));
}

TEST(ClampFrame, RejectsNonFinite) {
  EXPECT_THROW(clamp_frame(std::vector<double>{std::nan("")}), NonFinite);
  try {
    clamp_frame(std::vector<double>{0.0, std::numeric_limits<double>::infinity()});
    FAIL();
  } catch (const NonFinite& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(SimClock, TimeIsDerivedFromTickWithoutDrift) {
  const double dt = 0.001;
  double accumulated = 0.0;
  for (std::int64_t k = 0; k < 1'000'000; ++k) accumulated += dt;
  const SimClock c(dt, 1'000'000);
  EXPECT_EQ(c.time(), 1'000'000 * dt);
  EXPECT_EQ(c.time(), 1000.0);
  // The derived value is exact where naive accumulation is not.
  EXPECT_NE(accumulated, 1000.0);
  for (std::int64_t k : {0, 1, 7, 12345, 999'999}) {
    EXPECT_EQ(SimClock(0.05, k).time(), static_cast<double>(k) * 0.05);
    EXPECT_EQ(SimClock(0.05, k).tick_end(), static_cast<double>(k + 1) * 0.05);
  }
}

TEST(SimClock, RejectsBadArguments) {
  EXPECT_THROW(SimClock(0.0), Error);
  EXPECT_THROW(SimClock(-1.0), Error);
  EXPECT_THROW(SimClock(0.1, -1), Error);
  EXPECT_EQ(SimClock(0.1, 3).next().tick_index(), 4);
}

TEST(SpikeBatch, ValidityChecksWindowOrderAndIds) {
  SpikeBatch b{2, {{0, 0.2}, {1, 0.2}, {0, 0.25}}};
  EXPECT_TRUE(batch_is_valid(b, 0.1, 2));
  EXPECT_FALSE(batch_is_valid(b, 0.1, 1));  // neuron 1 out of range
  SpikeBatch late{2, {{0, 0.35}}};
  EXPECT_FALSE(batch_is_valid(late, 0.1, 1));  // window is half-open
  SpikeBatch unsorted{2, {{1, 0.2}, {0, 0.2}}};
  EXPECT_FALSE(batch_is_valid(unsorted, 0.1, 2));
  SpikeBatch dup{2, {{0, 0.2}, {0, 0.2}}};
  EXPECT_FALSE(batch_is_valid(dup, 0.1, 2));
  unsorted.sort();
  EXPECT_TRUE(batch_is_valid(unsorted, 0.1, 2));
}

TEST(SpikeBatch, MergingDisjointIdRangesYieldsValidBatch) {
  SpikeBatch a{5, {{0, 0.50}, {1, 0.52}, {0, 0.58}}};
  SpikeBatch b{5, {{10, 0.50}, {11, 0.51}, {10, 0.59}}};
  const SpikeBatch m = merge_batches(a, b);
  EXPECT_EQ(m.events.size(), 6u);
  EXPECT_TRUE(batch_is_valid(m, 0.1, 12));
  SpikeBatch resorted = m;
  resorted.sort();
  EXPECT_EQ(resorted, m);
  EXPECT_THROW(merge_batches(a, SpikeBatch{4, {}}), Error);
}
