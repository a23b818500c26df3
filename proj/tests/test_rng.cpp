#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "iqm/rng.hpp"

using namespace iqm;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, ZeroCounterZeroKey) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, AllOnes) {
  const auto out = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, PiDigits) {
  const auto out = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(SeededStream, SameSeedSameSequence) {
  SeededStream a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.draws(), 100u);
}

TEST(SeededStream, DifferentSeedsDiffer) {
  SeededStream a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(SeededStream, SplitIsPureFunctionOfLabel) {
  const SeededStream root(7);
  auto c1 = root.split(3);
  auto c2 = root.split(3);
  EXPECT_EQ(c1.key(), c2.key());
  EXPECT_EQ(c1.next_u64(), c2.next_u64());
  // Drawing from the parent does not change its children.
  SeededStream parent(7);
  parent.next_u64();
  auto c3 = parent.split(3);
  auto c4 = root.split(3);
  EXPECT_EQ(c3.next_u64(), c4.next_u64());
}

TEST(SeededStream, SplitChildrenAreDistinct) {
  const SeededStream root(99);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t label = 0; label < 1000; ++label) firsts.insert(root.split(label).next_u64());
  EXPECT_EQ(firsts.size(), 1000u);
  std::set<std::uint64_t> keys;
  for (std::uint64_t label = 0; label < 100; ++label) keys.insert(root.split(label).split(label).key());
  EXPECT_EQ(keys.size(), 100u);
}

TEST(SeededStream, UnitIntervalAndMean) {
  SeededStream s(5);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.next_unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // Mean of U(0,1) has standard error 1/sqrt(12 n).
  EXPECT_NEAR(sum / n, 0.5, 5.0 / std::sqrt(12.0 * n));
}

TEST(SeededStream, DescriptorMentionsSeedAndKey) {
  const SeededStream s(0x2a, 0x10);
  EXPECT_NE(s.descriptor().find("2a"), std::string::npos);
  EXPECT_NE(s.descriptor().find("10"), std::string::npos);
}
