#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "specfid/rng.hpp"

using specfid::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiverge) {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformRangeAndMean) {
  Rng r(7);
  double sum = 0.0;
  constexpr int kDraws = 200000;
  for (int i = 0; i < kDraws; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // Standard error of the mean is ~6.5e-4.
  EXPECT_NEAR(sum / kDraws, 0.5, 5e-3);
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  constexpr int kDraws = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / kDraws, 0.0, 0.01);
  EXPECT_NEAR(s2 / kDraws, 1.0, 0.02);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng r(3);
  std::vector<int> hist(6, 0);
  for (int i = 0; i < 60000; ++i) {
    const auto v = r.below(6);
    ASSERT_LT(v, 6u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  r.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Rng, SubstreamLeavesParentUntouched) {
  Rng a(9);
  const Rng before = a;
  Rng child = a.substream(1);
  (void)child.next_u64();
  EXPECT_TRUE(a == before);
  Rng c1 = a.substream(1), c2 = a.substream(2), c1b = a.substream(1);
  EXPECT_EQ(c1.next_u64(), c1b.next_u64());
  EXPECT_NE(a.substream(1).next_u64(), c2.next_u64());
}
