#include <gtest/gtest.h>

#include <cmath>

#include "delaysa/rng.hpp"

using namespace delaysa;

TEST(Philox, KnownAnswerZero) {
    const auto out = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Stream, SameTripleSameSequence) {
    Stream a(42, 3, Purpose::Path), b(42, 3, Purpose::Path);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DifferentPurposeOrRunDiffers) {
    Stream a(42, 3, Purpose::Path), b(42, 3, Purpose::Reward), c(42, 4, Purpose::Path);
    int same_b = 0, same_c = 0;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        same_b += x == b.next_u64();
        same_c += x == c.next_u64();
    }
    EXPECT_EQ(same_b, 0);
    EXPECT_EQ(same_c, 0);
}

TEST(Stream, UniformMoments) {
    Stream s(1, 0, Purpose::Test);
    double m = 0, m2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        m += u;
        m2 += u * u;
    }
    EXPECT_NEAR(m / n, 0.5, 0.005);
    EXPECT_NEAR(m2 / n, 1.0 / 3.0, 0.005);
}

TEST(Stream, BelowIsInRangeAndUniform) {
    Stream s(2, 0, Purpose::Test);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = s.below(7);
        ASSERT_LT(k, 7u);
        ++counts[k];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Stream, NormalMoments) {
    Stream s(3, 0, Purpose::Test);
    double m = 0, m2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        m += z;
        m2 += z * z;
    }
    EXPECT_NEAR(m / n, 0.0, 0.01);
    EXPECT_NEAR(m2 / n, 1.0, 0.015);
}
