#include <gtest/gtest.h>

#include "camokit/skeleton.hpp"
#include "oracles.hpp"

using namespace camokit;

namespace {

int neighbours8(const BinaryMask& m, int y, int x) {
    int n = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            if ((dy || dx) && m.contains(y + dy, x + dx) && m(y + dy, x + dx)) {
                ++n;
            }
        }
    }
    return n;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && !b[i]) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST(NeighbourhoodCode, BitsRunClockwiseFromNorth) {
    BinaryMask m(3, 3);
    m(0, 1) = 1;  // N
    m(1, 2) = 1;  // E
    m(2, 0) = 1;  // SW
    EXPECT_EQ(neighbourhood_code(m, 1, 1), 0b00100101);
    EXPECT_EQ(neighbourhood_code(m, 0, 0), 0b00000100);  // only E of the corner
}

TEST(SimplePoint, AgreesWithComponentCountsOnAll256Codes) {
    for (int code = 0; code < 256; ++code) {
        EXPECT_EQ(is_simple(static_cast<std::uint8_t>(code)), oracle::simple_by_components(static_cast<std::uint8_t>(code)))
            << "code " << code;
    }
}

TEST(Skeletonize, EmptyStaysEmpty) { EXPECT_EQ(skeletonize(BinaryMask(6, 6)), BinaryMask(6, 6)); }

TEST(Skeletonize, ThinLineIsUnchanged) {
    BinaryMask m(9, 12);
    for (int x = 1; x < 11; ++x) {
        m(4, x) = 1;
    }
    EXPECT_EQ(skeletonize(m), m);
    BinaryMask diag(8, 8);
    for (int i = 0; i < 8; ++i) {
        diag(i, i) = 1;
    }
    EXPECT_EQ(skeletonize(diag), diag);
}

TEST(Skeletonize, ThickAnnulusBecomesClosedLoop) {
    BinaryMask m(15, 15);
    for (int y = 0; y < 15; ++y) {
        for (int x = 0; x < 15; ++x) {
            const bool inner = y >= 3 && y < 12 && x >= 3 && x < 12;
            m(y, x) = inner ? 0 : 1;
        }
    }
    ASSERT_EQ(euler_number(m), 0);
    const BinaryMask s = skeletonize(m);
    EXPECT_EQ(euler_number(s), 0);
    EXPECT_FALSE(has_square_block(s));
    for (int y = 0; y < 15; ++y) {
        for (int x = 0; x < 15; ++x) {
            if (s(y, x)) {
                EXPECT_EQ(neighbours8(s, y, x), 2) << y << "," << x;
            }
        }
    }
}

TEST(Skeletonize, FilledDiskShrinksToConnectedCurve) {
    BinaryMask m(21, 21);
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) {
            m(y, x) = (y - 10) * (y - 10) + (x - 10) * (x - 10) <= 64 ? 1 : 0;
        }
    }
    const BinaryMask s = skeletonize(m);
    EXPECT_GT(count_foreground(s), 0u);
    EXPECT_LT(count_foreground(s), count_foreground(m) / 4);
    EXPECT_EQ(connected_components(s, Connectivity::Eight).count, 1);
}

TEST(SkeletonizeProperty, SubsetThinAndTopologyPreserving) {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const int holes = trial % 4;
        const BinaryMask m = oracle::holey_shape(32, holes, rng);
        const BinaryMask s = skeletonize(m);
        EXPECT_TRUE(subset(s, m));
        EXPECT_FALSE(has_square_block(s));
        EXPECT_EQ(euler_number(s), euler_number(m)) << "trial " << trial;
        EXPECT_EQ(skeletonize(s), s);
    }
}

TEST(SkeletonizeProperty, RandomNoiseKeepsEulerNumber) {
    Rng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const BinaryMask m = oracle::random_mask(14, 14, 0.55, rng);
        const BinaryMask s = skeletonize(m);
        EXPECT_TRUE(subset(s, m));
        EXPECT_EQ(euler_number(s), euler_number(m));
        // A 2x2 block survives only when none of its pixels can go without
        // changing the topology.
        for (int y = 0; y + 1 < s.height(); ++y) {
            for (int x = 0; x + 1 < s.width(); ++x) {
                if (s(y, x) && s(y, x + 1) && s(y + 1, x) && s(y + 1, x + 1)) {
                    for (auto [py, px] : {std::pair{y, x}, {y, x + 1}, {y + 1, x}, {y + 1, x + 1}}) {
                        EXPECT_FALSE(is_simple(neighbourhood_code(s, py, px)));
                    }
                }
            }
        }
    }
}
