#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "camokit/error.hpp"
#include "camokit/raster.hpp"
#include "camokit/raster_io.hpp"
#include "oracles.hpp"

using namespace camokit;

namespace {

BinaryMask from_rows(const std::vector<std::string>& rows) {
    BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            m(y, x) = rows[y][x] == '#' ? 1 : 0;
        }
    }
    return m;
}

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "camokit_raster_test";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
    EXPECT_THROW(BinaryMask(0, 3), ParameterError);
    EXPECT_THROW(ProbMap(2, 2, std::vector<double>(3)), ValidationError);
}

TEST(Maxpool, ThetaOneIsIdentity) {
    Rng rng(1);
    const ProbMap m = oracle::random_prob(7, 5, rng);
    EXPECT_EQ(maxpool(m, 1), m);
}

TEST(Maxpool, AllZeroStaysZero) {
    const ProbMap m(5, 5, 0.0);
    EXPECT_EQ(maxpool(m, 3), m);
}

TEST(Maxpool, CentreImpulseSpreadsToBlock) {
    ProbMap m(5, 5, 0.0);
    m(2, 2) = 1.0;
    const RealMap out = maxpool(m, 3);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            const bool in_block = y >= 1 && y <= 3 && x >= 1 && x <= 3;
            EXPECT_EQ(out(y, x), in_block ? 1.0 : 0.0) << y << "," << x;
        }
    }
}

TEST(Maxpool, RejectsEvenOrNonPositiveWindow) {
    const ProbMap m(4, 4, 0.5);
    EXPECT_THROW(maxpool(m, 2), ParameterError);
    EXPECT_THROW(maxpool(m, 0), ParameterError);
    EXPECT_THROW(maxpool(m, -3), ParameterError);
}

TEST(Maxpool, MatchesNaiveWindowScan) {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const int h = 1 + static_cast<int>(rng.below(12));
        const int w = 1 + static_cast<int>(rng.below(12));
        const int theta = 1 + 2 * static_cast<int>(rng.below(4));
        const double border = trial % 2 ? 1.0 : 0.0;
        const ProbMap m = oracle::random_prob(h, w, rng);
        EXPECT_EQ(maxpool(m, theta, border), oracle::naive_maxpool(m, theta, border));
        EXPECT_EQ(maxpool_argmax(m, theta, border).values, oracle::naive_maxpool(m, theta, border));
    }
}

TEST(Maxpool, ArgmaxTiesGoToFirstInScanOrder) {
    const ProbMap m(3, 3, 0.5);
    const PoolResult r = maxpool_argmax(m, 3, 0.0);
    EXPECT_EQ(r.argmax[m.index(1, 1)], 0);
    EXPECT_EQ(r.argmax[m.index(2, 2)], static_cast<std::ptrdiff_t>(m.index(1, 1)));
    // The border only wins when strictly greater.
    const PoolResult b = maxpool_argmax(ProbMap(3, 3, 1.0), 3, 1.0);
    EXPECT_EQ(b.argmax[0], 0);
    const PoolResult c = maxpool_argmax(ProbMap(3, 3, 0.25), 3, 1.0);
    EXPECT_EQ(c.argmax[0], -1);
}

TEST(MaxpoolProperty, MonotoneExtensiveAndComposable) {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const ProbMap a = oracle::random_prob(9, 11, rng);
        ProbMap b = a;
        for (double& v : b.data()) {
            v = std::min(1.0, v + 0.3 * rng.uniform());
        }
        const int theta = 1 + 2 * static_cast<int>(rng.below(3));
        const RealMap pa = maxpool(a, theta), pb = maxpool(b, theta);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_LE(pa[i], pb[i]);
            EXPECT_GE(pa[i], a[i]);
        }
        EXPECT_EQ(maxpool(maxpool(a, theta), theta), maxpool(a, 2 * theta - 1));
    }
}

TEST(Components, EmptyMaskHasNone) {
    EXPECT_EQ(connected_components(BinaryMask(4, 4), Connectivity::Eight).count, 0);
}

TEST(Components, DiagonalPairDependsOnConnectivity) {
    const BinaryMask m = from_rows({"#.", ".#"});
    EXPECT_EQ(connected_components(m, Connectivity::Eight).count, 1);
    EXPECT_EQ(connected_components(m, Connectivity::Four).count, 2);
}

TEST(Components, MatchesFloodFillOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const BinaryMask m = oracle::random_mask(10, 10, 0.2 + 0.5 * rng.uniform(), rng);
        for (bool eight : {false, true}) {
            int count = 0;
            const Grid<int> expected = oracle::flood_labels(m, eight, &count);
            const LabelMap got = connected_components(m, eight ? Connectivity::Eight : Connectivity::Four);
            EXPECT_EQ(got.count, count);
            EXPECT_EQ(got.labels, expected);
        }
    }
}

TEST(Components, CountInvariantUnderBackgroundPadding) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const BinaryMask m = oracle::random_mask(8, 9, 0.4, rng);
        BinaryMask padded(12, 14);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 9; ++x) {
                padded(y + 1, x + 3) = m(y, x);
            }
        }
        for (auto c : {Connectivity::Four, Connectivity::Eight}) {
            EXPECT_EQ(connected_components(m, c).count, connected_components(padded, c).count);
        }
    }
}

TEST(Euler, FilledSquareIsOne) { EXPECT_EQ(euler_number(BinaryMask(3, 3, 1)), 1); }

TEST(Euler, RingIsZero) {
    const BinaryMask ring = from_rows({"#####", "#...#", "#...#", "#...#", "#####"});
    EXPECT_EQ(euler_number(ring), 0);
    EXPECT_EQ(hole_count(ring), 1);
}

TEST(Euler, MatchesBitQuadAndDualOracles) {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const BinaryMask m = oracle::random_mask(16, 16, 0.2 + 0.6 * rng.uniform(), rng);
        EXPECT_EQ(euler_number(m), oracle::dual_euler(m));
        EXPECT_EQ(euler_number(m), oracle::bitquad_euler(m));
    }
}

TEST(Euler, TranslationInvariant) {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const BinaryMask m = oracle::random_mask(10, 10, 0.5, rng);
        const int oy = static_cast<int>(rng.below(6)), ox = static_cast<int>(rng.below(6));
        BinaryMask big(16, 16);
        for (int y = 0; y < 10; ++y) {
            for (int x = 0; x < 10; ++x) {
                big(y + oy, x + ox) = m(y, x);
            }
        }
        EXPECT_EQ(euler_number(m), euler_number(big));
    }
}

TEST(PgmIo, WhitePixelIsForeground) {
    const std::string bytes = std::string("P5\n2 1\n255\n") + '\xff' + '\x00';
    const BinaryMask m = decode_pgm_mask(bytes);
    EXPECT_EQ(m(0, 0), 1);
    EXPECT_EQ(m(0, 1), 0);
}

TEST(PgmIo, ThresholdAt128) {
    const std::string bytes = std::string("P5\n# comment\n2 1\n255\n") + '\x7f' + '\x80';
    const BinaryMask m = decode_pgm_mask(bytes);
    EXPECT_EQ(m(0, 0), 0);
    EXPECT_EQ(m(0, 1), 1);
}

TEST(PgmIo, RoundTripIsExact) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const BinaryMask m = oracle::random_mask(1 + static_cast<int>(rng.below(20)),
                                                 1 + static_cast<int>(rng.below(20)), 0.5, rng);
        EXPECT_EQ(decode_pgm_mask(encode_pgm(m)), m);
    }
}

TEST(PgmIo, MalformedInputsAreFormatErrors) {
    EXPECT_THROW(decode_pgm_mask("P2\n1 1\n255\n0"), FormatError);
    EXPECT_THROW(decode_pgm_mask("P5\n2 2\n255\n\x01"), FormatError);
    EXPECT_THROW(decode_pgm_mask("P5\n0 2\n255\n"), FormatError);
    EXPECT_THROW(decode_pgm_mask(""), FormatError);
}

TEST(Pf32Io, RoundTripIsBitExact) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        ProbMap m(1 + static_cast<int>(rng.below(16)), 1 + static_cast<int>(rng.below(16)));
        for (double& v : m.data()) {
            v = static_cast<float>(rng.uniform());
        }
        EXPECT_EQ(decode_pf32(encode_pf32(m)), m);
    }
}

TEST(Pf32Io, LayoutIsLittleEndianHeightThenWidth) {
    ProbMap m(1, 2);
    m(0, 0) = 1.0;
    m(0, 1) = 0.5;
    const std::string b = encode_pf32(m);
    ASSERT_EQ(b.size(), 4u + 8u + 8u);
    EXPECT_EQ(b.substr(0, 4), "PF32");
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(b[8], 2);
    // 1.0f = 0x3f800000 little endian.
    EXPECT_EQ(static_cast<unsigned char>(b[15]), 0x3f);
    EXPECT_EQ(static_cast<unsigned char>(b[14]), 0x80);
}

TEST(Pf32Io, TruncatedFileIsFormatError) {
    const std::string b = encode_pf32(ProbMap(3, 3, 0.25));
    EXPECT_THROW(decode_pf32(b.substr(0, b.size() - 1)), FormatError);
    EXPECT_THROW(decode_pf32(b.substr(0, 10)), FormatError);
    EXPECT_THROW(decode_pf32("PF33" + b.substr(4)), FormatError);
}

TEST(Pf32Io, OutOfRangeIsValidationError) {
    std::string b = encode_pf32(ProbMap(1, 1, 0.0));
    const float bad = 1.5f;
    std::memcpy(b.data() + 12, &bad, 4);
    EXPECT_THROW(decode_pf32(b), ValidationError);
}

TEST(RasterFiles, DispatchOnMagicAndRoundTrip) {
    const auto dir = temp_dir();
    Rng rng(10);
    const BinaryMask mask = oracle::random_mask(6, 7, 0.5, rng);
    ProbMap prob(5, 4);
    for (double& v : prob.data()) {
        v = static_cast<float>(rng.uniform());
    }
    save_raster(mask, dir / "m.pgm");
    save_raster(prob, dir / "p.pf32");
    EXPECT_EQ(std::get<BinaryMask>(load_raster(dir / "m.pgm")), mask);
    EXPECT_EQ(std::get<ProbMap>(load_raster(dir / "p.pf32")), prob);
    EXPECT_EQ(load_as_prob(dir / "m.pgm"), to_prob(mask));
    EXPECT_THROW(load_mask(dir / "missing.pgm"), IoError);
}

TEST(RasterFiles, DoublePrecisionNarrowsOnceThenStable) {
    ProbMap m(1, 1, 0.1);  // not representable as float
    const ProbMap once = decode_pf32(encode_pf32(m));
    EXPECT_NE(once, m);
    EXPECT_EQ(decode_pf32(encode_pf32(once)), once);
}
