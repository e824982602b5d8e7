#include <gtest/gtest.h>

#include "camokit/error.hpp"
#include "camokit/losses.hpp"
#include "camokit/synth.hpp"
#include "oracles.hpp"

using namespace camokit;

namespace {

BinaryMask inner_ring(const BinaryMask& mask) { return threshold(extract_boundary(to_prob(mask), 3), 0.5); }

SynthConfig seeded(std::uint64_t seed) {
    SynthConfig c;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(SynthConfig, Validation) {
    SynthConfig c;
    c.height = 31;
    EXPECT_THROW(c.validate(), ParameterError);
    c = {};
    c.delta = 0.6;
    EXPECT_THROW(c.validate(), ParameterError);
    c = {};
    c.blob_count = 0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = {};
    c.noise_scale = NAN;
    EXPECT_THROW(c.validate(), ParameterError);
}

TEST(ValueNoise, InRangeAndSeeded) {
    const ProbMap a = value_noise(40, 50, 8.0, 1);
    for (double v : a.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(value_noise(40, 50, 8.0, 1), a);
    EXPECT_NE(value_noise(40, 50, 8.0, 2), a);
}

TEST(GenSample, SameSeedIsBitIdentical) {
    const SynthSample a = gen_sample(seeded(9)), b = gen_sample(seeded(9));
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.mask, b.mask);
    EXPECT_EQ(a.sketch, b.sketch);
    EXPECT_NE(gen_sample(seeded(10)).mask, a.mask);
}

TEST(GenSample, ZeroDeltaHidesTheObject) {
    // The texture stream does not depend on the mask, so with no bias the
    // image is the same whatever object is placed.
    SynthConfig c = seeded(4);
    c.delta = 0.0;
    const SynthSample a = gen_sample(c);
    c.blob_count = 1;
    const SynthSample b = gen_sample(c);
    EXPECT_NE(a.mask, b.mask);
    EXPECT_EQ(a.image, b.image);
}

TEST(GenSample, ObjectIsBiased) {
    SynthConfig c = seeded(5);
    c.delta = 0.0;
    const SynthSample flat = gen_sample(c);
    c.delta = 0.2;
    const SynthSample biased = gen_sample(c);
    for (std::size_t i = 0; i < flat.image.size(); ++i) {
        if (!biased.mask[i]) {
            EXPECT_EQ(biased.image[i], flat.image[i]);
        } else if (flat.image[i] > 0.25 && flat.image[i] < 0.75) {
            EXPECT_NEAR(std::abs(biased.image[i] - flat.image[i]), 0.2, 1e-12);
        }
    }
}

TEST(GenSampleProperty, MaskNonEmptyAndNotFullFrame) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const SynthSample smp = gen_sample(seeded(s));
        const std::size_t on = oracle::pixels_of(smp.mask).size();
        EXPECT_GT(on, 0u) << s;
        EXPECT_LT(on, smp.mask.size()) << s;
        int comps = 0;
        oracle::flood_labels(smp.mask, true, &comps);
        EXPECT_EQ(comps, 1) << s;
        for (double v : smp.image.data()) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
        EXPECT_GT(oracle::pixels_of(smp.sketch).size(), 0u) << s;
    }
}

TEST(GtSketch, EmptyMaskThrows) { EXPECT_THROW(gt_sketch(BinaryMask(40, 40), AugmentConfig{}), ValidationError); }

TEST(GtSketch, FilledSquareCleanContour) {
    const SynthConfig size;
    BinaryMask m(size.height, size.width);
    for (int y = 40; y < 120; ++y) {
        for (int x = 40; x < 120; ++x) {
            m(y, x) = 1;
        }
    }
    AugmentConfig cfg;
    cfg.K = 0;
    const BinaryMask s = gt_sketch(m, cfg);
    EXPECT_LE(oracle::hausdorff(s, inner_ring(m)), 3.0);
    EXPECT_EQ(euler_number(s), 0);  // still one closed loop
}

TEST(GtSketchProperty, CleanSketchWithinThreePixels) {
    AugmentConfig cfg;
    cfg.K = 0;
    int over = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const BinaryMask mask = gen_sample(seeded(s)).mask;
        const double h = oracle::hausdorff(gt_sketch(mask, cfg), inner_ring(mask));
        over += h > 3.0;
        EXPECT_LE(h, 3.0) << "seed " << s;
    }
    RecordProperty("seeds_over_3px", over);
}

TEST(GtSketchProperty, PerturbedSketchWithinDeltaPlusBudget) {
    AugmentConfig cfg;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const BinaryMask ring = inner_ring(gen_sample(seeded(s)).mask);
        cfg.seed = s;
        const AugmentResult r = augment(ring, cfg);
        EXPECT_LE(oracle::hausdorff(r.raster, ring), r.delta + 3.0) << "seed " << s;
    }
}

TEST(GtSketchProperty, StrongerPerturbationMovesFurther) {
    double c8 = 0, c20 = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const BinaryMask ring = inner_ring(gen_sample(seeded(s)).mask);
        AugmentConfig cfg;
        cfg.seed = s;
        cfg.K = 8;
        c8 += oracle::chamfer(gt_sketch(gen_sample(seeded(s)).mask, cfg), ring);
        cfg.K = 20;
        c20 += oracle::chamfer(gt_sketch(gen_sample(seeded(s)).mask, cfg), ring);
    }
    EXPECT_LT(c8, c20);
}
