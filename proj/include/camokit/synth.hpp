#pragma once

#include <cstdint>

#include "camokit/raster.hpp"
#include "camokit/sketch_augment.hpp"

namespace camokit {

struct SynthConfig {
    int height = 160;
    int width = 160;
    int blob_count = 3;
    double delta = 0.1;         // texture bias inside the object, in [0, 0.5]
    double noise_scale = 8.0;   // lattice spacing of the value noise, pixels
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthSample {
    ProbMap image;
    BinaryMask mask;
    BinaryMask sketch;
};

// Bilinear value noise on a seeded lattice, two octaves, values in [0, 1].
ProbMap value_noise(int height, int width, double scale, std::uint64_t seed);

// Union of overlapping disks, majority-smoothed, largest 8-component kept.
BinaryMask blob_mask(int height, int width, int blob_count, std::uint64_t seed);

// Binarized 3x3 boundary of the mask, augmented. Throws on an empty mask.
BinaryMask gt_sketch(const BinaryMask& mask, const AugmentConfig& config);

SynthSample gen_sample(const SynthConfig& config);

}  // namespace camokit
