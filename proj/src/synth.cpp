#include "camokit/synth.hpp"

#include <algorithm>
#include <cmath>

#include "camokit/error.hpp"
#include "camokit/losses.hpp"
#include "camokit/rng.hpp"

namespace camokit {

void SynthConfig::validate() const {
    if (height < 32 || width < 32) {
        throw ParameterError("synthetic images must be at least 32x32");
    }
    if (blob_count < 1) {
        throw ParameterError("blob_count must be >= 1");
    }
    if (!std::isfinite(delta) || delta < 0.0 || delta > 0.5) {
        throw ParameterError("delta must lie in [0, 0.5]");
    }
    if (!std::isfinite(noise_scale) || noise_scale < 1.0) {
        throw ParameterError("noise_scale must be a finite value >= 1");
    }
}

namespace {

RealMap lattice_noise(int height, int width, double scale, Rng& rng) {
    const int gh = static_cast<int>(std::ceil(height / scale)) + 2;
    const int gw = static_cast<int>(std::ceil(width / scale)) + 2;
    RealMap lattice(gh, gw);
    for (double& v : lattice.data()) {
        v = rng.uniform();
    }
    RealMap out(height, width);
    for (int y = 0; y < height; ++y) {
        const double fy = y / scale;
        const int iy = static_cast<int>(fy);
        const double ty = fy - iy;
        for (int x = 0; x < width; ++x) {
            const double fx = x / scale;
            const int ix = static_cast<int>(fx);
            const double tx = fx - ix;
            const double top = lattice(iy, ix) * (1.0 - tx) + lattice(iy, ix + 1) * tx;
            const double bottom = lattice(iy + 1, ix) * (1.0 - tx) + lattice(iy + 1, ix + 1) * tx;
            out(y, x) = top * (1.0 - ty) + bottom * ty;
        }
    }
    return out;
}

}  // namespace

ProbMap value_noise(int height, int width, double scale, std::uint64_t seed) {
    Rng rng(seed);
    const RealMap coarse = lattice_noise(height, width, scale, rng);
    const RealMap fine = lattice_noise(height, width, std::max(1.0, scale / 4.0), rng);
    ProbMap out(height, width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp((2.0 * coarse[i] + fine[i]) / 3.0, 0.0, 1.0);
    }
    return out;
}

BinaryMask blob_mask(int height, int width, int blob_count, std::uint64_t seed) {
    Rng rng(seed);
    const int side = std::min(height, width);
    const double r_min = 0.15 * side;
    const double r_max = 0.25 * side;
    const double margin = 3.0;
    std::vector<double> cy, cx, rad;
    for (int b = 0; b < blob_count; ++b) {
        const double r = rng.uniform(r_min, r_max);
        const double lo_y = r + margin, hi_y = height - 1 - r - margin;
        const double lo_x = r + margin, hi_x = width - 1 - r - margin;
        double y, x;
        if (b == 0) {
            y = rng.uniform(std::min(lo_y, height * 0.4), std::max(hi_y, height * 0.6));
            x = rng.uniform(std::min(lo_x, width * 0.4), std::max(hi_x, width * 0.6));
        } else {
            // Centre inside an earlier disk so the union stays connected.
            const auto parent = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(b)));
            const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double dist = rng.uniform(0.3, 0.9) * rad[parent];
            y = cy[parent] + dist * std::sin(angle);
            x = cx[parent] + dist * std::cos(angle);
        }
        cy.push_back(std::clamp(y, lo_y, std::max(lo_y, hi_y)));
        cx.push_back(std::clamp(x, lo_x, std::max(lo_x, hi_x)));
        rad.push_back(r);
    }
    BinaryMask raw(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (std::size_t b = 0; b < rad.size(); ++b) {
                const double dy = y - cy[b], dx = x - cx[b];
                if (dy * dy + dx * dx <= rad[b] * rad[b]) {
                    raw(y, x) = 1;
                    break;
                }
            }
        }
    }
    // 5x5 majority vote rounds off the seams between disks.
    BinaryMask smooth(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            int votes = 0;
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    votes += raw.contains(y + dy, x + dx) ? raw(y + dy, x + dx) : 0;
                }
            }
            smooth(y, x) = votes >= 13 ? 1 : 0;
        }
    }
    const LabelMap cc = connected_components(smooth, Connectivity::Eight);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(cc.count) + 1, 0);
    for (int label : cc.labels.data()) {
        ++sizes[static_cast<std::size_t>(label)];
    }
    int keep = 0;
    for (int l = 1; l <= cc.count; ++l) {
        if (keep == 0 || sizes[static_cast<std::size_t>(l)] > sizes[static_cast<std::size_t>(keep)]) {
            keep = l;
        }
    }
    BinaryMask out(height, width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (keep != 0 && cc.labels[i] == keep) ? 1 : 0;
    }
    return out;
}

BinaryMask gt_sketch(const BinaryMask& mask, const AugmentConfig& config) {
    if (count_foreground(mask) == 0) {
        throw ValidationError("cannot derive a sketch from an empty mask");
    }
    const BinaryMask edges = threshold(extract_boundary(to_prob(mask), 3), 0.5);
    return augment(edges, config).raster;
}

SynthSample gen_sample(const SynthConfig& config) {
    config.validate();
    SynthSample s;
    s.mask = blob_mask(config.height, config.width, config.blob_count, derive_seed(config.seed, 1));
    const ProbMap texture = value_noise(config.height, config.width, config.noise_scale, derive_seed(config.seed, 0));
    Rng bias_rng(derive_seed(config.seed, 2));
    const double bias = (bias_rng.uniform() < 0.5 ? -1.0 : 1.0) * config.delta;
    s.image = ProbMap(config.height, config.width);
    for (std::size_t i = 0; i < s.image.size(); ++i) {
        // Texture lives in [0.25, 0.75] so a bias up to 0.25 never clips.
        const double t = 0.25 + 0.5 * texture[i];
        s.image[i] = std::clamp(s.mask[i] ? t + bias : t, 0.0, 1.0);
    }
    AugmentConfig augment_config;
    augment_config.seed = derive_seed(config.seed, 3);
    s.sketch = gt_sketch(s.mask, augment_config);
    return s;
}

}  // namespace camokit
